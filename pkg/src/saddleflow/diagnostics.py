"""Post-hoc anatomy of a run: every term of the regret guarantee.

The guarantee bounds the offline-vs-online objective difference by three
terms: the dual-update regret (``dual_regret_term``), a term driven by how
much the optimal residual path deviates from constancy
(``residual_drift_term``), and, for runs with estimated constraint matrices,
a matrix-tracking term (``estimation_term``).  ``bound_components`` computes
all of them along with the measured regret interval and a computable lower
bound on the regret.

``path_deviation`` is the drift functional: for a residual stack e_1..e_T,

    psi_t(e) = || sum_{j<=t} ((T-t)/T) e_j  -  sum_{j>t} (t/T) e_j ||_2,

zero for constant stacks.  ``expected_max_deviation_*`` bound and simulate
``E[max_t psi_t]`` for Gaussian residual stacks.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import penalty as pen
from .offline import OfflineSolution, eval_primal, optimal_error_vectors
from .online import RunTrace, StepSchedule
from .oracle import _argmax_blocks_rows, stack_rounds
from .penalty import PenaltySpec

__all__ = [
    "BoundReport",
    "path_deviation",
    "max_path_deviation",
    "dual_regret_limit",
    "static_dual_gap",
    "bound_components",
    "check_regret_bound",
    "expected_max_deviation_bound",
    "expected_max_deviation_mc",
]


def path_deviation(e_stack, t: int) -> float:
    """The drift functional psi_t of a residual stack, 1 <= t <= T-1."""
    e = np.asarray(e_stack, dtype=float)
    if e.ndim != 2:
        raise ValueError("expected a (T, m) residual stack")
    horizon = e.shape[0]
    if not 1 <= t <= horizon - 1:
        raise ValueError(f"t must be in [1, {horizon - 1}], got {t}")
    head = ((horizon - t) / horizon) * e[:t].sum(axis=0)
    tail = (t / horizon) * e[t:].sum(axis=0)
    return float(np.linalg.norm(head - tail))


def _deviations_all(e: np.ndarray) -> np.ndarray:
    """All psi_t, t = 1..T-1, via the identity
    psi_t(e) = || S_t - (t/T) S_T ||_2 with S_t the prefix sums."""
    horizon = e.shape[0]
    if horizon < 2:
        return np.zeros(0)
    prefix = np.cumsum(e, axis=0)
    ts = np.arange(1, horizon, dtype=float)
    dev = prefix[:-1] - (ts / horizon)[:, None] * prefix[-1]
    return np.linalg.norm(dev, axis=1)


def max_path_deviation(e_stack) -> float:
    """``max_t psi_t`` over t = 1..T-1 (zero when T < 2)."""
    e = np.asarray(e_stack, dtype=float)
    dev = _deviations_all(e)
    return float(dev.max()) if dev.size else 0.0


def dual_regret_limit(schedule: StepSchedule) -> float:
    """Static dual regret guaranteed by the schedule: ``2 r g / sqrt(T)``
    for the fixed convex step, ``g^2 log(e T) / (2 kappa T)`` for the
    strongly convex one."""
    horizon, g = schedule.horizon, schedule.g_bound
    if schedule.dual_mode == "convex_fixed":
        return 2.0 * schedule.r_lambda * g / math.sqrt(horizon)
    return g * g * math.log(math.e * horizon) / (2.0 * schedule.kappa * horizon)


def _conjugate_rows(spec: PenaltySpec, lams: np.ndarray) -> np.ndarray:
    """E* on each row of an in-domain dual stack."""
    if spec.kind == "huber":
        return (lams * lams).sum(axis=1) / (2.0 * spec.smoothness_l)
    return np.zeros(lams.shape[0])


def static_dual_gap(trace: RunTrace, spec: PenaltySpec, lam) -> float:
    """Average over rounds of ``L_t(x_t, lam_t) - L_t(x_t, lam)`` for a
    fixed comparator ``lam``; the reward terms cancel."""
    lam = np.asarray(lam, dtype=float)
    own = -(trace.lambda_hat * trace.residual_true).sum(axis=1) + _conjugate_rows(
        spec, trace.lambda_hat
    )
    other = -(trace.residual_true @ lam) + pen.eval_conjugate(spec, lam)
    return float(np.mean(own - other))


@dataclass(frozen=True)
class BoundReport:
    """All terms of the regret guarantee for one run.

    ``bound_total = dual_regret_term + residual_drift_term +
    estimation_term`` upper-bounds the regret; ``empirical_regret`` is the
    measured upper end (best dual value minus the run's objective), with
    ``empirical_regret_lower`` the other end of the measurement interval
    (subtracting the certificate gap).  ``dual_path_budget`` is the step-size
    budget ``g * sum_t eta_t`` that the realized ``dual_path_variation`` of
    the dual iterates must respect.
    """

    dual_regret_term: float
    max_residual_drift: float
    residual_drift_term: float
    estimation_term: float
    bound_total: float
    empirical_regret: float
    empirical_regret_lower: float
    lower_bound: float
    dual_path_variation: float
    dual_path_budget: float

    def to_dict(self) -> dict:
        return asdict(self)


def _lower_bound(stacked, spec, trace, p_hat, r_t) -> float:
    """Computable regret floor: the average of the per-round dual values at
    the visited dual iterates, minus the run objective and the dual-regret
    credit, clamped at zero.  Valid for runs with known matrices."""
    scores = stacked.u - np.einsum("tmd,tm->td", stacked.a, trace.lambda_hat)
    x = _argmax_blocks_rows(stacked.blocks, scores)
    resid = np.einsum("tmd,td->tm", stacked.a, x) - stacked.b
    values = (
        (stacked.u * x).sum(axis=1)
        - (trace.lambda_hat * resid).sum(axis=1)
        + _conjugate_rows(spec, trace.lambda_hat)
    )
    return max(0.0, float(values.mean()) - p_hat - r_t)


def bound_components(trace: RunTrace, dataset, spec: PenaltySpec,
                     schedule: StepSchedule, offline: OfflineSolution) -> BoundReport:
    """Assemble the full bound report for a run and its offline certificate.

    The drift term uses the certified residuals of the offline solution; the
    estimation term is zero for runs that used the true matrices.  The
    measured regret uses the dual upper bracket of the optimum, which can
    only overstate the regret (never hide a violation).
    """
    horizon = trace.horizon
    if len(dataset) != horizon or schedule.horizon != horizon:
        raise ValueError("trace, dataset and schedule horizons differ")
    stacked = stack_rounds(dataset)

    eps = schedule.g_bound * schedule.eta_sum()
    m_e = max_path_deviation(optimal_error_vectors(dataset, offline))
    s_e = (eps / horizon) * m_e
    r_t = dual_regret_limit(schedule)

    if trace.a_hat is None:
        s_a = 0.0
    else:
        r_x = math.sqrt(max(r.blocks.n_blocks for r in dataset))
        drift = float(
            np.linalg.norm(stacked.a[1:] - stacked.a[:-1], axis=(1, 2)).sum()
        )
        s_a = (
            6.0 * schedule.r_lambda * r_x / math.sqrt(horizon)
            * (schedule.matrix_radius + drift)
        )

    p_hat = eval_primal(dataset, spec, trace.x_hat)
    regret_upper = offline.d_value - p_hat
    variation = float(
        np.linalg.norm(trace.lambda_hat[1:] - trace.lambda_hat[:-1], axis=1).sum()
    )
    return BoundReport(
        dual_regret_term=r_t,
        max_residual_drift=m_e,
        residual_drift_term=s_e,
        estimation_term=s_a,
        bound_total=r_t + s_e + s_a,
        empirical_regret=regret_upper,
        empirical_regret_lower=regret_upper - offline.gap,
        lower_bound=_lower_bound(stacked, spec, trace, p_hat, r_t),
        dual_path_variation=variation,
        dual_path_budget=eps,
    )


def check_regret_bound(report: BoundReport, tol: float = 1e-6) -> bool:
    """True iff the measured regret respects the guarantee."""
    return report.empirical_regret <= report.bound_total + tol


def expected_max_deviation_bound(sigma: float, mu_stack, horizon: int, dim: int) -> float:
    """Bound on ``E[max_t psi_t]`` for a Gaussian-like residual stack with
    mean ``mu_stack`` and coordinate deviation ``sigma``:

        sqrt(sigma^2 m T + w) + sqrt(sigma^2 m T log T)

    with ``w = max_t psi_t(mu)^2``.  Constant means contribute nothing.
    """
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    mu = np.asarray(mu_stack, dtype=float)
    if mu.shape != (horizon, dim):
        raise ValueError(f"mu_stack must have shape ({horizon}, {dim})")
    omega = max_path_deviation(mu) ** 2
    smt = sigma * sigma * dim * horizon
    return math.sqrt(smt + omega) + math.sqrt(smt * math.log(horizon))


def expected_max_deviation_mc(sigma: float, mu_stack, horizon: int, dim: int,
                              n_samples: int, seed: int = 0):
    """Monte Carlo estimate of ``E[max_t psi_t]`` for residual stacks
    ``mu + sigma * N(0, I)``, returned with the closed-form bound."""
    if n_samples < 100:
        raise ValueError("need n_samples >= 100")
    mu = np.asarray(mu_stack, dtype=float)
    if mu.shape != (horizon, dim):
        raise ValueError(f"mu_stack must have shape ({horizon}, {dim})")
    rng = np.random.default_rng(seed)
    samples = mu[None, :, :] + sigma * rng.standard_normal((n_samples, horizon, dim))
    if horizon < 2:
        maxima = np.zeros(n_samples)
    else:
        prefix = np.cumsum(samples, axis=1)
        ts = np.arange(1, horizon, dtype=float) / horizon
        dev = prefix[:, :-1, :] - ts[None, :, None] * prefix[:, -1:, :]
        maxima = np.linalg.norm(dev, axis=2).max(axis=1)
    bound = expected_max_deviation_bound(sigma, mu, horizon, dim)
    return float(maxima.mean()), bound
