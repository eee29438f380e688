"""Online primal-dual optimization against non-additive penalties.

``run_primal_dual`` plays the 1-lookahead game: each round it maximizes the
per-round Lagrangian exactly in the primal and then takes a projected
subgradient step on the dual.  ``run_primal_dual_estimated`` additionally
tracks the (unknown-before-acting) constraint matrices with a projected
subgradient method on the Frobenius ball; the dual update still uses the
true matrix, which is revealed after the action.  ``run_additive_baseline``
is the primal-only heuristic that penalizes each round's residual separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import penalty as pen
from .oracle import _project_block_rows, primal_argmax, residual, stack_rounds
from .penalty import PenaltySpec

__all__ = [
    "RunBounds",
    "StepSchedule",
    "RunTrace",
    "compute_bounds",
    "make_schedule",
    "run_primal_dual",
    "run_primal_dual_estimated",
    "run_additive_baseline",
]


@dataclass(frozen=True)
class RunBounds:
    """Problem constants: ``g_bound`` dominates the dual subgradients,
    ``r_x`` the action norms, ``r_a`` the matrix Frobenius norms and
    ``b_max`` the target norms."""

    g_bound: float
    r_x: float
    r_a: float
    b_max: float


def compute_bounds(dataset, spec: PenaltySpec) -> RunBounds:
    """A-priori constants of a dataset/penalty pair.

    ``r_x = sqrt(max #blocks)`` (each block carries at most one unit
    coordinate); the dual subgradient ``-(a x - b) + grad E*(lam)`` is
    bounded by ``max_t(||a_t||_F r_x + ||b_t||) + r_lambda / L`` (the last
    term only for the Huber penalty, whose conjugate has nonzero gradient).
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    r_x = math.sqrt(max(r.blocks.n_blocks for r in dataset))
    a_norms = [float(np.linalg.norm(r.a)) for r in dataset]
    b_norms = [float(np.linalg.norm(r.b)) for r in dataset]
    g = max(an * r_x + bn for an, bn in zip(a_norms, b_norms))
    if spec.kind == "huber":
        g += spec.r_lambda / spec.smoothness_l
    return RunBounds(g_bound=g, r_x=r_x, r_a=max(a_norms), b_max=max(b_norms))


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes for the dual and matrix updates over a fixed horizon.

    ``dual_mode`` is ``"convex_fixed"`` (eta_t = 2 r_lambda / (g sqrt(T)),
    constant) or ``"strongly_convex"`` (eta_t = 1 / (kappa t)); the matrix
    step is ``nu_t = matrix_radius / sqrt(t)``.  ``r_lambda`` here is the
    Euclidean radius of the dual domain (``sqrt(m)`` times the penalty scale
    for the l1 penalty's box domain).
    """

    dual_mode: str
    g_bound: float
    kappa: float
    r_lambda: float
    horizon: int
    matrix_radius: float

    def __post_init__(self):
        if self.dual_mode not in ("convex_fixed", "strongly_convex"):
            raise ValueError(f"unknown dual mode {self.dual_mode!r}")
        if self.dual_mode == "strongly_convex" and not self.kappa > 0.0:
            raise ValueError("strongly_convex mode requires kappa > 0")
        if not self.g_bound > 0.0:
            raise ValueError("g_bound must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")

    def eta(self, t: int) -> float:
        """Dual step size at round t (1-based)."""
        if self.dual_mode == "convex_fixed":
            return 2.0 * self.r_lambda / (self.g_bound * math.sqrt(self.horizon))
        return 1.0 / (self.kappa * t)

    def nu(self, t: int) -> float:
        """Matrix-estimation step size at round t (1-based)."""
        return self.matrix_radius / math.sqrt(t)

    def eta_sum(self) -> float:
        """Sum of dual step sizes over the horizon."""
        return sum(self.eta(t) for t in range(1, self.horizon + 1))


def make_schedule(dataset, spec: PenaltySpec, bounds: RunBounds | None = None,
                  dual_mode: str | None = None) -> StepSchedule:
    """Schedule for a dataset/penalty pair; picks the strongly convex mode
    automatically when the conjugate penalty is strongly convex."""
    bounds = bounds or compute_bounds(dataset, spec)
    kappa = pen.strong_convexity(spec)
    if dual_mode is None:
        dual_mode = "strongly_convex" if kappa > 0.0 else "convex_fixed"
    return StepSchedule(
        dual_mode=dual_mode,
        g_bound=bounds.g_bound,
        kappa=kappa,
        r_lambda=pen.dual_euclidean_radius(spec, dataset[0].m),
        horizon=len(dataset),
        matrix_radius=bounds.r_a,
    )


@dataclass(frozen=True, eq=False)
class RunTrace:
    """Per-round record of a run: actions ``x_hat`` (T,d), dual iterates
    ``lambda_hat`` (T,m), matrix estimates ``a_hat`` (T,m,d, estimated runs
    only), true residuals (T,m) and rewards (T,)."""

    x_hat: np.ndarray
    lambda_hat: np.ndarray
    a_hat: np.ndarray | None
    residual_true: np.ndarray
    reward: np.ndarray

    @property
    def horizon(self) -> int:
        return self.reward.size


def _check_lambda_init(domain, m, lambda_init):
    if lambda_init is None:
        return np.zeros(m)
    lam = np.asarray(lambda_init, dtype=float)
    if lam.shape != (m,):
        raise ValueError("lambda_init has wrong dimension")
    if not pen.domain_contains(domain, lam):
        raise ValueError("lambda_init outside the dual domain")
    return lam.copy()


def run_primal_dual(dataset, spec: PenaltySpec, schedule: StepSchedule,
                    lambda_init=None) -> RunTrace:
    """Play the online game with known constraint matrices.

    Round t: act on the exact primal maximizer at the current dual iterate,
    then step the dual against the observed residual,
    ``lam <- proj(lam - eta_t (-(a x - b) + grad E*(lam)))``.
    """
    if len(dataset) != schedule.horizon:
        raise ValueError("dataset length does not match the schedule horizon")
    domain = pen.dual_domain(spec)
    lam = _check_lambda_init(domain, dataset[0].m, lambda_init)
    xs, lams, resids, rewards = [], [], [], []
    for t, rnd in enumerate(dataset, start=1):
        x = primal_argmax(rnd, rnd.a, lam)
        e = residual(rnd, x)
        xs.append(x)
        lams.append(lam)
        resids.append(e)
        rewards.append(float(rnd.u @ x))
        grad = -e + pen.conjugate_gradient(spec, lam)
        lam = pen.project_dual(domain, lam - schedule.eta(t) * grad)
    return RunTrace(
        x_hat=np.array(xs), lambda_hat=np.array(lams), a_hat=None,
        residual_true=np.array(resids), reward=np.array(rewards),
    )


def _project_frobenius(a: np.ndarray, radius: float) -> np.ndarray:
    n = float(np.linalg.norm(a))
    if n > radius:
        return a * (radius / n)
    return a


def run_primal_dual_estimated(dataset, spec: PenaltySpec, schedule: StepSchedule,
                              lambda_init=None, a_init=None) -> RunTrace:
    """Play the online game while estimating the constraint matrices.

    The action uses the current estimate; the true matrix is revealed after
    acting and drives both the dual step and the matrix-tracking step
    ``a_est <- proj_F(a_est - nu_t g)`` with ``g`` the normalized difference
    ``(a_est - a_t) / ||a_est - a_t||_F`` (a Frobenius-distance subgradient).
    """
    if len(dataset) != schedule.horizon:
        raise ValueError("dataset length does not match the schedule horizon")
    domain = pen.dual_domain(spec)
    lam = _check_lambda_init(domain, dataset[0].m, lambda_init)
    if a_init is None:
        a_est = np.zeros_like(dataset[0].a)
    else:
        a_est = np.asarray(a_init, dtype=float).copy()
        if a_est.shape != dataset[0].a.shape:
            raise ValueError("a_init has wrong shape")
        if np.linalg.norm(a_est) > schedule.matrix_radius * (1 + 1e-12):
            raise ValueError("a_init outside the Frobenius ball")
    xs, lams, a_hats, resids, rewards = [], [], [], [], []
    for t, rnd in enumerate(dataset, start=1):
        x = primal_argmax(rnd, a_est, lam)
        e = residual(rnd, x)
        xs.append(x)
        lams.append(lam)
        a_hats.append(a_est)
        resids.append(e)
        rewards.append(float(rnd.u @ x))
        grad = -e + pen.conjugate_gradient(spec, lam)
        lam = pen.project_dual(domain, lam - schedule.eta(t) * grad)
        diff = a_est - rnd.a
        dn = float(np.linalg.norm(diff))
        step = (schedule.nu(t) / dn) * diff if dn > 0.0 else 0.0
        a_est = _project_frobenius(a_est - step, schedule.matrix_radius)
    return RunTrace(
        x_hat=np.array(xs), lambda_hat=np.array(lams), a_hat=np.array(a_hats),
        residual_true=np.array(resids), reward=np.array(rewards),
    )


def run_additive_baseline(dataset, spec: PenaltySpec, inner_iters: int = 500,
                          inner_step_scale: float | None = None) -> RunTrace:
    """Primal-only baseline: each round maximize ``u.x - E(a x - b)`` on its
    own by projected subgradient ascent from the zero action.

    Steps are ``s_k = scale / sqrt(k)`` with ``scale = 1 / max(1, ||u||)``
    unless given; the returned action is the best-objective candidate among
    the start, the raw iterates and their running averages.  All rounds are
    advanced in lockstep (they are independent problems).
    """
    if inner_iters < 1:
        raise ValueError("inner_iters must be >= 1")
    stacked = stack_rounds(dataset)
    a, b, u, blocks = stacked.a, stacked.b, stacked.u, stacked.blocks
    horizon = stacked.horizon
    if inner_step_scale is None:
        scale = 1.0 / np.maximum(1.0, np.linalg.norm(u, axis=1))
    else:
        scale = np.full(horizon, float(inner_step_scale))

    x = np.zeros_like(u)
    res = -b.copy()
    best_obj = -pen._penalty_rows(spec, res)
    best_x = x.copy()
    x_sum = np.zeros_like(u)
    reward_sum = np.zeros(horizon)
    res_sum = np.zeros_like(b)
    for k in range(1, inner_iters + 1):
        g = pen._subgradient_rows(spec, res)
        direction = u - np.einsum("tmd,tm->td", a, g)
        step = scale / math.sqrt(k)
        x = _project_block_rows(blocks, x + step[:, None] * direction)
        res = np.einsum("tmd,td->tm", a, x) - b
        rew = np.einsum("td,td->t", u, x)

        obj = rew - pen._penalty_rows(spec, res)
        better = obj > best_obj
        best_obj = np.where(better, obj, best_obj)
        best_x[better] = x[better]

        # the residual is affine in x, so averages come from running sums
        x_sum += x
        reward_sum += rew
        res_sum += res
        obj_avg = reward_sum / k - pen._penalty_rows(spec, res_sum / k)
        better = obj_avg > best_obj
        if np.any(better):
            best_obj = np.where(better, obj_avg, best_obj)
            best_x[better] = x_sum[better] / k

    res_best = np.einsum("tmd,td->tm", a, best_x) - b
    return RunTrace(
        x_hat=best_x,
        lambda_hat=np.zeros_like(b),
        a_hat=None,
        residual_true=res_best,
        reward=np.einsum("td,td->t", u, best_x),
    )
