"""Built-in invariant suites, runnable on fixed seeds via the CLI.

Each suite checks one family of mathematical guarantees end to end
(conjugate identities, projection optimality, oracle exactness, the dual
and matrix-tracking regret bounds, the full regret bound, the Monte Carlo
deviation bound) and reports witness values on failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import penalty as pen
from .data import GeneratorConfig, generate
from .diagnostics import (
    bound_components,
    check_regret_bound,
    dual_regret_limit,
    expected_max_deviation_mc,
    static_dual_gap,
)
from .offline import solve_offline
from .online import make_schedule, run_primal_dual, run_primal_dual_estimated
from .oracle import RoundData, SimplexBlocks, brute_force_argmax, primal_argmax

__all__ = ["SuiteResult", "run_all", "drifting_dataset"]


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str


def _catalog():
    return [
        pen.scaled_norm(1, 1.2),
        pen.scaled_norm(2, 0.8),
        pen.scaled_norm(math.inf, 1.0),
        pen.huber_l2(1.0, 1.0),
        pen.scaled_norm(1, 1.2, asymmetric=True),
        pen.scaled_norm(2, 0.8, asymmetric=True),
        pen.scaled_norm(math.inf, 1.0, asymmetric=True),
        pen.huber_l2(1.0, 1.0, asymmetric=True),
    ]


def drifting_dataset(m: int, d: int, horizon: int, scale: float, seed: int):
    """Gaussian dataset whose constraint matrices follow a normalized random
    walk ``a_{t+1} = normalize(a_t + scale * noise)``."""
    rounds = generate(GeneratorConfig("gaussian", m=m, d=d, horizon=horizon, seed=seed))
    rng = np.random.default_rng(seed + 2**32)
    out = [rounds[0]]
    for r in rounds[1:]:
        a = out[-1].a + scale * rng.standard_normal(r.a.shape)
        out.append(RoundData(a / np.linalg.norm(a), r.b, r.u, r.blocks))
    return out


def suite_conjugacy(seed: int = 0) -> SuiteResult:
    """Closed-form conjugates match the brute-force grid oracle on the
    dual domain at m in {1, 2}."""
    rng = np.random.default_rng(seed)
    for spec in _catalog():
        dom = pen.dual_domain(spec)
        for m in (1, 2):
            for _ in range(15):
                raw = rng.uniform(-2.0, 2.0, m) * max(dom.radius, 1.0)
                lam = pen.project_dual(dom, raw)
                approx = pen.conjugate_bruteforce(spec, lam, 10.0, 401)
                exact = pen.eval_conjugate(spec, lam)
                if not abs(approx - exact) <= 5e-2:
                    return SuiteResult(
                        "conjugacy", False,
                        f"spec={spec} lam={lam} grid={approx:.4g} closed={exact:.4g}",
                    )
    return SuiteResult("conjugacy", True, "catalog x m in {1,2}, grid tol 5e-2")


def suite_dual_projection(seed: int = 0) -> SuiteResult:
    """Projections onto every dual domain are optimal against a dense grid,
    idempotent and nonexpansive."""
    rng = np.random.default_rng(seed)
    axis = np.linspace(-2.0, 2.0, 201)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
    for spec in _catalog():
        dom = pen.dual_domain(spec)
        scaled = grid * max(dom.radius, 1.0)
        members = scaled[[pen.domain_contains(dom, w) for w in scaled]]
        for _ in range(40):
            lam = rng.standard_normal(2) * 2.0 * max(dom.radius, 1.0)
            p = pen.project_dual(dom, lam)
            if not pen.domain_contains(dom, p):
                return SuiteResult("dual-projection", False,
                                   f"spec={spec} lam={lam} projected outside")
            best = float(np.linalg.norm(members - lam, axis=1).min())
            got = float(np.linalg.norm(lam - p))
            if got > best + 1e-9:
                return SuiteResult(
                    "dual-projection", False,
                    f"spec={spec} lam={lam} dist {got:.6f} > grid best {best:.6f}",
                )
            p2 = pen.project_dual(dom, p)
            if np.linalg.norm(p2 - p) > 1e-9:
                return SuiteResult("dual-projection", False,
                                   f"spec={spec} lam={lam} not idempotent")
            other = rng.standard_normal(2) * 2.0 * max(dom.radius, 1.0)
            q = pen.project_dual(dom, other)
            if np.linalg.norm(p - q) > np.linalg.norm(lam - other) + 1e-9:
                return SuiteResult("dual-projection", False,
                                   f"spec={spec} expansion at {lam} vs {other}")
    return SuiteResult("dual-projection", True, "grid-optimal, idempotent, nonexpansive")


def suite_oracle_exactness(seed: int = 0) -> SuiteResult:
    """The block maximizer matches brute-force vertex enumeration."""
    rng = np.random.default_rng(seed)
    for i in range(300):
        m = int(rng.integers(1, 7))
        widths = rng.integers(1, 4, int(rng.integers(1, 4)))
        blocks = SimplexBlocks((0, *np.cumsum(widths).tolist()))
        rnd = RoundData(
            rng.standard_normal((m, blocks.dim)), rng.standard_normal(m),
            rng.standard_normal(blocks.dim), blocks,
        )
        lam = rng.standard_normal(m)
        c = rnd.u - rnd.a.T @ lam
        fast = primal_argmax(rnd, rnd.a, lam)
        slow = brute_force_argmax(rnd, rnd.a, lam)
        if c @ fast < c @ slow - 1e-12:
            return SuiteResult("oracle-exactness", False,
                               f"instance {i}: fast {c @ fast:.12f} < slow {c @ slow:.12f}")
    return SuiteResult("oracle-exactness", True, "300 random instances, gap <= 1e-12")


def suite_dual_regret(seed: int = 0) -> SuiteResult:
    """The dual iterates respect the static regret limit against 20 fixed
    comparators, in both step-size modes."""
    rng = np.random.default_rng(seed)
    for spec in (pen.scaled_norm(2, 1.0), pen.huber_l2(1.0, 1.0)):
        rounds = generate(GeneratorConfig("gaussian", m=6, d=5, horizon=80, seed=seed))
        schedule = make_schedule(rounds, spec)
        trace = run_primal_dual(rounds, spec, schedule)
        limit = dual_regret_limit(schedule)
        dom = pen.dual_domain(spec)
        variation = float(
            np.linalg.norm(np.diff(trace.lambda_hat, axis=0), axis=1).sum()
        )
        budget = schedule.g_bound * schedule.eta_sum()
        if variation > budget + 1e-9:
            return SuiteResult("dual-regret", False,
                               f"path variation {variation:.4f} > budget {budget:.4f}")
        for _ in range(20):
            lam = pen.project_dual(dom, rng.uniform(-2, 2, rounds[0].m))
            gap = static_dual_gap(trace, spec, lam)
            if gap > limit + 1e-9:
                return SuiteResult(
                    "dual-regret", False,
                    f"{schedule.dual_mode}: gap {gap:.6f} > limit {limit:.6f} at lam={lam}",
                )
    return SuiteResult("dual-regret", True, "20 comparators per mode, within limit")


def suite_matrix_tracking(seed: int = 0) -> SuiteResult:
    """Average matrix-estimation error respects
    ``3/sqrt(T) (r_a + total drift)`` on drifting instances."""
    spec = pen.scaled_norm(2, 1.0)
    for s in range(5):
        rounds = drifting_dataset(6, 5, 60, 0.01, seed + s)
        schedule = make_schedule(rounds, spec)
        trace = run_primal_dual_estimated(rounds, spec, schedule)
        err = float(np.mean([
            np.linalg.norm(ah - r.a) for ah, r in zip(trace.a_hat, rounds)
        ]))
        drift = float(sum(
            np.linalg.norm(x.a - y.a) for x, y in zip(rounds, rounds[1:])
        ))
        limit = 3.0 / math.sqrt(len(rounds)) * (schedule.matrix_radius + drift)
        if err > limit + 1e-9:
            return SuiteResult("matrix-tracking", False,
                               f"seed {seed + s}: error {err:.4f} > limit {limit:.4f}")
    return SuiteResult("matrix-tracking", True, "5 drifting instances within limit")


def suite_regret_bound(seed: int = 0) -> SuiteResult:
    """Measured regret stays below the assembled bound, both penalty
    regimes, known and estimated matrices."""
    for spec in (pen.scaled_norm(1, 1.0), pen.huber_l2(1.0, 1.0)):
        rounds = generate(GeneratorConfig("gaussian", m=8, d=6, horizon=100, seed=seed))
        schedule = make_schedule(rounds, spec)
        sol = solve_offline(rounds, spec, max_iters=20000, tol=1e-3)
        for runner in (run_primal_dual, run_primal_dual_estimated):
            trace = runner(rounds, spec, schedule)
            rep = bound_components(trace, rounds, spec, schedule, sol)
            if not check_regret_bound(rep):
                return SuiteResult(
                    "regret-bound", False,
                    f"{spec.kind}/{runner.__name__}: regret {rep.empirical_regret:.6f} "
                    f"> bound {rep.bound_total:.6f}",
                )
    return SuiteResult("regret-bound", True, "2 regimes x 2 runners within bound")


def suite_max_deviation_mc(seed: int = 0) -> SuiteResult:
    """Monte Carlo mean of the max path deviation stays below the bound
    (3 standard errors of allowance)."""
    rng = np.random.default_rng(seed)
    n = 300
    for i in range(8):
        horizon = int(rng.integers(2, 30))
        dim = int(rng.integers(1, 4))
        sigma = float(rng.uniform(0.0, 2.0))
        mu = rng.standard_normal((horizon, dim))
        s = int(rng.integers(1 << 31))
        mean, bound = expected_max_deviation_mc(sigma, mu, horizon, dim, n, s)
        # allowance: sample std of the maxima, recomputed from the same seed
        draws = mu[None] + sigma * np.random.default_rng(s).standard_normal(
            (n, horizon, dim))
        prefix = np.cumsum(draws, axis=1)
        ts = np.arange(1, horizon) / horizon
        dev = prefix[:, :-1, :] - ts[None, :, None] * prefix[:, -1:, :]
        maxima = np.linalg.norm(dev, axis=2).max(axis=1)
        allowance = 3.0 * float(maxima.std(ddof=1)) / math.sqrt(n)
        if mean > bound + allowance:
            return SuiteResult(
                "max-deviation-mc", False,
                f"setting {i}: mean {mean:.4f} > bound {bound:.4f} + 3se {allowance:.4f}",
            )
    return SuiteResult("max-deviation-mc", True, "8 settings within bound + 3se")


_SUITES = (
    suite_conjugacy,
    suite_dual_projection,
    suite_oracle_exactness,
    suite_dual_regret,
    suite_matrix_tracking,
    suite_regret_bound,
    suite_max_deviation_mc,
)


def run_all(seed: int = 0) -> list[SuiteResult]:
    """Run every suite on fixed seeds derived from ``seed``."""
    return [suite(seed) for suite in _SUITES]
