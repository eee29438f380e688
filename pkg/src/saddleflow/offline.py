"""Offline objective, dual function, and the certified optimum.

The primal objective of an action sequence is the average reward minus the
penalty of the average residual.  Its optimum is computed by projected
subgradient descent on the dual function ``D(lam) = avg_t max_x L_t(x, lam)``
over the dual domain, with a duality-gap certificate: the best dual value
upper-bounds the optimum, the objective of any feasible sequence (here a
burn-in-trimmed running average of the per-iteration maximizers) lower-bounds
it.  The solver never claims convergence beyond the bracket it returns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import penalty as pen
from .online import compute_bounds
from .oracle import StackedRounds, is_feasible_action, stack_rounds
from .penalty import PenaltySpec

__all__ = [
    "OfflineSolution",
    "eval_primal",
    "eval_dual",
    "solve_offline",
    "optimal_error_vectors",
]


@dataclass(frozen=True, eq=False)
class OfflineSolution:
    """Bracketed offline optimum: ``p_value <= optimum <= d_value`` with
    ``gap = d_value - p_value``; ``primal_star`` (T,d) attains ``p_value``
    and ``lambda_star`` attains ``d_value``."""

    lambda_star: np.ndarray
    primal_star: np.ndarray
    p_value: float
    d_value: float
    gap: float
    iterations: int


def eval_primal(dataset, spec: PenaltySpec, xs) -> float:
    """Average reward minus the penalty of the average residual.

    ``xs`` is one action per round (any (T,d) array-like); raises on
    infeasible actions.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.shape != (len(dataset), dataset[0].d):
        raise ValueError("xs has wrong shape")
    for rnd, x in zip(dataset, xs):
        if not is_feasible_action(rnd.blocks, x):
            raise ValueError("infeasible action")
    reward = float(np.mean([rnd.u @ x for rnd, x in zip(dataset, xs)]))
    avg_resid = np.mean([rnd.a @ x - rnd.b for rnd, x in zip(dataset, xs)], axis=0)
    return reward - pen.eval_penalty(spec, avg_resid)


def _block_argmax_sparse(stacked: StackedRounds, scores: np.ndarray):
    """Per-round block maximizers of a (T,d) score stack, kept sparse:
    a list of (block slice, column indices, active mask) triples."""
    rows = np.arange(scores.shape[0])
    picks = []
    for s in stacked.blocks.slices():
        j = np.argmax(scores[:, s], axis=1)
        pos = scores[rows, s.start + j] > 0.0
        picks.append((s, s.start + j, pos))
    return picks


def _dual_point(stacked: StackedRounds, spec: PenaltySpec, lam: np.ndarray):
    """Dual value at ``lam``, the average residual of the per-round
    maximizers, and their sparse representation."""
    scores = stacked.u - np.tensordot(lam, stacked.a, axes=([0], [1]))
    picks = _block_argmax_sparse(stacked, scores)
    horizon = stacked.horizon
    rows = np.arange(horizon)
    resid = -stacked.b.copy()
    reward = np.zeros(horizon)
    for _, cols, pos in picks:
        resid[pos] += stacked.a[rows[pos], :, cols[pos]]
        reward[pos] += stacked.u[rows[pos], cols[pos]]
    avg_resid = resid.mean(axis=0)
    if spec.kind == "huber":
        conj = float(lam @ lam) / (2.0 * spec.smoothness_l)
    else:
        conj = 0.0
    value = float(reward.mean()) - float(lam @ avg_resid) + conj
    return value, avg_resid, picks


def _dense_actions(stacked: StackedRounds, picks) -> np.ndarray:
    x = np.zeros_like(stacked.u)
    rows = np.arange(stacked.horizon)
    for _, cols, pos in picks:
        x[rows[pos], cols[pos]] = 1.0
    return x


def eval_dual(dataset, spec: PenaltySpec, lam):
    """Dual function value and the per-round maximizers attaining it.

    ``D(lam) = avg_t [u.x_t - lam.(a x_t - b) + E*(lam)]`` with ``x_t`` the
    exact per-round maximizer; raises if ``lam`` is outside the dual domain.
    """
    lam = np.asarray(lam, dtype=float)
    if not pen.domain_contains(pen.dual_domain(spec), lam):
        raise ValueError("lam outside the dual domain")
    stacked = stack_rounds(dataset)
    value, _, picks = _dual_point(stacked, spec, lam)
    return value, _dense_actions(stacked, picks)


class _SuffixAverage:
    """Running averages that can drop roughly the first tenth of their
    history, using power-of-two segment sums (early large-step iterates
    degrade the ergodic average)."""

    def __init__(self, shape_x, m):
        self._segs = []
        self._shape_x = shape_x
        self._m = m
        self._count = 0

    def add(self, reward_mean, resid_mean, picks, horizon):
        self._count += 1
        if not self._segs or self._count == 2 * self._segs[-1]["start"]:
            self._segs.append({
                "start": self._count,
                "x": np.zeros(self._shape_x),
                "r": 0.0,
                "v": np.zeros(self._m),
                "n": 0,
            })
        seg = self._segs[-1]
        rows = np.arange(horizon)
        for _, cols, pos in picks:
            seg["x"][rows[pos], cols[pos]] += 1.0
        seg["r"] += reward_mean
        seg["v"] += resid_mean
        seg["n"] += 1

    def _tail(self):
        burn = self._count // 10
        j = 0
        for i, seg in enumerate(self._segs):
            if seg["start"] <= burn + 1:
                j = i
        return self._segs[j:]

    def candidate_value(self, spec) -> float:
        """Primal value of the suffix average, from running scalars only."""
        tail = self._tail()
        n = sum(s["n"] for s in tail)
        r = sum(s["r"] for s in tail) / n
        v = sum(s["v"] for s in tail) / n
        return r - float(pen._penalty_rows(spec, v[None, :])[0])

    def materialize(self) -> np.ndarray:
        tail = self._tail()
        n = sum(s["n"] for s in tail)
        x = sum(s["x"] for s in tail) / n
        return x


def solve_offline(dataset, spec: PenaltySpec, max_iters: int = 20000,
                  tol: float = 1e-3) -> OfflineSolution:
    """Bracket the offline optimum by projected subgradient descent on the
    dual with step ``r / (g sqrt(k))``.

    Tracks the best dual value and the burn-in-trimmed running average of
    the primal maximizers; stops once
    ``best_d - p(average) <= tol * (1 + |best_d|)`` or at ``max_iters``.
    """
    if max_iters < 1 or not tol > 0.0:
        raise ValueError("need max_iters >= 1 and tol > 0")
    stacked = stack_rounds(dataset)
    domain = pen.dual_domain(spec)
    horizon, m = stacked.horizon, stacked.b.shape[1]
    g = compute_bounds(dataset, spec).g_bound
    r = pen.dual_euclidean_radius(spec, m)
    step0 = r / g if g > 0.0 else 0.0

    lam = np.zeros(m)
    best_d = math.inf
    lam_best = lam.copy()
    avg = _SuffixAverage(stacked.u.shape, m)
    best_p = -math.inf
    best_x = None
    threshold = None
    iterations = 0
    for k in range(1, max_iters + 1):
        iterations = k
        d_val, avg_resid, picks = _dual_point(stacked, spec, lam)
        if d_val < best_d:
            best_d = d_val
            lam_best = lam.copy()
            threshold = tol * (1.0 + abs(best_d))
        reward_mean = d_val + float(lam @ avg_resid)
        if spec.kind == "huber":
            reward_mean -= float(lam @ lam) / (2.0 * spec.smoothness_l)
        avg.add(reward_mean, avg_resid, picks, horizon)

        p_cand = avg.candidate_value(spec)
        stop = best_d - p_cand <= threshold
        if stop or k % 25 == 0 or k == max_iters:
            if p_cand > best_p:
                best_p = p_cand
                best_x = avg.materialize()
            if stop:
                break
        subgrad = -avg_resid
        if spec.kind == "huber":
            subgrad = subgrad + lam / spec.smoothness_l
        lam = pen.project_dual(domain, lam - (step0 / math.sqrt(k)) * subgrad)

    return OfflineSolution(
        lambda_star=lam_best,
        primal_star=best_x,
        p_value=best_p,
        d_value=best_d,
        gap=best_d - best_p,
        iterations=iterations,
    )


def optimal_error_vectors(dataset, solution: OfflineSolution) -> np.ndarray:
    """Residuals ``a_t x*_t - b_t`` of the certified primal sequence, (T,m)."""
    stacked = stack_rounds(dataset)
    return np.einsum("tmd,td->tm", stacked.a, solution.primal_star) - stacked.b
