"""One round of the online game and the exact per-round maximizer.

The feasible set of a round is a Cartesian product of simplices-with-slack:
one block of coordinates per request, each block constrained by
``x >= 0, sum(x) <= 1`` ("show at most one unit, or nothing").  For linear
scores the maximizer over such a set is exact and cheap: per block, all mass
on the best coordinate if its score is positive, else the slack (zero).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SimplexBlocks",
    "RoundData",
    "primal_argmax",
    "brute_force_argmax",
    "residual",
    "project_block_simplex",
    "is_feasible_action",
    "stack_rounds",
]


@dataclass(frozen=True)
class SimplexBlocks:
    """Partition of {0..d-1} into contiguous nonempty blocks.

    ``offsets`` lists the block boundaries: 0 = o_0 < o_1 < ... < o_K = d.
    """

    offsets: tuple[int, ...]

    def __post_init__(self):
        o = tuple(int(v) for v in self.offsets)
        object.__setattr__(self, "offsets", o)
        if len(o) < 2 or o[0] != 0 or any(a >= b for a, b in zip(o, o[1:])):
            raise ValueError(f"invalid block offsets {o}")

    @property
    def dim(self) -> int:
        return self.offsets[-1]

    @property
    def n_blocks(self) -> int:
        return len(self.offsets) - 1

    def slices(self):
        return [slice(a, b) for a, b in zip(self.offsets, self.offsets[1:])]

    @classmethod
    def even(cls, d: int, n_blocks: int = 1) -> "SimplexBlocks":
        """d coordinates split into n_blocks equal blocks (d % n_blocks == 0)."""
        if n_blocks < 1 or d % n_blocks:
            raise ValueError(f"cannot split {d} coordinates into {n_blocks} blocks")
        w = d // n_blocks
        return cls(tuple(range(0, d + 1, w)))


@dataclass(frozen=True, eq=False)
class RoundData:
    """One round's constraint matrix ``a`` (m x d), target ``b`` (m),
    reward vector ``u`` (d) and the block structure of the feasible set."""

    a: np.ndarray
    b: np.ndarray
    u: np.ndarray
    blocks: SimplexBlocks

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if a.ndim != 2 or b.ndim != 1 or u.ndim != 1:
            raise ValueError("round data must be a matrix and two vectors")
        if a.shape != (b.size, u.size) or self.blocks.dim != u.size:
            raise ValueError(
                f"inconsistent round shapes: a {a.shape}, b {b.shape}, "
                f"u {u.shape}, blocks dim {self.blocks.dim}"
            )
        if not (np.isfinite(a).all() and np.isfinite(b).all() and np.isfinite(u).all()):
            raise ValueError("round data must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "u", u)

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def d(self) -> int:
        return self.u.size


def _argmax_blocks(blocks: SimplexBlocks, c: np.ndarray) -> np.ndarray:
    x = np.zeros(blocks.dim)
    for s in blocks.slices():
        j = int(np.argmax(c[s]))
        if c[s.start + j] > 0.0:
            x[s.start + j] = 1.0
    return x


def _argmax_blocks_rows(blocks: SimplexBlocks, c: np.ndarray) -> np.ndarray:
    """Row-wise block maximizer for a stack of score vectors (N x d)."""
    x = np.zeros_like(c)
    rows = np.arange(c.shape[0])
    for s in blocks.slices():
        j = np.argmax(c[:, s], axis=1)
        pos = c[rows, s.start + j] > 0.0
        x[rows[pos], s.start + j[pos]] = 1.0
    return x


def primal_argmax(round_data: RoundData, a_used, lam) -> np.ndarray:
    """Exact maximizer of ``(u - a_used^T lam) . x`` over the block simplices.

    Ties go to the lowest index; a block whose best score is not strictly
    positive gets the slack (all-zero) assignment.  ``a_used`` is either the
    true constraint matrix or an estimate of it.
    """
    a_used = np.asarray(a_used, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if a_used.shape != round_data.a.shape or lam.shape != round_data.b.shape:
        raise ValueError("dimension mismatch in primal argmax")
    c = round_data.u - a_used.T @ lam
    return _argmax_blocks(round_data.blocks, c)


def brute_force_argmax(round_data: RoundData, a_used, lam) -> np.ndarray:
    """Enumerate all block vertices (each block: a unit vector or the origin)
    and return the best action, ties broken by lexicographic order.

    Test oracle for ``primal_argmax``; refuses instances with more than 1e6
    vertex combinations.
    """
    a_used = np.asarray(a_used, dtype=float)
    lam = np.asarray(lam, dtype=float)
    c = round_data.u - a_used.T @ lam
    widths = [s.stop - s.start for s in round_data.blocks.slices()]
    total = 1
    for w in widths:
        total *= w + 1
    if total > 10**6:
        raise ValueError(f"instance too large for enumeration ({total} vertices)")
    starts = round_data.blocks.offsets[:-1]
    best_x = None
    best_val = -np.inf
    for choice in itertools.product(*[range(-1, w) for w in widths]):
        x = np.zeros(round_data.d)
        val = 0.0
        for s, w, j in zip(starts, widths, choice):
            if j >= 0:
                x[s + j] = 1.0
                val += c[s + j]
        if val > best_val or (val == best_val and tuple(x) < tuple(best_x)):
            best_val, best_x = val, x
    return best_x


def residual(round_data: RoundData, x) -> np.ndarray:
    """Constraint residual ``a @ x - b`` of an action."""
    x = np.asarray(x, dtype=float)
    if x.shape != round_data.u.shape:
        raise ValueError("dimension mismatch in residual")
    return round_data.a @ x - round_data.b


def _project_capped_simplex_rows(v: np.ndarray) -> np.ndarray:
    """Row-wise projection onto ``{x >= 0, sum(x) <= 1}`` (sort-based)."""
    w = np.maximum(v, 0.0)
    over = w.sum(axis=1) > 1.0
    if np.any(over):
        vo = w[over]
        u = -np.sort(-vo, axis=1)
        css = np.cumsum(u, axis=1)
        k = np.arange(1, vo.shape[1] + 1)
        rho = np.sum(u > (css - 1.0) / k, axis=1)
        idx = np.arange(vo.shape[0])
        theta = (css[idx, rho - 1] - 1.0) / rho
        w[over] = np.maximum(vo - theta[:, None], 0.0)
    return w


def project_block_simplex(blocks: SimplexBlocks, x) -> np.ndarray:
    """Exact Euclidean projection onto the block simplices-with-slack.

    Per block: clip negatives; if the clipped block sums to at most 1 keep
    it, otherwise project onto the unit simplex.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (blocks.dim,):
        raise ValueError("dimension mismatch in block-simplex projection")
    return _project_block_rows(blocks, x[None, :])[0]


def _project_block_rows(blocks: SimplexBlocks, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    for s in blocks.slices():
        out[:, s] = _project_capped_simplex_rows(x[:, s])
    return out


def is_feasible_action(blocks: SimplexBlocks, x, tol: float = 1e-9) -> bool:
    """True iff ``x >= 0`` and every block sums to at most 1 (within tol)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (blocks.dim,) or x.min(initial=0.0) < -tol:
        return False
    return all(x[s].sum() <= 1.0 + tol for s in blocks.slices())


@dataclass(frozen=True, eq=False)
class StackedRounds:
    """Dense view of a dataset with uniform shapes: a (T,m,d), b (T,m),
    u (T,d) and a shared block structure.  Internal fast path."""

    a: np.ndarray
    b: np.ndarray
    u: np.ndarray
    blocks: SimplexBlocks

    @property
    def horizon(self) -> int:
        return self.a.shape[0]


def stack_rounds(dataset) -> StackedRounds:
    """Stack a round sequence into dense arrays; requires uniform shapes and
    a shared block structure across rounds."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    first = dataset[0]
    for i, r in enumerate(dataset):
        if r.a.shape != first.a.shape or r.blocks != first.blocks:
            raise ValueError(f"round {i} has inconsistent shape or blocks")
    return StackedRounds(
        a=np.stack([r.a for r in dataset]),
        b=np.stack([r.b for r in dataset]),
        u=np.stack([r.u for r in dataset]),
        blocks=first.blocks,
    )
