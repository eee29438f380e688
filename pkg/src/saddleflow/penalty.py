"""Penalties on constraint residuals, their convex conjugates and dual domains.

The catalog contains scaled q-norms ``r * ||z||_q`` for q in {1, 2, inf} and a
Huber-smoothed l2 penalty, each in a symmetric and a positive-part
("asymmetric") variant that penalizes only over-consumption ``[z]_+``.

Every penalty E comes with

* ``eval_penalty``       -- E(z),
* ``eval_conjugate``     -- E*(lam), ``+inf`` outside the dual domain,
* ``dual_domain``        -- the compact domain of E* with exact projection,
* ``penalty_subgradient`` and ``conjugate_gradient`` -- first-order oracles,
* ``conjugate_bruteforce`` -- an exhaustive grid oracle used to cross-check
  the closed-form conjugates on small dimensions.

Norm penalties have indicator conjugates (the dual-norm ball of radius r);
the Huber penalty adds the quadratic ``||lam||^2 / (2 L)``, which makes the
dual problem strongly convex with modulus ``1 / L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PenaltySpec",
    "DualDomain",
    "scaled_norm",
    "huber_l2",
    "huber",
    "eval_penalty",
    "eval_conjugate",
    "conjugate_gradient",
    "penalty_subgradient",
    "dual_domain",
    "domain_contains",
    "project_dual",
    "dual_euclidean_radius",
    "strong_convexity",
    "conjugate_bruteforce",
    "penalty_from_dict",
    "penalty_to_dict",
]

_NORM_QS = (1.0, 2.0, math.inf)


@dataclass(frozen=True)
class PenaltySpec:
    """A penalty E on residual vectors.

    Parameters
    ----------
    kind : str
        ``"norm"`` for ``r_lambda * ||.||_q`` or ``"huber"`` for the
        Huber-smoothed l2 penalty.
    r_lambda : float
        Scale of the penalty; also the radius parameter of the dual domain.
        ``0`` switches the penalty off (the dual domain collapses to {0}).
    q : float
        Norm exponent, one of 1, 2 or ``math.inf``.  Only used by ``"norm"``.
    smoothness_l : float, optional
        Huber parameter L > 0 (quadratic for ``|t| <= r_lambda / L``).
        Required iff ``kind == "huber"``.
    asymmetric : bool
        If true, the penalty acts on the positive part ``[z]_+`` and the dual
        domain is intersected with the nonnegative orthant.
    """

    kind: str
    r_lambda: float
    q: float = 2.0
    smoothness_l: float | None = None
    asymmetric: bool = False

    def __post_init__(self):
        if self.kind not in ("norm", "huber"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if not (self.r_lambda >= 0.0 and math.isfinite(self.r_lambda)):
            raise ValueError("r_lambda must be a finite nonnegative real")
        if self.kind == "norm":
            if float(self.q) not in _NORM_QS:
                raise ValueError("q must be one of 1, 2, inf")
        if self.kind == "huber":
            if self.smoothness_l is None or not self.smoothness_l > 0.0:
                raise ValueError("huber penalty requires smoothness_l > 0")


def scaled_norm(q, r_lambda, asymmetric=False) -> PenaltySpec:
    """Penalty ``r_lambda * ||z||_q`` (or ``||[z]_+||_q`` if asymmetric)."""
    return PenaltySpec("norm", float(r_lambda), q=float(q), asymmetric=asymmetric)


def huber_l2(r_lambda, smoothness_l, asymmetric=False) -> PenaltySpec:
    """Huber penalty ``H_{r,L}(||z||_2)``, quadratic near 0, affine beyond."""
    return PenaltySpec(
        "huber", float(r_lambda), smoothness_l=float(smoothness_l), asymmetric=asymmetric
    )


@dataclass(frozen=True)
class DualDomain:
    """Compact domain of a conjugate penalty: a norm ball, optionally
    intersected with the nonnegative orthant.

    ``ball`` is ``"l2"`` (Euclidean ball), ``"box"`` (l-inf box, the dual of
    the l1 penalty) or ``"l1"`` (l1 ball, the dual of the l-inf penalty),
    all of radius ``radius``.
    """

    ball: str
    radius: float
    nonneg: bool = False

    def __post_init__(self):
        if self.ball not in ("l2", "box", "l1"):
            raise ValueError(f"unknown ball {self.ball!r}")
        if not (self.radius >= 0.0 and math.isfinite(self.radius)):
            raise ValueError("radius must be a finite nonnegative real")


def dual_domain(spec: PenaltySpec) -> DualDomain:
    """Domain of E*: the ball of the dual norm, nonnegative iff asymmetric."""
    if spec.kind == "huber":
        ball = "l2"
    elif spec.q == 1.0:
        ball = "box"
    elif spec.q == 2.0:
        ball = "l2"
    else:
        ball = "l1"
    return DualDomain(ball, spec.r_lambda, nonneg=spec.asymmetric)


def dual_euclidean_radius(spec: PenaltySpec, m: int) -> float:
    """Largest Euclidean norm over the dual domain in dimension m.

    Equals ``r_lambda`` for l2 and l1 balls and ``r_lambda * sqrt(m)`` for
    the box; this is the radius entering step sizes and regret quantities.
    """
    dom = dual_domain(spec)
    if dom.ball == "box":
        return dom.radius * math.sqrt(m)
    return dom.radius


def huber(r: float, s: float, t):
    """Huber function ``0.5 * min(s t^2, r^2 / s) + r * [|t| - r/s]_+``.

    Even and continuously differentiable in ``t``: quadratic with curvature
    ``s`` for ``|t| <= r / s`` and affine with slope ``r`` beyond.  Accepts a
    scalar or an ndarray ``t``.
    """
    if not (r >= 0.0 and s > 0.0):
        raise ValueError("huber requires r >= 0 and s > 0")
    t = np.abs(np.asarray(t, dtype=float))
    out = 0.5 * np.minimum(s * t * t, r * r / s) + r * np.maximum(t - r / s, 0.0)
    return float(out) if out.ndim == 0 else out


def _as_vector(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {z.shape}")
    return z


def _norm_rows(w: np.ndarray, q: float) -> np.ndarray:
    if q == 1.0:
        return np.abs(w).sum(axis=-1)
    if q == 2.0:
        return np.sqrt((w * w).sum(axis=-1))
    return np.abs(w).max(axis=-1, initial=0.0)


def _penalty_rows(spec: PenaltySpec, z: np.ndarray) -> np.ndarray:
    """E evaluated on each row of a 2-d array ``z``."""
    w = np.maximum(z, 0.0) if spec.asymmetric else z
    if spec.kind == "norm":
        return spec.r_lambda * _norm_rows(w, spec.q)
    return huber(spec.r_lambda, spec.smoothness_l, _norm_rows(w, 2.0))


def eval_penalty(spec: PenaltySpec, z) -> float:
    """Evaluate E(z).  Nonnegative, zero at the origin."""
    z = _as_vector(z)
    return float(_penalty_rows(spec, z[None, :])[0])


def _subgradient_rows(spec: PenaltySpec, z: np.ndarray) -> np.ndarray:
    """One subgradient of E per row of ``z``.

    Selections at nondifferentiable points: the zero vector at the origin,
    and the lowest index attaining the max for the l-inf norm.
    """
    w = np.maximum(z, 0.0) if spec.asymmetric else z
    g = np.zeros_like(w)
    if spec.kind == "norm" and spec.q == 1.0:
        g = spec.r_lambda * np.sign(w)
    elif spec.kind == "norm" and spec.q == math.inf:
        j = np.argmax(np.abs(w), axis=-1)
        rows = np.arange(w.shape[0])
        vals = w[rows, j]
        g[rows, j] = spec.r_lambda * np.sign(vals)
    else:
        # l2 and huber: radial with slope r (norm) or min(L t, r) (huber)
        n = _norm_rows(w, 2.0)
        if spec.kind == "norm":
            slope = np.full_like(n, spec.r_lambda)
        else:
            slope = np.minimum(spec.smoothness_l * n, spec.r_lambda)
        scale = np.divide(slope, n, out=np.zeros_like(n), where=n > 0)
        g = scale[:, None] * w
    if spec.asymmetric:
        g = np.where(z > 0, g, 0.0)
    return g


def penalty_subgradient(spec: PenaltySpec, z) -> np.ndarray:
    """An element of the subdifferential of E at ``z``."""
    z = _as_vector(z)
    return _subgradient_rows(spec, z[None, :])[0]


def domain_contains(domain: DualDomain, lam, tol: float = 1e-9) -> bool:
    """Membership test with a small tolerance for projected boundary points."""
    lam = _as_vector(lam)
    slack = tol * (1.0 + domain.radius)
    if domain.nonneg and lam.min(initial=0.0) < -slack:
        return False
    if domain.ball == "l2":
        return float(np.linalg.norm(lam)) <= domain.radius + slack
    if domain.ball == "box":
        return float(np.abs(lam).max(initial=0.0)) <= domain.radius + slack
    return float(np.abs(lam).sum()) <= domain.radius + slack


def eval_conjugate(spec: PenaltySpec, lam) -> float:
    """E*(lam): ``+inf`` outside the dual domain, else 0 for norm penalties
    and ``||lam||^2 / (2 L)`` for the Huber penalty."""
    lam = _as_vector(lam)
    if not domain_contains(dual_domain(spec), lam):
        return math.inf
    if spec.kind == "huber":
        return float(lam @ lam) / (2.0 * spec.smoothness_l)
    return 0.0


def conjugate_gradient(spec: PenaltySpec, lam) -> np.ndarray:
    """Gradient of E* on its domain: zero for norm penalties, ``lam / L``
    for Huber.  Raises if ``lam`` is outside the dual domain."""
    lam = _as_vector(lam)
    if not domain_contains(dual_domain(spec), lam):
        raise ValueError("lam outside the dual domain")
    if spec.kind == "huber":
        return lam / spec.smoothness_l
    return np.zeros_like(lam)


def strong_convexity(spec: PenaltySpec) -> float:
    """Strong-convexity modulus of E*: ``1 / L`` for Huber, else 0."""
    if spec.kind == "huber":
        return 1.0 / spec.smoothness_l
    return 0.0


def _project_l1(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the l1 ball, sort-based O(m log m)."""
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, a.size + 1)
    rho = np.nonzero(u > (css - radius) / k)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def project_dual(domain: DualDomain, lam) -> np.ndarray:
    """Exact Euclidean projection onto the dual domain.

    For nonnegative domains, negatives are clipped first; the subsequent
    ball projection preserves the orthant, so the composition is the exact
    projection onto the intersection.
    """
    lam = _as_vector(lam)
    v = np.maximum(lam, 0.0) if domain.nonneg else lam.copy()
    r = domain.radius
    if r == 0.0:
        return np.zeros_like(v)
    if domain.ball == "l2":
        n = float(np.linalg.norm(v))
        if n > r:
            v *= r / n
        return v
    if domain.ball == "box":
        return np.clip(v, 0.0 if domain.nonneg else -r, r)
    return _project_l1(v, r)


def conjugate_bruteforce(
    spec: PenaltySpec, lam, grid_radius: float, grid_points: int
) -> float:
    """Approximate E*(lam) from below by ``max_z lam.z - E(z)`` over a uniform
    grid on ``[-grid_radius, grid_radius]^m``.

    Exhaustive: only sensible for m <= 3.  A value growing with
    ``grid_radius`` signals that ``lam`` lies outside the dual domain.
    """
    lam = _as_vector(lam)
    m = lam.size
    if m > 3:
        raise ValueError("brute-force conjugate oracle supports m <= 3 only")
    axis = np.linspace(-grid_radius, grid_radius, grid_points)
    if m == 1:
        z = axis[:, None]
        return float(np.max(z @ lam - _penalty_rows(spec, z)))
    tail = np.stack(
        [g.ravel() for g in np.meshgrid(*([axis] * (m - 1)), indexing="ij")], axis=1
    )
    best = -math.inf
    z = np.empty((tail.shape[0], m))
    z[:, 1:] = tail
    for v0 in axis:
        z[:, 0] = v0
        best = max(best, float(np.max(z @ lam - _penalty_rows(spec, z))))
    return best


def penalty_to_dict(spec: PenaltySpec) -> dict:
    """JSON-friendly form: {"kind", "q", "r_lambda", "l", "asymmetric"}."""
    out = {"kind": spec.kind, "r_lambda": spec.r_lambda, "asymmetric": spec.asymmetric}
    if spec.kind == "norm":
        out["q"] = "inf" if spec.q == math.inf else int(spec.q)
    else:
        out["l"] = spec.smoothness_l
    return out


def penalty_from_dict(d: dict) -> PenaltySpec:
    """Parse a penalty from its JSON form; raises ValueError on bad input."""
    if not isinstance(d, dict):
        raise ValueError("penalty must be a JSON object")
    kind = d.get("kind")
    if kind not in ("norm", "huber"):
        raise ValueError('penalty "kind" must be "norm" or "huber"')
    r = d.get("r_lambda")
    if not isinstance(r, (int, float)) or isinstance(r, bool):
        raise ValueError('penalty requires a numeric "r_lambda"')
    asym = bool(d.get("asymmetric", False))
    if kind == "norm":
        q = d.get("q", 2)
        if q == "inf":
            q = math.inf
        if not isinstance(q, (int, float)) or float(q) not in _NORM_QS:
            raise ValueError('penalty "q" must be 1, 2 or "inf"')
        return scaled_norm(q, r, asymmetric=asym)
    l = d.get("l")
    if not isinstance(l, (int, float)) or isinstance(l, bool) or not l > 0:
        raise ValueError('huber penalty requires a positive "l"')
    return huber_l2(r, l, asymmetric=asym)
