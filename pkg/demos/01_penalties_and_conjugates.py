"""Tour of the penalty catalog: values, conjugates, domains, projections.

Each penalty E acts on a residual vector; its convex conjugate E* is finite
exactly on a compact "dual domain" (a ball, box, or l1 ball, optionally cut
to the nonnegative orthant).  The closed forms are cross-checked against a
brute-force grid conjugate.
"""

import math

import numpy as np

from saddleflow import (
    conjugate_bruteforce,
    dual_domain,
    eval_conjugate,
    eval_penalty,
    huber_l2,
    penalty_subgradient,
    project_dual,
    scaled_norm,
)

z = np.array([0.8, -0.3])
print(f"residual z = {z}\n")

catalog = {
    "l1 norm       ": scaled_norm(1, 1.0),
    "l2 norm       ": scaled_norm(2, 1.0),
    "linf norm     ": scaled_norm(math.inf, 1.0),
    "huber (L=1)   ": huber_l2(1.0, 1.0),
    "l2 over-only  ": scaled_norm(2, 1.0, asymmetric=True),
    "huber over-only": huber_l2(1.0, 1.0, asymmetric=True),
}

print(f"{'penalty':<16} {'E(z)':>8} {'domain':>22} {'subgradient'}")
for name, spec in catalog.items():
    dom = dual_domain(spec)
    shape = f"{dom.ball} ball r={dom.radius}" + (" & >=0" if dom.nonneg else "")
    g = penalty_subgradient(spec, z)
    print(f"{name:<16} {eval_penalty(spec, z):>8.4f} {shape:>22} {np.round(g, 4)}")

print("\nconjugate values vs the brute-force grid oracle (lam inside the domain):")
lam = np.array([0.3, 0.2])
for name, spec in catalog.items():
    closed = eval_conjugate(spec, lam)
    grid = conjugate_bruteforce(spec, lam, grid_radius=8.0, grid_points=401)
    print(f"{name:<16} E*(lam) = {closed:.4f}   grid = {grid:.4f}")

print("\noutside the domain the conjugate is infinite:")
far = np.array([3.0, -4.0])
print(f"E*_l2({far}) = {eval_conjugate(scaled_norm(2, 1.0), far)}")

print("\nEuclidean projection pulls any point back into the domain:")
for name, spec in catalog.items():
    p = project_dual(dual_domain(spec), far)
    print(f"{name:<16} proj({far}) = {np.round(p, 4)}")
