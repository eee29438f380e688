"""Sweep the penalty scale and trace the reward / long-term-violation curve.

Small-scale version of the tradeoff experiment: for each scale 2^gamma, run
the primal-dual player and the additive baseline on the same seeded data and
report average reward against the normalized long-term penalty.  For tiny
scales the two coincide (both just chase reward); for large scales the
additive relaxation pays visibly more long-term violation.
"""

import numpy as np

from saddleflow.cli import _map_cells, _tradeoff_cell

gen = {"distribution": "gaussian", "m": 25, "d": 10, "T": 200}
pen = {"kind": "norm", "q": 2}
repeats = 5

print(f"{'gamma':>6} {'reward pd':>10} {'penalty pd':>11} {'reward add':>11} {'penalty add':>12}")
for gamma in (-8, -4, 0, 2, 4, 6, 8, 10):
    cells = [(gen, pen, float(gamma), seed, 500, None) for seed in range(repeats)]
    block = np.array(_map_cells(_tradeoff_cell, cells, jobs=2))
    r_na, p_na, r_ad, p_ad = block.mean(axis=0)
    print(f"{gamma:>6} {r_na:>10.4f} {p_na:>11.4f} {r_ad:>11.4f} {p_ad:>12.4f}")

print("\n(penalties are normalized by the scale 2^gamma; lower is better at equal reward)")
