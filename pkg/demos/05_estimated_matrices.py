"""Track slowly drifting constraint matrices that are revealed after acting.

When the matrix of a round is only observed after the action, the player
maintains a running estimate with projected subgradient steps on the
Frobenius ball.  The average estimation error is guaranteed to stay below
3/sqrt(T) * (radius + total drift); slower drift means better tracking.
"""

import numpy as np

from saddleflow import make_schedule, run_primal_dual_estimated, scaled_norm
from saddleflow.validation import drifting_dataset

spec = scaled_norm(2, 1.0)
print(f"{'drift scale':>12} {'avg est. error':>15} {'guarantee':>12}")
for scale in (0.001, 0.01, 0.05):
    rounds = drifting_dataset(m=25, d=10, horizon=200, scale=scale, seed=11)
    schedule = make_schedule(rounds, spec)
    trace = run_primal_dual_estimated(rounds, spec, schedule)
    err = np.mean([np.linalg.norm(ah - r.a) for ah, r in zip(trace.a_hat, rounds)])
    drift = sum(np.linalg.norm(a.a - b.a) for a, b in zip(rounds, rounds[1:]))
    limit = 3.0 / np.sqrt(len(rounds)) * (schedule.matrix_radius + drift)
    print(f"{scale:>12} {err:>15.4f} {limit:>12.4f}")

print("\nper-round estimation error along one run (every 25 rounds):")
rounds = drifting_dataset(m=25, d=10, horizon=200, scale=0.01, seed=11)
trace = run_primal_dual_estimated(rounds, spec, make_schedule(rounds, spec))
errs = [np.linalg.norm(ah - r.a) for ah, r in zip(trace.a_hat, rounds)]
print(np.round(np.array(errs)[::25], 3))
