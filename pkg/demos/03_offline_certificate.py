"""Bracket the offline optimum with a duality-gap certificate.

The solver runs projected subgradient descent on the dual function and keeps
two numbers: the best dual value (an upper bound on the optimum) and the
objective of an averaged feasible sequence (a lower bound).  The returned
gap is the honest distance between them; nothing is assumed converged.
"""

from saddleflow import (
    GeneratorConfig,
    eval_dual,
    eval_primal,
    generate,
    huber_l2,
    scaled_norm,
    solve_offline,
)

rounds = generate(GeneratorConfig("gaussian", m=5, d=4, horizon=50, seed=7))

for name, spec in (("l1 penalty   ", scaled_norm(1, 1.0)),
                   ("huber penalty", huber_l2(1.0, 1.0))):
    sol = solve_offline(rounds, spec, max_iters=20000, tol=1e-4)
    print(f"{name}: optimum in [{sol.p_value:.6f}, {sol.d_value:.6f}] "
          f"gap {sol.gap:.2e} after {sol.iterations} iterations")

spec = scaled_norm(2, 1.0)
sol = solve_offline(rounds, spec, max_iters=20000, tol=1e-4)
print("\nweak duality in action (every dual value sits above every feasible value):")
for lam_scale in (0.0, 0.3, 0.9):
    lam = lam_scale * sol.lambda_star
    d_val, _ = eval_dual(rounds, spec, lam)
    print(f"  D(lam) at {lam_scale:.1f} * lambda_star = {d_val:.6f}")
print(f"  P(averaged primal)              = {eval_primal(rounds, spec, sol.primal_star):.6f}")
