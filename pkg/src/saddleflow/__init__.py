"""saddleflow: online primal-dual allocation with non-additive long-term
constraint penalties, plus the offline certificate solver, an additive
per-round baseline, and diagnostics for every term of the regret guarantee.
"""

from .data import DatasetFormatError, GeneratorConfig, generate, load_dataset, save_dataset
from .diagnostics import (
    BoundReport,
    bound_components,
    check_regret_bound,
    dual_regret_limit,
    expected_max_deviation_bound,
    expected_max_deviation_mc,
    max_path_deviation,
    path_deviation,
    static_dual_gap,
)
from .offline import OfflineSolution, eval_dual, eval_primal, optimal_error_vectors, solve_offline
from .online import (
    RunBounds,
    RunTrace,
    StepSchedule,
    compute_bounds,
    make_schedule,
    run_additive_baseline,
    run_primal_dual,
    run_primal_dual_estimated,
)
from .oracle import (
    RoundData,
    SimplexBlocks,
    brute_force_argmax,
    is_feasible_action,
    primal_argmax,
    project_block_simplex,
    residual,
)
from .penalty import (
    DualDomain,
    PenaltySpec,
    conjugate_bruteforce,
    conjugate_gradient,
    dual_domain,
    dual_euclidean_radius,
    eval_conjugate,
    eval_penalty,
    huber,
    huber_l2,
    penalty_from_dict,
    penalty_subgradient,
    penalty_to_dict,
    project_dual,
    scaled_norm,
    strong_convexity,
)

__version__ = "0.1.0"
