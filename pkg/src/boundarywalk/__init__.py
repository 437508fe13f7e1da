"""Minimal-perturbation adversarial attacks by walking the decision boundary.

The attack follows the model's decision boundary toward the clean input with
steps found by exact Lagrangian-dual trust-region solvers, one per norm
(L0, L1, L2, L-inf). Baselines (PGD, Adam PGD), brute-force oracles, and an
experiment harness round out the library.
"""

from .attack import (
    AttackConfig,
    AttackResult,
    StartFailureError,
    binary_search_to_boundary,
    find_starting_point,
    run_adam_pgd,
    run_attack,
    run_pgd,
)
from .core import (
    BoxBounds,
    DimensionMismatchError,
    DualState,
    InvalidBoundsError,
    NormKind,
    Solution,
    TrustRegionProblem,
    lp_distance,
    project_box,
)
from .criterion import (
    Criterion,
    GradientMaskingError,
    adv_value,
    adv_value_and_grad,
    is_adversarial,
)
from .harness import (
    ExperimentSpec,
    RunRecord,
    load_records,
    median_perturbation,
    query_distortion_curve,
    run_experiment,
    sensitivity_report,
    success_rate_at_eps,
    write_records,
)
from .models import (
    Dataset,
    IdxFormatError,
    Model,
    accuracy,
    forward,
    grad_scalar,
    load_mnist_idx,
    load_model,
    make_blobs,
    predict,
    save_model,
    train_mlp,
    write_idx,
)
from .oracle import (
    GridSpec,
    UnreachableError,
    grid_solve,
    l0_minimal_linear,
    linear_minimal_distance,
)
from .trust_region import (
    InnerResult,
    SolverSettings,
    dual_value_and_grad,
    epsilon_exact_linf,
    epsilon_search_linf,
    inner_infimum_l0,
    inner_infimum_l1,
    inner_infimum_l2,
    inner_infimum_linf,
    maximize_dual,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "AttackResult",
    "BoxBounds",
    "Criterion",
    "Dataset",
    "DimensionMismatchError",
    "DualState",
    "ExperimentSpec",
    "GradientMaskingError",
    "GridSpec",
    "IdxFormatError",
    "InnerResult",
    "InvalidBoundsError",
    "Model",
    "NormKind",
    "RunRecord",
    "Solution",
    "SolverSettings",
    "StartFailureError",
    "TrustRegionProblem",
    "UnreachableError",
    "accuracy",
    "adv_value",
    "adv_value_and_grad",
    "binary_search_to_boundary",
    "dual_value_and_grad",
    "epsilon_exact_linf",
    "epsilon_search_linf",
    "find_starting_point",
    "forward",
    "grad_scalar",
    "grid_solve",
    "inner_infimum_l0",
    "inner_infimum_l1",
    "inner_infimum_l2",
    "inner_infimum_linf",
    "is_adversarial",
    "l0_minimal_linear",
    "linear_minimal_distance",
    "load_mnist_idx",
    "load_model",
    "load_records",
    "lp_distance",
    "make_blobs",
    "maximize_dual",
    "median_perturbation",
    "predict",
    "project_box",
    "query_distortion_curve",
    "run_adam_pgd",
    "run_attack",
    "run_experiment",
    "run_pgd",
    "save_model",
    "sensitivity_report",
    "solve",
    "success_rate_at_eps",
    "train_mlp",
    "write_idx",
    "write_records",
]
