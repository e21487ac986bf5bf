"""Constrained stochastic LQR with input delay and multiplicative noise.

Solves quadratically constrained linear-quadratic control problems whose
plant has a d-step input delay and noise that multiplies the dynamics
matrices.  The constrained problem is solved through its Lagrange dual:
a coupled pair of Riccati-type recursions gives the inner minimum in
closed form, and projected gradient ascent finds the multipliers.
"""

from ._backend import BACKEND
from .model import (
    ConstrainedProblem,
    CostTerm,
    MultiplierVector,
    SystemModel,
    ValidationReport,
    validate,
)
from .riccati import (
    NotPositiveDefiniteError,
    NotStabilizableError,
    RiccatiTrajectory,
    SteadySolution,
    WeightedCosts,
    solve_finite,
    solve_infinite,
    weighted_costs,
)
from .sensitivity import (
    GradientTrajectory,
    NoConvergenceError,
    SteadyGradient,
    gradient_finite,
    gradient_infinite,
)
from .evaluate import (
    DivergingError,
    GainSchedule,
    MomentState,
    closed_loop_cost,
    dual_value_finite,
    dual_value_infinite,
    gains,
    initial_predictors,
    open_loop_moments,
    predictor,
    predictor_second_moments,
)
from .dual import (
    AscentConfig,
    AscentStatus,
    DualResult,
    ascend,
    dual_gradient_finite,
    dual_gradient_infinite,
    kkt_check,
)
from .simulate import (
    CostEstimate,
    RolloutRecord,
    StabilityCertificate,
    estimate_costs,
    rollout,
    second_moment_profile,
    stability_certificate,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    "SystemModel",
    "CostTerm",
    "ConstrainedProblem",
    "MultiplierVector",
    "ValidationReport",
    "validate",
    "WeightedCosts",
    "RiccatiTrajectory",
    "SteadySolution",
    "weighted_costs",
    "solve_finite",
    "solve_infinite",
    "NotPositiveDefiniteError",
    "NotStabilizableError",
    "GradientTrajectory",
    "SteadyGradient",
    "gradient_finite",
    "gradient_infinite",
    "NoConvergenceError",
    "GainSchedule",
    "MomentState",
    "predictor",
    "predictor_second_moments",
    "gains",
    "initial_predictors",
    "open_loop_moments",
    "dual_value_finite",
    "dual_value_infinite",
    "closed_loop_cost",
    "DivergingError",
    "AscentConfig",
    "AscentStatus",
    "DualResult",
    "ascend",
    "dual_gradient_finite",
    "dual_gradient_infinite",
    "kkt_check",
    "CostEstimate",
    "RolloutRecord",
    "StabilityCertificate",
    "rollout",
    "second_moment_profile",
    "estimate_costs",
    "stability_certificate",
]
