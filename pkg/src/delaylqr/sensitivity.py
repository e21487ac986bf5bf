"""Derivatives of the recursion outputs with respect to one multiplier.

Each constraint term (Qᵢ, Rᵢ, Fᵢ) induces a linear backward recursion in
the perturbations (dZ, dX, dL, dΥ, dM), evaluated at the trajectory's
multiplier.  These feed the dual-gradient assembly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .model import CostTerm, SystemModel
from .riccati import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    NotPositiveDefiniteError,
    RiccatiTrajectory,
    SteadySolution,
)

__all__ = [
    "GradientTrajectory",
    "SteadyGradient",
    "gradient_finite",
    "gradient_infinite",
    "NoConvergenceError",
]


class NoConvergenceError(RuntimeError):
    """The steady derivative system did not reach its fixed point."""


@dataclass(frozen=True)
class GradientTrajectory:
    """Perturbation trajectory for one constraint index, absolute-indexed."""

    dZ: np.ndarray
    dX: np.ndarray
    dL: np.ndarray
    dUpsilon: np.ndarray
    dM: np.ndarray


@dataclass(frozen=True)
class SteadyGradient:
    dZ: np.ndarray
    dX: np.ndarray
    dL: np.ndarray
    dUpsilon: np.ndarray
    dM: np.ndarray
    iterations: int


def gradient_finite(
    traj: RiccatiTrajectory, model: SystemModel, term_i: CostTerm
) -> GradientTrajectory:
    """Backward derivative recursion; ``traj`` must be at the target multiplier."""
    Fi = term_i.F if term_i.F is not None else np.zeros_like(term_i.Q)
    dZ, dX, dL, dUps, dM, status = kernels.gradient_finite(
        model.A, model.A_bar, model.B, model.B_bar, model.sigma2,
        term_i.Q, term_i.R, Fi, model.d, traj.N, traj.Z, traj.X, traj.Upsilon, traj.M,
    )
    if status == kernels.STATUS_NOT_PD:
        raise NotPositiveDefiniteError("stored factorization is not positive definite")
    return GradientTrajectory(dZ=dZ, dX=dX, dL=dL, dUpsilon=dUps, dM=dM)


def gradient_infinite(
    sol: SteadySolution,
    model: SystemModel,
    term_i: CostTerm,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SteadyGradient:
    """Iterates the linear steady derivative system from dZ = dX = Qᵢ."""
    dZ, dX, dL, dUps, dM, iters, status = kernels.gradient_infinite(
        model.A, model.A_bar, model.B, model.B_bar, model.sigma2,
        term_i.Q, term_i.R, model.d, sol.Z, sol.X, sol.Upsilon, sol.M, tol, max_iter,
    )
    if status == kernels.STATUS_NOT_PD:
        raise NotPositiveDefiniteError("stored factorization is not positive definite")
    if status == kernels.STATUS_NOT_CONVERGED:
        raise NoConvergenceError(
            f"derivative fixed point not reached in {iters} iterations"
        )
    return SteadyGradient(dZ=dZ, dX=dX, dL=dL, dUpsilon=dUps, dM=dM, iterations=iters)
