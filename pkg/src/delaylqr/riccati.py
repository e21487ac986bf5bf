"""Multiplier-weighted cost assembly and the coupled (Z, X) recursions.

The backward recursion propagates two coupled value matrices: Z carries
the cost-to-go of the predictor component while X adds the corrections
from the d gain terms still in flight.  The infinite-horizon solution is
the fixed point of the same map, found by plain iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .model import ConstrainedProblem, SystemModel

__all__ = [
    "WeightedCosts",
    "RiccatiTrajectory",
    "SteadySolution",
    "weighted_costs",
    "solve_finite",
    "solve_infinite",
    "NotPositiveDefiniteError",
    "NotStabilizableError",
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
    "DIVERGENCE_CAP",
]

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
DIVERGENCE_CAP = 1e12


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """An input-weight combination failed its positive definite factorization."""


class NotStabilizableError(RuntimeError):
    """Fixed-point iteration diverged or stalled: no PD steady solution found."""

    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


@dataclass(frozen=True)
class WeightedCosts:
    """Q(λ), R(λ) and, for finite horizons, F(λ)."""

    Q: np.ndarray
    R: np.ndarray
    F: np.ndarray | None = None


def weighted_costs(problem: ConstrainedProblem, lam) -> WeightedCosts:
    """Combine objective and constraint weights: W(λ) = W₀ + Σ λᵢWᵢ."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.shape != (problem.n_constraints,):
        raise ValueError(
            f"expected {problem.n_constraints} multipliers, got {lam.shape}"
        )
    Q = problem.objective.Q.copy()
    R = problem.objective.R.copy()
    F = problem.objective.F.copy() if problem.objective.F is not None else None
    for li, term in zip(lam, problem.constraints):
        Q += li * term.Q
        R += li * term.R
        if F is not None:
            F += li * term.F
    return WeightedCosts(Q=Q, R=R, F=F)


@dataclass(frozen=True)
class RiccatiTrajectory:
    """Backward-recursion output, absolute-indexed (entry k holds time k).

    Valid index ranges: Z, X for k = d..N+1; L for k = d..N+d-1 (zero
    beyond N by convention); Upsilon, M for k = d..N.
    """

    Z: np.ndarray
    X: np.ndarray
    L: np.ndarray
    Upsilon: np.ndarray
    M: np.ndarray
    d: int
    N: int


@dataclass(frozen=True)
class SteadySolution:
    """Fixed point of the steady recursion and the iteration count to reach it."""

    Z: np.ndarray
    X: np.ndarray
    L: np.ndarray
    Upsilon: np.ndarray
    M: np.ndarray
    d: int
    iterations: int


def solve_finite(model: SystemModel, w: WeightedCosts, N: int) -> RiccatiTrajectory:
    if w.F is None:
        raise ValueError("finite horizon requires a terminal weight F")
    if N < model.d:
        raise ValueError(f"horizon N={N} shorter than the delay d={model.d}")
    Z, X, L, Ups, M, status = kernels.riccati_finite(
        model.A, model.A_bar, model.B, model.B_bar, model.sigma2,
        w.Q, w.R, w.F, model.d, N,
    )
    if status == kernels.STATUS_NOT_PD:
        raise NotPositiveDefiniteError("a control-weight matrix lost positive definiteness")
    return RiccatiTrajectory(Z=Z, X=X, L=L, Upsilon=Ups, M=M, d=model.d, N=N)


def solve_infinite(
    model: SystemModel,
    w: WeightedCosts,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    cap: float = DIVERGENCE_CAP,
) -> SteadySolution:
    if tol <= 0:
        raise ValueError("tol must be positive")
    Z, X, L, Ups, M, iters, status = kernels.riccati_infinite(
        model.A, model.A_bar, model.B, model.B_bar, model.sigma2,
        w.Q, w.R, model.d, tol, max_iter, cap,
    )
    if status == kernels.STATUS_NOT_PD:
        raise NotPositiveDefiniteError("a control-weight matrix lost positive definiteness")
    if status == kernels.STATUS_NOT_CONVERGED:
        raise NotStabilizableError(
            f"steady recursion did not converge in {iters} iterations "
            "(no positive definite fixed point: not mean-square stabilizable)",
            iterations=iters,
        )
    return SteadySolution(Z=Z, X=X, L=L, Upsilon=Ups, M=M, d=model.d, iterations=iters)
