"""Projected gradient ascent on the constraint multipliers.

The dual function is concave; ascent iterates λ ← max{0, λ + α·g(λ)}
until the step norm falls below tolerance.  The per-iteration work (one
weighted Riccati solve plus one derivative recursion per constraint)
runs inside the kernel backend, so long ascents stay cheap.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from . import evaluate
from .model import ConstrainedProblem, MultiplierVector, validate
from .riccati import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    DIVERGENCE_CAP,
    NotPositiveDefiniteError,
    solve_finite,
    solve_infinite,
    weighted_costs,
)
from .sensitivity import gradient_finite, gradient_infinite

__all__ = [
    "AscentStatus",
    "AscentConfig",
    "DualResult",
    "dual_gradient_finite",
    "dual_gradient_infinite",
    "ascend",
    "kkt_check",
]

TRACE_CAP = 100_000


class AscentStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NOT_STABILIZABLE = "NotStabilizable"
    ITERATION_LIMIT = "IterationLimit"


_KERNEL_STATUS = {
    kernels.ASCEND_OPTIMAL: AscentStatus.OPTIMAL,
    kernels.ASCEND_INFEASIBLE: AscentStatus.INFEASIBLE,
    kernels.ASCEND_ITER_LIMIT: AscentStatus.ITERATION_LIMIT,
    kernels.ASCEND_NOT_STABILIZABLE: AscentStatus.NOT_STABILIZABLE,
}


@dataclass(frozen=True)
class AscentConfig:
    """Step size, stopping tolerance on ‖λⁿ⁺¹ − λⁿ‖∞, and safety limits."""

    alpha: float
    tol: float
    max_iter: int = 1_000_000
    lambda0: MultiplierVector | None = None
    divergence_cap: float = 1e6
    trace_cap: int = TRACE_CAP

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class DualResult:
    """Outcome of one ascent run.

    ``trace`` rows are (iteration, λ₁..λ_m, g₁..g_m, dual value), thinned
    to at most ``trace_cap`` rows on long runs.  The solution-dependent
    fields (gains, dual_value, constraint_costs, kkt_residuals) are None
    unless status is Optimal.
    """

    status: AscentStatus
    lambda_star: MultiplierVector
    iterations: int
    trace: np.ndarray
    dual_value: float | None = None
    gains: evaluate.GainSchedule | None = None
    constraint_costs: np.ndarray | None = None
    kkt_residuals: np.ndarray | None = None


def _stacks(problem: ConstrainedProblem):
    terms = problem.terms
    Qs = np.stack([t.Q for t in terms])
    Rs = np.stack([t.R for t in terms])
    Fs = np.stack([t.F for t in terms]) if problem.is_finite else None
    c = np.array([t.c for t in problem.constraints], dtype=float)
    return Qs, Rs, Fs, c


def dual_gradient_finite(problem: ConstrainedProblem, lam) -> np.ndarray:
    """One gradient evaluation via the derivative recursions (Danskin form)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    model = problem.model
    w = weighted_costs(problem, lam)
    traj = solve_finite(model, w, problem.horizon)
    moments = evaluate.open_loop_moments(model, model.d)
    Shat = evaluate.rotated_predictor_moments(model, moments)
    g = np.empty(problem.n_constraints)
    for i, term in enumerate(problem.constraints):
        grad = gradient_finite(traj, model, term)
        gi = sum(np.trace(term.Q @ moments[k].S) for k in range(model.d))
        gi += np.trace(grad.dX[model.d] @ moments[model.d].S)
        gi -= sum(
            np.trace(grad.dL[model.d + j] @ Shat[j]) for j in range(model.d)
        )
        g[i] = gi - term.c
    return g


def dual_gradient_infinite(
    problem: ConstrainedProblem,
    lam,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    model = problem.model
    w = weighted_costs(problem, lam)
    sol = solve_infinite(model, w, tol=tol, max_iter=max_iter)
    Xh = evaluate.initial_predictors(model)
    g = np.empty(problem.n_constraints)
    for i, term in enumerate(problem.constraints):
        grad = gradient_infinite(sol, model, term, tol=tol, max_iter=max_iter)
        gi = float(model.x0 @ grad.dZ @ model.x0) - term.c
        for k in range(model.d):
            u, xh = model.u_init[k], Xh[k]
            gi += float(
                -u @ term.R @ u + 2.0 * (u @ grad.dM @ xh) + xh @ grad.dL @ xh
                + u @ grad.dUpsilon @ u
            )
        g[i] = gi
    return g


def ascend(problem: ConstrainedProblem, config: AscentConfig) -> DualResult:
    """Run the ascent loop; on an Optimal exit, attach gains and KKT data."""
    report = validate(problem)
    if not report.ok:
        raise ValueError("invalid problem: " + "; ".join(report.violations))
    model = problem.model
    mc = problem.n_constraints
    Qs, Rs, Fs, c = _stacks(problem)
    lam0 = (
        np.zeros(mc) if config.lambda0 is None else config.lambda0.lam.astype(float)
    )
    if lam0.shape != (mc,):
        raise ValueError(f"lambda0 must have length {mc}")

    if problem.is_finite:
        moments = evaluate.open_loop_moments(model, model.d)
        S = np.stack([ms.S for ms in moments])
        Shat = np.stack(evaluate.rotated_predictor_moments(model, moments))
        status_code, lam, iters, trace = kernels.ascend_finite(
            model.A, model.A_bar, model.B, model.B_bar, model.sigma2,
            model.d, problem.horizon, Qs, Rs, Fs, c, S, Shat,
            lam0, config.alpha, config.tol, config.max_iter,
            config.divergence_cap, config.trace_cap,
        )
    else:
        U = np.stack(model.u_init)
        Xh = evaluate.initial_predictors(model)
        status_code, lam, iters, trace = kernels.ascend_infinite(
            model.A, model.A_bar, model.B, model.B_bar, model.sigma2,
            model.d, Qs, Rs, c, model.x0, U, Xh,
            lam0, config.alpha, config.tol, config.max_iter,
            config.divergence_cap, DEFAULT_TOL, DEFAULT_MAX_ITER,
            DIVERGENCE_CAP, config.trace_cap,
        )

    if status_code == kernels.ASCEND_NOT_PD:
        raise NotPositiveDefiniteError(
            "a weighted control matrix lost positive definiteness during ascent"
        )
    status = _KERNEL_STATUS[status_code]
    lam_star = MultiplierVector(np.maximum(lam, 0.0))
    if status is not AscentStatus.OPTIMAL:
        return DualResult(
            status=status, lambda_star=lam_star, iterations=iters, trace=trace
        )

    w = weighted_costs(problem, lam_star.lam)
    if problem.is_finite:
        sol = solve_finite(model, w, problem.horizon)
        value = evaluate.dual_value_finite(sol, model, w, lam_star.lam, c)
    else:
        sol = solve_infinite(model, w)
        value = evaluate.dual_value_infinite(sol, model, w, lam_star.lam, c)
    schedule = evaluate.gains(sol)
    costs = np.array(
        [
            evaluate.closed_loop_cost(model, schedule, term, problem.horizon)
            for term in problem.constraints
        ]
    )
    residuals = _kkt_residuals(lam_star.lam, costs, c)
    return DualResult(
        status=status,
        lambda_star=lam_star,
        iterations=iters,
        trace=trace,
        dual_value=value,
        gains=schedule,
        constraint_costs=costs,
        kkt_residuals=residuals,
    )


def _kkt_residuals(lam: np.ndarray, costs: np.ndarray, c: np.ndarray) -> np.ndarray:
    scale = np.maximum(1.0, np.abs(c))
    return lam * (costs - c) / scale


def kkt_check(
    problem: ConstrainedProblem, lam_star, schedule: evaluate.GainSchedule
) -> np.ndarray:
    """Scaled complementary-slackness residuals λᵢ(Jᵢ − cᵢ)/max(1, |cᵢ|)."""
    lam = np.atleast_1d(np.asarray(
        lam_star.lam if isinstance(lam_star, MultiplierVector) else lam_star,
        dtype=float,
    ))
    c = np.array([t.c for t in problem.constraints], dtype=float)
    costs = np.array(
        [
            evaluate.closed_loop_cost(problem.model, schedule, term, problem.horizon)
            for term in problem.constraints
        ]
    )
    return _kkt_residuals(lam, costs, c)
