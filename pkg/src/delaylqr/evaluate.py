"""Controller gains, predictors, and exact expected-cost evaluation.

Everything here is closed-form: expectations over the multiplicative
noise reduce to second-moment recursions, so costs and dual values are
computed exactly rather than sampled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CostTerm, SystemModel
from .riccati import RiccatiTrajectory, SteadySolution, WeightedCosts

__all__ = [
    "GainSchedule",
    "MomentState",
    "DivergingError",
    "predictor",
    "gains",
    "open_loop_moments",
    "predictor_second_moments",
    "dual_value_finite",
    "dual_value_infinite",
    "closed_loop_cost",
]


class DivergingError(RuntimeError):
    """Closed-loop cost accumulation is growing without bound."""


@dataclass(frozen=True)
class GainSchedule:
    """Feedback gains for u_k = -K_k xhat_{k+d|k}.

    ``K`` has shape (N-d+1, m, n) for a finite horizon (row k is K_k),
    or (1, m, n) for the constant infinite-horizon law.
    """

    K: np.ndarray
    horizon: int | None

    @property
    def is_finite(self) -> bool:
        return self.horizon is not None

    @property
    def constant(self) -> np.ndarray:
        if self.is_finite:
            raise ValueError("finite-horizon schedule has no constant gain")
        return self.K[0]

    def at(self, k: int) -> np.ndarray:
        return self.K[0] if not self.is_finite else self.K[k]


@dataclass(frozen=True)
class MomentState:
    """Mean and second moment E[x xᵀ] of a (possibly augmented) state."""

    m: np.ndarray
    S: np.ndarray


def predictor(model: SystemModel, x_k, recent_controls) -> np.ndarray:
    """d-step conditional-expectation predictor xhat_{k+d|k}.

    ``recent_controls`` is ordered most recent first: u_{k-1}, ..., u_{k-d}.
    """
    x_k = np.atleast_1d(np.asarray(x_k, dtype=float))
    controls = [np.atleast_1d(np.asarray(u, dtype=float)) for u in recent_controls]
    if len(controls) != model.d:
        raise ValueError(f"need exactly d={model.d} recent controls")
    out = np.linalg.matrix_power(model.A, model.d) @ x_k
    Ai = np.eye(model.n)
    for u in controls:  # i = 1..d, weight A^{i-1}
        out += Ai @ model.B @ u
        Ai = Ai @ model.A
    return out


def gains(sol: RiccatiTrajectory | SteadySolution) -> GainSchedule:
    """Feedback gains K = Υ⁻¹M from the stored factorizations."""
    if isinstance(sol, SteadySolution):
        K = np.linalg.solve(sol.Upsilon, sol.M)
        return GainSchedule(K=K[np.newaxis], horizon=None)
    d, N = sol.d, sol.N
    K = np.stack(
        [np.linalg.solve(sol.Upsilon[k + d], sol.M[k + d]) for k in range(N - d + 1)]
    )
    return GainSchedule(K=K, horizon=N)


def open_loop_moments(model: SystemModel, horizon: int) -> list[MomentState]:
    """Exact (mean, second moment) of x_k for k = 0..horizon ≤ d.

    Only the initial controls act during this window, so the recursion is
    driven by deterministic inputs u_{k-d} = u_init[k].
    """
    if horizon > model.d:
        raise ValueError("open-loop window ends at k = d")
    A, Ab, B, Bb, s2 = model.A, model.A_bar, model.B, model.B_bar, model.sigma2
    m = model.x0.copy()
    S = np.outer(m, m)
    out = [MomentState(m=m, S=S)]
    for k in range(horizon):
        u = model.u_init[k]
        Bu, Bbu = B @ u, Bb @ u
        Am, Abm = A @ m, Ab @ m
        S = (
            A @ S @ A.T + s2 * (Ab @ S @ Ab.T)
            + np.outer(Am, Bu) + np.outer(Bu, Am)
            + s2 * (np.outer(Abm, Bbu) + np.outer(Bbu, Abm))
            + np.outer(Bu, Bu) + s2 * np.outer(Bbu, Bbu)
        )
        S = (S + S.T) / 2
        m = Am + Bu
        out.append(MomentState(m=m, S=S))
    return out


def predictor_second_moments(
    model: SystemModel, moments: list[MomentState] | None = None
) -> list[np.ndarray]:
    """E[xhat_{d|j} xhat_{d|j}ᵀ] for j = 0..d-1.

    xhat_{d|j} = A^{d-j} x_j + b_j with b_j the deterministic contribution
    of the initial controls still in flight at time j.
    """
    d = model.d
    if moments is None:
        moments = open_loop_moments(model, d)
    A, B = model.A, model.B
    out = []
    for j in range(d):
        P = np.linalg.matrix_power(A, d - j)
        b = np.zeros(model.n)
        for s in range(j, d):  # control u_{s-d} = u_init[s]
            b += np.linalg.matrix_power(A, d - 1 - s) @ B @ model.u_init[s]
        m, S = moments[j].m, moments[j].S
        Pm = P @ m
        Sh = P @ S @ P.T + np.outer(Pm, b) + np.outer(b, Pm) + np.outer(b, b)
        out.append((Sh + Sh.T) / 2)
    return out


def rotated_predictor_moments(
    model: SystemModel, moments: list[MomentState] | None = None
) -> list[np.ndarray]:
    """Aʲ E[xhat_{d|j} xhatᵀ_{d|j}] (Aᵀ)ʲ for j = 0..d-1.

    These are the moments the dual value contracts against L_{d+j}; they
    do not depend on the multiplier, so ascent loops compute them once.
    """
    Shat = predictor_second_moments(model, moments)
    out = []
    Aj = np.eye(model.n)
    for j in range(model.d):
        out.append(Aj @ Shat[j] @ Aj.T)
        Aj = model.A @ Aj
    return out


def initial_predictors(model: SystemModel) -> np.ndarray:
    """Deterministic predictors xhat_{k|k-d} for k = 0..d-1, stacked (d, n).

    These depend only on x0 and the initial controls:
    xhat_{k|k-d} = A^k x0 + Σ_{j<k} A^{k-1-j} B u_{j-d}.
    """
    A, B = model.A, model.B
    out = np.empty((model.d, model.n))
    for k in range(model.d):
        xh = np.linalg.matrix_power(A, k) @ model.x0
        for j in range(k):
            xh += np.linalg.matrix_power(A, k - 1 - j) @ B @ model.u_init[j]
        out[k] = xh
    return out


def dual_value_finite(
    traj: RiccatiTrajectory, model: SystemModel, w: WeightedCosts, lam, c
) -> float:
    """Minimum of the λ-augmented cost, evaluated from the recursion output.

    The pre-horizon window contributes tr(Q(λ)S_k); the window boundary
    contributes tr(X_d S_d) minus one tr(Aʲ Ŝ_j Aᵀʲ L_{d+j}) term per
    in-flight control, where Ŝ_j is the predictor second moment (the
    tower property reduces E[x_dᵀ W xhat_{d|j}] to E[xhatᵀ W xhat], and
    writing X_d - Z_d = Σ_j (Aᵀ)ʲ L_{d+j} Aʲ keeps each lag paired with
    its own weight).
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    d = model.d
    moments = open_loop_moments(model, d)
    Shat = rotated_predictor_moments(model, moments)
    value = sum(np.trace(w.Q @ moments[k].S) for k in range(d))
    value += np.trace(traj.X[d] @ moments[d].S)
    value -= sum(np.trace(traj.L[d + j] @ Shat[j]) for j in range(d))
    return float(value - lam @ c)


def dual_value_infinite(
    sol: SteadySolution, model: SystemModel, w: WeightedCosts, lam, c
) -> float:
    """Steady-state dual value; all expectations are deterministic here."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    x0 = model.x0
    value = float(x0 @ sol.Z @ x0) - float(lam @ c)
    Xh = initial_predictors(model)
    for k in range(model.d):
        u, xh = model.u_init[k], Xh[k]
        value += float(
            -u @ w.R @ u + 2.0 * (u @ sol.M @ xh) + xh @ sol.L @ xh
            + u @ sol.Upsilon @ u
        )
    return value


def _control_row(model: SystemModel, K: np.ndarray) -> np.ndarray:
    """u_k as a linear function of the augmented state (x_k, u_{k-1..k-d}).

    Substituting the predictor into u_k = -K xhat_{k+d|k} gives
    u_k = -K [A^d | B | AB | ... | A^{d-1}B] s_k.
    """
    n, m, d = model.n, model.m, model.d
    blocks = [np.linalg.matrix_power(model.A, d)]
    Ai = np.eye(n)
    for _ in range(d):
        blocks.append(Ai @ model.B)
        Ai = Ai @ model.A
    return -K @ np.hstack(blocks)


def _augmented_maps(model: SystemModel, C: np.ndarray):
    """One-step maps of s_k = (x_k, u_{k-1}, ..., u_{k-d}) under u_k = C s_k.

    s_{k+1} = (G + ω_k H) s_k with the noise entering only the x-row.
    """
    n, m, d = model.n, model.m, model.d
    p = n + d * m
    G = np.zeros((p, p))
    H = np.zeros((p, p))
    G[:n, :n] = model.A
    G[:n, p - m:] = model.B          # u_{k-d} drives x_{k+1}
    H[:n, :n] = model.A_bar
    H[:n, p - m:] = model.B_bar
    G[n:n + m] = C                    # new control enters the stack
    if d > 1:                         # shift the remembered controls down
        G[n + m:, n:p - m] = np.eye((d - 1) * m)
    return G, H


def _initial_augmented(model: SystemModel) -> np.ndarray:
    # stack is most-recent-first: (x0, u_{-1}, ..., u_{-d})
    parts = [model.x0] + [model.u_init[model.d - 1 - i] for i in range(model.d)]
    s0 = np.concatenate(parts)
    return np.outer(s0, s0)


def closed_loop_cost(
    model: SystemModel,
    schedule: GainSchedule,
    term: CostTerm,
    horizon: int | None,
    rel_tol: float = 1e-12,
    max_steps: int = 1_000_000,
) -> float:
    """Exact expected cost of the feedback law, by augmented-moment propagation.

    Counts states k ≥ 0 and applied controls u_0, u_1, ...; the
    pre-horizon controls are fixed initial data, not decision variables,
    so their stage costs are excluded.  Raises Diverging when the
    infinite-horizon per-step cost refuses to decay.
    """
    n, m, d = model.n, model.m, model.d
    s2 = model.sigma2
    S = _initial_augmented(model)
    total = 0.0
    if horizon is not None:
        N = horizon
        if term.F is None:
            raise ValueError("finite-horizon cost requires a terminal weight")
        for k in range(N + 1):
            total += np.trace(term.Q @ S[:n, :n])
            if k >= d:  # u_{k-d} is the oldest stacked control
                total += np.trace(term.R @ S[n + (d - 1) * m:, n + (d - 1) * m:])
            K = schedule.at(k) if k <= N - d else np.zeros((m, n))
            C = _control_row(model, K)
            G, H = _augmented_maps(model, C)
            S = G @ S @ G.T + s2 * (H @ S @ H.T)
            S = (S + S.T) / 2
        total += np.trace(term.F @ S[:n, :n])
        return float(total)

    C = _control_row(model, schedule.constant)
    G, H = _augmented_maps(model, C)
    prev_step = np.inf
    non_decreasing = 0
    for k in range(max_steps):
        step = np.trace(term.Q @ S[:n, :n])
        if k >= d:
            step += np.trace(term.R @ S[n + (d - 1) * m:, n + (d - 1) * m:])
        total += step
        if k >= d:
            if step >= prev_step - 1e-300:
                non_decreasing += 1
                if non_decreasing >= 100:
                    raise DivergingError(
                        "per-step cost non-decreasing for 100 steps: "
                        "closed loop is not mean-square stable"
                    )
            else:
                non_decreasing = 0
            prev_step = step
            if step < rel_tol * max(abs(total), 1e-300):
                return float(total)
        S = G @ S @ G.T + s2 * (H @ S @ H.T)
        S = (S + S.T) / 2
    raise DivergingError(f"cost did not settle within {max_steps} steps")
