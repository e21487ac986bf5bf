"""Problem-definition types: plant, cost terms, constrained problem, multipliers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SystemModel",
    "CostTerm",
    "ConstrainedProblem",
    "MultiplierVector",
    "ValidationReport",
    "validate",
    "is_positive_definite",
]

_SYM_RTOL = 1e-12


def _as_matrix(value) -> np.ndarray:
    out = np.atleast_2d(np.asarray(value, dtype=float))
    return np.ascontiguousarray(out)


def _as_vector(value) -> np.ndarray:
    return np.ascontiguousarray(np.atleast_1d(np.asarray(value, dtype=float)))


def _symmetrize(name: str, mat: np.ndarray) -> np.ndarray:
    """Average out roundoff asymmetry; reject genuinely asymmetric input."""
    if mat.shape[0] != mat.shape[1]:
        return mat
    scale = max(np.abs(mat).max(), 1.0)
    if np.abs(mat - mat.T).max() > _SYM_RTOL * scale:
        raise ValueError(f"{name} is not symmetric")
    return (mat + mat.T) / 2.0


def is_positive_definite(mat: np.ndarray) -> bool:
    """True when a symmetric positive definite factorization succeeds."""
    try:
        np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return False
    return True


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemModel:
    """Delayed plant x_{k+1} = (A + w_k*Abar) x_k + (B + w_k*Bbar) u_{k-d}.

    ``u_init`` holds the d pre-horizon controls, oldest first
    (u_{-d}, ..., u_{-1}).  ``sigma2`` is the noise variance.
    """

    A: np.ndarray
    A_bar: np.ndarray
    B: np.ndarray
    B_bar: np.ndarray
    sigma2: float
    d: int
    x0: np.ndarray
    u_init: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "A", _freeze(_as_matrix(self.A)))
        object.__setattr__(self, "A_bar", _freeze(_as_matrix(self.A_bar)))
        object.__setattr__(self, "B", _freeze(_as_matrix(self.B)))
        object.__setattr__(self, "B_bar", _freeze(_as_matrix(self.B_bar)))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "x0", _freeze(_as_vector(self.x0)))
        object.__setattr__(
            self, "u_init", tuple(_freeze(_as_vector(u)) for u in self.u_init)
        )

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def dimension_errors(self) -> list[str]:
        errs = []
        n, m = self.n, self.m
        if self.A.shape != (n, n):
            errs.append(f"A must be square, got {self.A.shape}")
        if self.A_bar.shape != (n, n):
            errs.append(f"A_bar must be {n}x{n}, got {self.A_bar.shape}")
        if self.B.shape != (n, m):
            errs.append(f"B must be {n}x{m}, got {self.B.shape}")
        if self.B_bar.shape != (n, m):
            errs.append(f"B_bar must be {n}x{m}, got {self.B_bar.shape}")
        if self.x0.shape != (n,):
            errs.append(f"x0 must have length {n}, got {self.x0.shape}")
        if self.sigma2 < 0:
            errs.append("sigma2 must be nonnegative")
        if self.d < 1:
            errs.append("delay d must be at least 1")
        if len(self.u_init) != self.d:
            errs.append(f"u_init must have exactly d={self.d} entries, got {len(self.u_init)}")
        for idx, u in enumerate(self.u_init):
            if u.shape != (m,):
                errs.append(f"u_init[{idx}] must have length {m}, got {u.shape}")
        return errs


@dataclass(frozen=True)
class CostTerm:
    """Quadratic weight triple; ``c`` is the constraint bound (None for the objective)."""

    Q: np.ndarray
    R: np.ndarray
    F: np.ndarray | None = None
    c: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "Q", _freeze(_symmetrize("Q", _as_matrix(self.Q))))
        object.__setattr__(self, "R", _freeze(_symmetrize("R", _as_matrix(self.R))))
        if self.F is not None:
            object.__setattr__(self, "F", _freeze(_symmetrize("F", _as_matrix(self.F))))
        if self.c is not None:
            object.__setattr__(self, "c", float(self.c))


@dataclass(frozen=True)
class MultiplierVector:
    """Nonnegative Lagrange multipliers, one per constraint."""

    lam: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam", _freeze(_as_vector(self.lam)))
        if np.any(self.lam < 0):
            raise ValueError("multipliers must be nonnegative")

    def __len__(self) -> int:
        return len(self.lam)


@dataclass(frozen=True)
class ConstrainedProblem:
    """Objective + quadratic constraints over a finite or infinite horizon.

    ``horizon`` is the terminal index N for the finite case, None for infinite.
    """

    model: SystemModel
    objective: CostTerm
    constraints: tuple[CostTerm, ...]
    horizon: int | None

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.horizon is not None:
            object.__setattr__(self, "horizon", int(self.horizon))

    @property
    def is_finite(self) -> bool:
        return self.horizon is not None

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    @property
    def terms(self) -> tuple[CostTerm, ...]:
        return (self.objective,) + self.constraints


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations


def _check_weights(label: str, term: CostTerm, n: int, m: int, finite: bool) -> list[str]:
    errs = []
    if term.Q.shape != (n, n):
        errs.append(f"{label}: Q must be {n}x{n}, got {term.Q.shape}")
    elif not is_positive_definite(term.Q):
        errs.append(f"{label}: weight Q not positive definite")
    if term.R.shape != (m, m):
        errs.append(f"{label}: R must be {m}x{m}, got {term.R.shape}")
    elif not is_positive_definite(term.R):
        errs.append(f"{label}: weight R not positive definite")
    if finite:
        if term.F is None:
            errs.append(f"{label}: finite horizon requires a terminal weight F")
        elif term.F.shape != (n, n):
            errs.append(f"{label}: F must be {n}x{n}, got {term.F.shape}")
        elif not is_positive_definite(term.F):
            errs.append(f"{label}: weight F not positive definite")
    elif term.F is not None:
        errs.append(f"{label}: infinite horizon requires F to be absent")
    return errs


def validate(problem: ConstrainedProblem) -> ValidationReport:
    """Report-style check of every structural invariant a solver relies on."""
    model = problem.model
    violations = list(model.dimension_errors())
    finite = problem.is_finite
    if finite and problem.horizon < model.d:
        violations.append(f"N < d (N={problem.horizon}, d={model.d})")
    violations += _check_weights("objective", problem.objective, model.n, model.m, finite)
    if problem.objective.c is not None:
        violations.append("objective must not carry a constraint bound")
    for i, term in enumerate(problem.constraints, start=1):
        violations += _check_weights(f"constraint {i}", term, model.n, model.m, finite)
        if term.c is None:
            violations.append(f"constraint {i}: missing bound c")
    return ValidationReport(tuple(violations))
