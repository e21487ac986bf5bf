"""Shared fixtures: the two scalar benchmark systems and random problem factories."""

from pathlib import Path

import numpy as np
import pytest

from delaylqr import ConstrainedProblem, CostTerm, SystemModel

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def finite_model() -> SystemModel:
    return SystemModel(
        A=[[1.0]], A_bar=[[1.0]], B=[[2.0]], B_bar=[[2.0]],
        sigma2=1.0, d=1, x0=[1.0], u_init=[[-1.0]],
    )


def infinite_model() -> SystemModel:
    return SystemModel(
        A=[[1.3]], A_bar=[[0.1]], B=[[0.2]], B_bar=[[0.1]],
        sigma2=1.0, d=1, x0=[1.0], u_init=[[-1.0]],
    )


def finite_problem(c1: float = 13.25, c2: float | None = None) -> ConstrainedProblem:
    objective = CostTerm(Q=[[2.0]], R=[[5.0]], F=[[5.0]])
    constraints = [CostTerm(Q=[[2.0]], R=[[3.0]], F=[[1.0]], c=c1)]
    if c2 is not None:
        constraints.append(CostTerm(Q=[[1.0]], R=[[1.0]], F=[[5.0]], c=c2))
    return ConstrainedProblem(
        model=finite_model(), objective=objective,
        constraints=tuple(constraints), horizon=2,
    )


def infinite_problem(c1: float = 49.35, c2: float | None = None) -> ConstrainedProblem:
    objective = CostTerm(Q=[[1.0]], R=[[1.0]])
    constraints = [CostTerm(Q=[[0.5]], R=[[2.0]], c=c1)]
    if c2 is not None:
        constraints.append(CostTerm(Q=[[0.1]], R=[[1.9]], c=c2))
    return ConstrainedProblem(
        model=infinite_model(), objective=objective,
        constraints=tuple(constraints), horizon=None,
    )


def random_model(rng: np.random.Generator, n_max=3, m_max=3, d_max=3) -> SystemModel:
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    d = int(rng.integers(1, d_max + 1))
    # Keep the open loop tame so finite-horizon numbers stay O(1)-ish.
    A = rng.normal(size=(n, n)) * 0.5
    return SystemModel(
        A=A, A_bar=rng.normal(size=(n, n)) * 0.2,
        B=rng.normal(size=(n, m)), B_bar=rng.normal(size=(n, m)) * 0.2,
        sigma2=float(rng.uniform(0.1, 1.0)), d=d,
        x0=rng.normal(size=n), u_init=[rng.normal(size=m) for _ in range(d)],
    )


def random_term(rng: np.random.Generator, n: int, m: int, finite: bool,
                c: float | None = None) -> CostTerm:
    def spd(k):
        G = rng.normal(size=(k, k))
        return G @ G.T + k * np.eye(k)

    return CostTerm(Q=spd(n), R=spd(m), F=spd(n) if finite else None, c=c)


def random_problem(rng: np.random.Generator, finite=True, n_constraints=1,
                   N_max=10) -> ConstrainedProblem:
    model = random_model(rng)
    N = int(rng.integers(model.d, N_max + 1)) if finite else None
    objective = random_term(rng, model.n, model.m, finite)
    constraints = tuple(
        random_term(rng, model.n, model.m, finite, c=float(rng.uniform(1.0, 50.0)))
        for _ in range(n_constraints)
    )
    return ConstrainedProblem(
        model=model, objective=objective, constraints=constraints, horizon=N
    )


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
