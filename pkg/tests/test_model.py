import numpy as np
import pytest

from delaylqr import (
    ConstrainedProblem,
    CostTerm,
    MultiplierVector,
    SystemModel,
    validate,
)

from conftest import finite_problem, infinite_problem, random_problem


def test_model_arrays_are_frozen():
    model = SystemModel(A=[[1.0]], A_bar=[[0.0]], B=[[1.0]], B_bar=[[0.0]],
                        sigma2=0.5, d=1, x0=[1.0], u_init=[[0.0]])
    with pytest.raises(ValueError):
        model.A[0, 0] = 2.0
    assert model.n == 1 and model.m == 1


def test_dimension_errors_flag_mismatches():
    model = SystemModel(A=np.eye(2), A_bar=np.zeros((2, 2)), B=np.ones((2, 1)),
                        B_bar=np.zeros((3, 1)), sigma2=1.0, d=2,
                        x0=[1.0, 0.0], u_init=[[0.0]])
    errs = model.dimension_errors()
    assert any("B_bar" in e for e in errs)
    assert any("u_init" in e for e in errs)


def test_cost_term_symmetrizes_small_asymmetry():
    term = CostTerm(Q=[[1.0, 1e-14], [0.0, 1.0]], R=[[1.0]])
    assert np.array_equal(term.Q, term.Q.T)


def test_cost_term_rejects_large_asymmetry():
    with pytest.raises(ValueError):
        CostTerm(Q=[[1.0, 0.5], [0.0, 1.0]], R=[[1.0]])


def test_multiplier_vector_rejects_negative():
    with pytest.raises(ValueError):
        MultiplierVector(lam=[-0.1])
    assert len(MultiplierVector(lam=[0.0, 2.0])) == 2


def test_validate_accepts_benchmark_problems():
    assert validate(finite_problem()).ok
    assert validate(infinite_problem()).ok


def test_validate_rejects_indefinite_weight():
    problem = finite_problem()
    bad = ConstrainedProblem(
        model=problem.model,
        objective=CostTerm(Q=[[-1.0]], R=[[1.0]], F=[[1.0]]),
        constraints=problem.constraints,
        horizon=problem.horizon,
    )
    report = validate(bad)
    assert not report.ok
    assert any("positive definite" in v for v in report.violations)


def test_validate_rejects_missing_terminal_weight():
    problem = finite_problem()
    bad = ConstrainedProblem(
        model=problem.model,
        objective=CostTerm(Q=[[1.0]], R=[[1.0]]),
        constraints=problem.constraints,
        horizon=problem.horizon,
    )
    assert not validate(bad).ok


def test_validate_rejects_horizon_shorter_than_delay():
    problem = finite_problem()
    bad = ConstrainedProblem(
        model=problem.model, objective=problem.objective,
        constraints=problem.constraints, horizon=0,
    )
    assert not validate(bad).ok


def test_terms_order_objective_first():
    problem = finite_problem(c2=15.6)
    assert problem.terms[0] is problem.objective
    assert problem.n_constraints == 2
    assert problem.is_finite and not infinite_problem().is_finite


def test_random_problems_validate():
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert validate(random_problem(rng, finite=bool(rng.integers(2)))).ok
