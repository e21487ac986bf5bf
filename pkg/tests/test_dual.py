import numpy as np
import pytest

from delaylqr import (
    AscentConfig,
    AscentStatus,
    MultiplierVector,
    ascend,
    closed_loop_cost,
    dual_gradient_finite,
    dual_gradient_infinite,
    gains,
    kkt_check,
    solve_finite,
    weighted_costs,
)
from delaylqr import _kernels_py

from conftest import finite_problem, infinite_problem

try:
    from delaylqr import _kernels as _kernels_c
except ImportError:  # pragma: no cover - source-only install
    _kernels_c = None


def test_gradient_is_constraint_slack():
    # Danskin: the dual gradient component i equals J_i at the minimizing
    # feedback minus c_i.
    problem = finite_problem()
    lam = np.array([0.8])
    g = dual_gradient_finite(problem, lam)
    traj = solve_finite(problem.model, weighted_costs(problem, lam), problem.horizon)
    sched = gains(traj)
    J1 = closed_loop_cost(problem.model, sched, problem.constraints[0],
                          problem.horizon)
    assert g[0] == pytest.approx(J1 - 13.25, rel=1e-9)


def test_gradient_sign_flips_with_the_bound():
    # at the optimum multiplier the slack is zero, so moving the bound up
    # makes the gradient negative and moving it down makes it positive
    lam = np.array([2.2313])
    assert dual_gradient_finite(finite_problem(c1=13.30), lam)[0] < 0
    assert dual_gradient_finite(finite_problem(c1=13.20), lam)[0] > 0
    assert abs(dual_gradient_finite(finite_problem(c1=13.25), lam)[0]) < 1e-3

    lam = np.array([0.6058])
    assert dual_gradient_infinite(infinite_problem(c1=49.50), lam)[0] < 0
    assert dual_gradient_infinite(infinite_problem(c1=49.20), lam)[0] > 0


def test_ascent_reaches_benchmark_optimum_finite():
    result = ascend(finite_problem(), AscentConfig(alpha=0.01, tol=1e-9))
    assert result.status is AscentStatus.OPTIMAL
    assert result.lambda_star.lam[0] == pytest.approx(2.2313, abs=1e-3)
    assert result.dual_value == pytest.approx(22.30, abs=0.01)
    assert result.constraint_costs[0] == pytest.approx(13.25, abs=0.01)
    assert np.abs(result.kkt_residuals).max() < 1e-4
    # trace rows are (iteration, lambda, gradient, dual value)
    assert result.trace.shape[1] == 4
    assert result.trace[0, 0] == 0 and result.trace[-1, 0] <= result.iterations


def test_ascent_reaches_benchmark_optimum_infinite():
    result = ascend(infinite_problem(), AscentConfig(alpha=0.001, tol=1e-9))
    assert result.status is AscentStatus.OPTIMAL
    assert result.lambda_star.lam[0] == pytest.approx(0.6058, abs=1e-3)
    assert result.gains.constant[0, 0] == pytest.approx(2.650791705, abs=1e-4)


def test_ascent_detects_infeasible_bounds():
    result = ascend(finite_problem(c1=13.20),
                    AscentConfig(alpha=0.01, tol=1e-9, divergence_cap=20.0))
    assert result.status is AscentStatus.INFEASIBLE
    assert result.dual_value is None and result.gains is None

    result = ascend(infinite_problem(c1=42.49),
                    AscentConfig(alpha=0.001, tol=1e-9, divergence_cap=50.0))
    assert result.status is AscentStatus.INFEASIBLE


def test_ascent_iteration_limit():
    result = ascend(finite_problem(), AscentConfig(alpha=0.01, tol=1e-9, max_iter=5))
    assert result.status is AscentStatus.ITERATION_LIMIT
    assert result.iterations == 5


def test_multipliers_stay_nonnegative_along_the_trace():
    result = ascend(finite_problem(c1=13.30), AscentConfig(alpha=0.01, tol=1e-9))
    assert result.status is AscentStatus.OPTIMAL
    assert result.lambda_star.lam[0] == pytest.approx(0.0, abs=1e-6)
    assert result.trace[:, 1].min() >= 0.0


def test_warm_start_from_multiplier():
    problem = finite_problem()
    cold = ascend(problem, AscentConfig(alpha=0.01, tol=1e-9))
    warm = ascend(problem, AscentConfig(
        alpha=0.01, tol=1e-9, lambda0=MultiplierVector(lam=[2.2])))
    assert warm.iterations < cold.iterations
    assert warm.lambda_star.lam[0] == pytest.approx(cold.lambda_star.lam[0], abs=1e-6)


def test_dual_function_is_midpoint_concave():
    problem = finite_problem(c2=15.606)
    c = np.array([t.c for t in problem.constraints])

    def phi(lam):
        w = weighted_costs(problem, lam)
        traj = solve_finite(problem.model, w, problem.horizon)
        from delaylqr import dual_value_finite
        return dual_value_finite(traj, problem.model, w, lam, c)

    rng = np.random.default_rng(41)
    for _ in range(25):
        a = rng.uniform(0.0, 3.0, size=2)
        b = rng.uniform(0.0, 3.0, size=2)
        mid = phi((a + b) / 2)
        assert mid >= (phi(a) + phi(b)) / 2 - 1e-9


def test_kkt_check_matches_result_residuals():
    problem = finite_problem()
    result = ascend(problem, AscentConfig(alpha=0.01, tol=1e-9))
    res = kkt_check(problem, result.lambda_star, result.gains)
    assert np.allclose(res, result.kkt_residuals, atol=1e-12)
    # an inactive multiplier contributes a zero residual
    inactive = ascend(finite_problem(c1=13.30), AscentConfig(alpha=0.01, tol=1e-9))
    res = kkt_check(finite_problem(c1=13.30), inactive.lambda_star, inactive.gains)
    assert abs(res[0]) < 1e-6


@pytest.mark.skipif(_kernels_c is None, reason="compiled backend unavailable")
def test_backends_agree_to_machine_precision():
    rng = np.random.default_rng(42)
    A = rng.normal(size=(2, 2)) * 0.5
    Ab = rng.normal(size=(2, 2)) * 0.2
    B = rng.normal(size=(2, 1))
    Bb = rng.normal(size=(2, 1)) * 0.2
    G = rng.normal(size=(2, 2))
    Q = G @ G.T + 2 * np.eye(2)
    G = rng.normal(size=(1, 1))
    R = G @ G.T + np.eye(1)
    F = Q * 0.5 + np.eye(2)
    out_py = _kernels_py.riccati_finite(A, Ab, B, Bb, 0.4, Q, R, F, 2, 6)
    out_c = _kernels_c.riccati_finite(A, Ab, B, Bb, 0.4, Q, R, F, 2, 6)
    for a, b in zip(out_py[:-1], out_c[:-1]):
        assert np.abs(np.asarray(a) - np.asarray(b)).max() < 1e-12
    assert out_py[-1] == out_c[-1]

    out_py = _kernels_py.riccati_infinite(A, Ab, B, Bb, 0.4, Q, R, 2,
                                          1e-12, 100000, 1e12)
    out_c = _kernels_c.riccati_infinite(A, Ab, B, Bb, 0.4, Q, R, 2,
                                        1e-12, 100000, 1e12)
    for a, b in zip(out_py[:5], out_c[:5]):
        assert np.abs(np.asarray(a) - np.asarray(b)).max() < 1e-10


@pytest.mark.skipif(_kernels_c is None, reason="compiled backend unavailable")
def test_backends_agree_on_a_full_ascent():
    problem = finite_problem()
    model = problem.model
    from delaylqr import open_loop_moments, predictor_second_moments
    moments = open_loop_moments(model, model.d)
    S = np.stack([ms.S for ms in moments])
    Shat = np.stack(predictor_second_moments(model, moments))
    Qs = np.stack([t.Q for t in problem.terms])
    Rs = np.stack([t.R for t in problem.terms])
    Fs = np.stack([t.F for t in problem.terms])
    c = np.array([13.25])
    # capped iteration budget: full convergence in the python backend is
    # slow, and 2000 identical steps pin the two loops to each other anyway
    args = (model.A, model.A_bar, model.B, model.B_bar, model.sigma2,
            model.d, problem.horizon, Qs, Rs, Fs, c, np.zeros(1),
            0.01, 1e-9, 2_000, 1e6, 100_000)
    # keyword-free call: (..., S, Shat, lam0, alpha, tol, max_iter, cap, trace_cap)
    st_py, lam_py, it_py, tr_py = _kernels_py.ascend_finite(
        *args[:11], S, Shat, *args[11:])
    st_c, lam_c, it_c, tr_c = _kernels_c.ascend_finite(
        *args[:11], S, Shat, *args[11:])
    assert st_py == st_c and it_py == it_c
    assert np.abs(lam_py - lam_c).max() < 1e-9
