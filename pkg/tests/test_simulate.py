import numpy as np
import pytest

from delaylqr import (
    AscentConfig,
    GainSchedule,
    SystemModel,
    ascend,
    closed_loop_cost,
    estimate_costs,
    predictor,
    rollout,
    second_moment_profile,
    stability_certificate,
)

from conftest import (
    finite_problem,
    infinite_model,
    infinite_problem,
    random_model,
)


import functools


@functools.lru_cache(maxsize=1)
def _benchmark_schedule():
    result = ascend(infinite_problem(), AscentConfig(alpha=0.001, tol=1e-9))
    return result.gains


def test_rollout_is_deterministic_in_seed():
    model = infinite_model()
    sched = _benchmark_schedule()
    a = rollout(model, sched, steps=50, seed=3)
    b = rollout(model, sched, steps=50, seed=3)
    c = rollout(model, sched, steps=50, seed=4)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.noises, b.noises)
    assert not np.array_equal(a.states, c.states)
    assert a.states.shape == (52, 1) and a.controls.shape == (51, 1)


def test_rollout_stage_costs_skip_preloaded_controls():
    model = infinite_model()
    problem = infinite_problem()
    sched = _benchmark_schedule()
    rec = rollout(model, sched, steps=20, seed=1, terms=(problem.objective,))
    # k = 0 is inside the delay window: only the state term contributes
    x0 = rec.states[0]
    assert rec.stage_costs[0, 0] == pytest.approx(float(x0 @ problem.objective.Q @ x0))
    u0 = rec.controls[0]
    x1 = rec.states[1]
    expected = float(x1 @ problem.objective.Q @ x1 + u0 @ problem.objective.R @ u0)
    assert rec.stage_costs[0, 1] == pytest.approx(expected)


def test_rademacher_noise_is_two_valued():
    model = infinite_model()
    rec = rollout(model, _benchmark_schedule(), steps=100, seed=0,
                  noise="rademacher")
    sigma = np.sqrt(model.sigma2)
    assert set(np.round(np.unique(rec.noises), 12)) <= {-sigma, sigma}


def test_estimates_are_seed_and_thread_deterministic():
    model = infinite_model()
    problem = infinite_problem()
    sched = _benchmark_schedule()
    kw = dict(terms=problem.terms, trials=6000, steps=60, seed=9)
    a = estimate_costs(model, sched, **kw)
    b = estimate_costs(model, sched, **kw)
    c = estimate_costs(model, sched, threads=4, **kw)
    for u, v in zip(a, b):
        assert u.mean == v.mean and u.std_error == v.std_error
    for u, v in zip(a, c):
        assert u.mean == pytest.approx(v.mean, rel=1e-12)


def test_standard_error_shrinks_like_root_trials():
    problem = finite_problem()
    result = ascend(problem, AscentConfig(alpha=0.01, tol=1e-9))
    small = estimate_costs(problem.model, result.gains, (problem.objective,),
                           trials=4000, seed=5)[0]
    big = estimate_costs(problem.model, result.gains, (problem.objective,),
                         trials=64000, seed=5)[0]
    assert small.std_error / big.std_error == pytest.approx(4.0, rel=0.25)


def test_monte_carlo_matches_exact_moments_finite():
    problem = finite_problem()
    result = ascend(problem, AscentConfig(alpha=0.01, tol=1e-9))
    analytic = [
        closed_loop_cost(problem.model, result.gains, t, problem.horizon)
        for t in problem.terms
    ]
    for noise in ("gaussian", "rademacher"):
        est = estimate_costs(problem.model, result.gains, problem.terms,
                             trials=20000, seed=2, noise=noise)
        for e, a in zip(est, analytic):
            assert abs(e.mean - a) < 4.0 * e.std_error


def test_infinite_estimate_includes_tail():
    problem = infinite_problem()
    sched = _benchmark_schedule()
    analytic = closed_loop_cost(problem.model, sched, problem.objective, None)
    est = estimate_costs(problem.model, sched, (problem.objective,),
                         trials=20000, steps=400, seed=11)[0]
    assert est.tail > 0.0
    assert abs(est.mean - analytic) < 4.0 * est.std_error


def test_predictor_matches_sample_mean_of_future_state():
    # u_init chosen so the multiplicative-noise coefficient does not cancel
    model = SystemModel(A=[[1.3]], A_bar=[[0.1]], B=[[0.2]], B_bar=[[0.1]],
                        sigma2=1.0, d=1, x0=[1.0], u_init=[[0.5]])
    xhat = predictor(model, model.x0, list(model.u_init)[::-1])
    idle = GainSchedule(K=np.zeros((1, 1, 1)), horizon=None)
    samples = np.array([
        rollout(model, idle, steps=model.d, seed=s).states[model.d][0]
        for s in range(2000)
    ])
    se = samples.std(ddof=1) / np.sqrt(len(samples))
    assert abs(samples.mean() - xhat[0]) < 5.0 * se


def test_certificate_known_spectral_radii():
    model = infinite_model()  # a = 1.3, abar = 0.1, sigma2 = 1
    cert = stability_certificate(model, np.zeros((1, 1)))
    assert cert.spectral_radius == pytest.approx(1.70, abs=1e-6)
    assert not cert.stable

    dead = SystemModel(A=[[0.0]], A_bar=[[0.0]], B=[[1.0]], B_bar=[[0.0]],
                       sigma2=1.0, d=1, x0=[1.0], u_init=[[0.0]])
    cert = stability_certificate(dead, np.zeros((1, 1)))
    assert cert.spectral_radius == pytest.approx(0.0, abs=1e-8)
    assert cert.stable


def test_certificate_agrees_with_exact_moment_decay():
    rng = np.random.default_rng(51)
    checked = 0
    while checked < 20:
        model = random_model(rng, n_max=2, m_max=2, d_max=2)
        K = rng.normal(size=(model.m, model.n)) * 0.3
        cert = stability_certificate(model, K)
        if abs(cert.spectral_radius - 1.0) < 0.05:
            continue  # skip near-critical draws where truncation is ambiguous
        profile = second_moment_profile(model, K, steps=300)
        if cert.stable:
            assert profile[-1] < max(1e-6, 1e-6 * profile.max())
        else:
            assert profile[-1] > profile[model.d]
        checked += 1


def test_second_moment_profile_matches_certified_loop():
    sched = _benchmark_schedule()
    model = infinite_model()
    cert = stability_certificate(model, sched.constant)
    assert cert.stable and cert.spectral_radius < 1.0
    profile = second_moment_profile(model, sched.constant, steps=200)
    assert profile[200] < 1e-3 * profile.max()
