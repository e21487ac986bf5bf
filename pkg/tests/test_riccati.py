import numpy as np
import pytest

from delaylqr import (
    NotPositiveDefiniteError,
    NotStabilizableError,
    SystemModel,
    WeightedCosts,
    solve_finite,
    solve_infinite,
    weighted_costs,
)

from conftest import finite_problem, infinite_problem, random_model, random_term


def classical_riccati(A, B, Q, R, F, N):
    """Standard undelayed backward Riccati recursion, P_k for k = 0..N+1."""
    n = A.shape[0]
    P = np.empty((N + 2, n, n))
    P[N + 1] = F
    for k in range(N, -1, -1):
        Pn = P[k + 1]
        G = np.linalg.solve(B.T @ Pn @ B + R, B.T @ Pn @ A)
        P[k] = Q + A.T @ Pn @ A - A.T @ Pn @ B @ G
        P[k] = (P[k] + P[k].T) / 2
    return P


def test_weighted_costs_combines_terms():
    w = weighted_costs(finite_problem(), [2.2313])
    assert w.Q[0, 0] == pytest.approx(6.4626)
    assert w.R[0, 0] == pytest.approx(11.6939)
    assert w.F[0, 0] == pytest.approx(5.0 + 2.2313)
    w0 = weighted_costs(infinite_problem(c2=45.21), [0.0, 0.0])
    assert w0.Q[0, 0] == 1.0 and w0.R[0, 0] == 1.0 and w0.F is None


def test_matches_classical_riccati_without_noise_or_delay_coupling():
    # With sigma2 = 0 and d = 1 the recursion collapses onto the classical
    # one for the undelayed pair (A, B); the delay only shifts which gain
    # applies when.  50 random instances, relative 1e-10.
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        N = int(rng.integers(1, 11))
        A = rng.normal(size=(n, n)) * 0.7
        B = rng.normal(size=(n, m))

        def spd(k):
            G = rng.normal(size=(k, k))
            return G @ G.T + k * np.eye(k)

        Q, R, F = spd(n), spd(m), spd(n)
        model = SystemModel(A=A, A_bar=np.zeros((n, n)), B=B,
                            B_bar=np.zeros((n, m)), sigma2=0.0, d=1,
                            x0=np.zeros(n), u_init=[np.zeros(m)])
        traj = solve_finite(model, WeightedCosts(Q=Q, R=R, F=F), N)
        P = classical_riccati(A, B, Q, R, F, N)
        scale = max(1.0, np.abs(P).max())
        # indices below d belong to the open-loop window and are unused
        assert np.abs(traj.Z[1:] - P[1:]).max() / scale < 1e-10
        # X folds the one remaining delayed-decision term back in.
        for k in range(1, N + 1):
            assert np.abs(traj.X[k] - (traj.Z[k] + traj.L[k])).max() / scale < 1e-10
        assert np.abs(traj.X[N + 1] - traj.Z[N + 1]).max() / scale < 1e-10


def test_matches_classical_riccati_on_augmented_state():
    # Same no-noise setting, checked against an independently coded
    # recursion on the stacked state s = (x, u_prev): the value of the
    # optimal policy from s0 must agree with the dual value at lambda = 0.
    from delaylqr import dual_value_finite

    rng = np.random.default_rng(12)
    for _ in range(20):
        n, m = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        N = int(rng.integers(2, 8))
        A = rng.normal(size=(n, n)) * 0.7
        B = rng.normal(size=(n, m))

        def spd(k):
            G = rng.normal(size=(k, k))
            return G @ G.T + k * np.eye(k)

        Q, R, F = spd(n), spd(m), spd(n)
        x0 = rng.normal(size=n)
        u_prev = rng.normal(size=m)
        model = SystemModel(A=A, A_bar=np.zeros((n, n)), B=B,
                            B_bar=np.zeros((n, m)), sigma2=0.0, d=1,
                            x0=x0, u_init=[u_prev])
        w = WeightedCosts(Q=Q, R=R, F=F)
        traj = solve_finite(model, w, N)

        G_aug = np.block([[A, B], [np.zeros((m, n)), np.zeros((m, m))]])
        Bu = np.vstack([np.zeros((n, m)), np.eye(m)])
        Qa = np.block([[Q, np.zeros((n, m))], [np.zeros((m, n)), np.zeros((m, m))]])
        Fa = np.block([[F, np.zeros((n, m))], [np.zeros((m, n)), np.zeros((m, m))]])
        # stage N decides no control (it would act after the horizon)
        P = Qa + G_aug.T @ Fa @ G_aug
        for _k in range(N - 1, -1, -1):
            Ka = np.linalg.solve(Bu.T @ P @ Bu + R, Bu.T @ P @ G_aug)
            P = Qa + G_aug.T @ P @ G_aug - G_aug.T @ P @ Bu @ Ka
            P = (P + P.T) / 2
        s0 = np.concatenate([x0, u_prev])
        expected = float(s0 @ P @ s0)
        got = dual_value_finite(traj, model, w, np.zeros(0), np.zeros(0))
        assert got == pytest.approx(expected, rel=1e-10)


def test_benchmark_finite_values():
    problem = finite_problem()
    w = weighted_costs(problem, [2.2313])
    traj = solve_finite(problem.model, w, 2)
    assert traj.Z[1][0, 0] == pytest.approx(9.1251, abs=2e-3)
    assert traj.X[1][0, 0] == pytest.approx(36.2823, abs=2e-3)
    assert traj.Z[2][0, 0] == pytest.approx(8.8945, abs=2e-3)
    assert traj.X[2][0, 0] == pytest.approx(20.9252, abs=2e-3)


def test_benchmark_infinite_values():
    problem = infinite_problem()
    w = weighted_costs(problem, [0.6058])
    sol = solve_infinite(problem.model, w)
    assert sol.Z[0, 0] == pytest.approx(46.779, abs=2e-2)
    assert sol.X[0, 0] == pytest.approx(81.1712, abs=2e-2)
    assert sol.iterations > 0


def test_solution_shape_invariants():
    rng = np.random.default_rng(21)
    for _ in range(20):
        model = random_model(rng)
        term = random_term(rng, model.n, model.m, finite=True)
        N = int(rng.integers(model.d, 9))
        traj = solve_finite(model, WeightedCosts(Q=term.Q, R=term.R, F=term.F), N)
        assert traj.Z.shape == (N + 2, model.n, model.n)
        for k in range(model.d, N + 2):
            assert np.allclose(traj.Z[k], traj.Z[k].T)
            assert np.allclose(traj.X[k], traj.X[k].T)
            # X - Z stacks PSD terms, so it stays PSD
            assert np.linalg.eigvalsh(traj.X[k] - traj.Z[k]).min() > -1e-9
        for k in range(model.d, N + 1):
            # Upsilon adds PSD pieces on top of R
            assert np.linalg.eigvalsh(traj.Upsilon[k] - term.R).min() > -1e-9


def test_infinite_agrees_with_long_finite_horizon():
    problem = infinite_problem()
    w = weighted_costs(problem, [0.3])
    sol = solve_infinite(problem.model, w)
    wf = WeightedCosts(Q=w.Q, R=w.R, F=w.Q)
    traj = solve_finite(problem.model, wf, 400)
    d = problem.model.d
    assert np.abs(sol.Z - traj.Z[d]).max() < 1e-8
    assert np.abs(sol.X - traj.X[d]).max() < 1e-8


def test_uncontrolled_scalar_fixed_point_is_lyapunov_solution():
    a, abar, s2, q = 0.5, 0.5, 1.0, 1.0
    model = SystemModel(A=[[a]], A_bar=[[abar]], B=[[0.0]], B_bar=[[0.0]],
                        sigma2=s2, d=1, x0=[1.0], u_init=[[0.0]])
    sol = solve_infinite(model, WeightedCosts(Q=[[q]], R=[[1.0]]))
    expected = q / (1.0 - a * a - s2 * abar * abar)
    assert sol.Z[0, 0] == pytest.approx(expected, rel=1e-10)
    assert sol.X[0, 0] == pytest.approx(expected, rel=1e-10)


def test_not_positive_definite_raises():
    model = SystemModel(A=[[0.0]], A_bar=[[0.0]], B=[[1e-3]], B_bar=[[0.0]],
                        sigma2=0.0, d=1, x0=[1.0], u_init=[[0.0]])
    w = WeightedCosts(Q=[[1.0]], R=[[-10.0]], F=[[1.0]])
    with pytest.raises(NotPositiveDefiniteError):
        solve_finite(model, w, 3)


def test_unstabilizable_system_raises():
    model = SystemModel(A=[[1.3]], A_bar=[[0.1]], B=[[0.0]], B_bar=[[0.0]],
                        sigma2=1.0, d=1, x0=[1.0], u_init=[[0.0]])
    with pytest.raises(NotStabilizableError) as exc:
        solve_infinite(model, WeightedCosts(Q=[[1.0]], R=[[1.0]]))
    assert exc.value.iterations > 0
