"""Monte Carlo verification of the closed loop and mean-square stability checks."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .evaluate import GainSchedule, _augmented_maps, _control_row, predictor
from .model import CostTerm, SystemModel

__all__ = [
    "RolloutRecord",
    "CostEstimate",
    "StabilityCertificate",
    "rollout",
    "estimate_costs",
    "stability_certificate",
    "second_moment_profile",
]

_CHUNK = 4096


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    # counter-based generator keyed by (seed, trial): trials are
    # independent and insensitive to execution order
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) + int(trial)))


def _draw_noise(rng, shape, sigma, noise: str):
    if noise == "gaussian":
        return rng.standard_normal(shape) * sigma
    if noise == "rademacher":
        return (2.0 * rng.integers(0, 2, size=shape) - 1.0) * sigma
    raise ValueError(f"unknown noise kind {noise!r}")


@dataclass(frozen=True)
class RolloutRecord:
    """One sampled trajectory; states[k] is x_k, controls[k] is u_k."""

    states: np.ndarray
    controls: np.ndarray
    noises: np.ndarray
    stage_costs: np.ndarray  # (len(terms), steps+1); empty when no terms given


@dataclass(frozen=True)
class CostEstimate:
    mean: float
    std_error: float
    trials: int
    tail: float = 0.0  # geometric extrapolation added to truncated horizons


@dataclass(frozen=True)
class StabilityCertificate:
    spectral_radius: float
    stable: bool


def rollout(
    model: SystemModel,
    schedule: GainSchedule,
    steps: int,
    seed: int,
    terms: tuple[CostTerm, ...] = (),
    noise: str = "gaussian",
) -> RolloutRecord:
    """Simulate x_0..x_{steps+1} under the feedback law, deterministically in seed."""
    if steps < model.d:
        raise ValueError("steps must be at least the delay d")
    n, m, d = model.n, model.m, model.d
    rng = _trial_rng(seed, 0)
    w = _draw_noise(rng, steps + 1, math.sqrt(model.sigma2), noise)

    states = np.zeros((steps + 2, n))
    controls = np.zeros((steps + 1, m))
    states[0] = model.x0
    past = list(model.u_init)  # u_{k-d}..u_{k-1} rolling window
    last_gain = (schedule.horizon or 0) - d if schedule.is_finite else None
    for k in range(steps + 1):
        if schedule.is_finite and k > last_gain:
            u = np.zeros(m)
        else:
            xh = predictor(model, states[k], past[::-1])
            u = -schedule.at(k) @ xh
        controls[k] = u
        u_applied = past[0]  # u_{k-d}
        states[k + 1] = (model.A + w[k] * model.A_bar) @ states[k] + (
            model.B + w[k] * model.B_bar
        ) @ u_applied
        past = past[1:] + [u]

    stage = np.zeros((len(terms), steps + 1))
    for i, term in enumerate(terms):
        for k in range(steps + 1):
            stage[i, k] = states[k] @ term.Q @ states[k]
            if k >= d:
                uc = controls[k - d]
                stage[i, k] += uc @ term.R @ uc
    return RolloutRecord(states=states, controls=controls, noises=w[: steps + 1], stage_costs=stage)


def _simulate_chunk(model, schedule, terms, steps, seed, trial_lo, trial_hi, noise):
    """Vectorized rollout of trials [trial_lo, trial_hi); returns per-trial costs
    (terms, trials) and the ensemble per-step mean stage cost (terms, steps+1)."""
    n, m, d = model.n, model.m, model.d
    t = trial_hi - trial_lo
    sigma = math.sqrt(model.sigma2)
    w = np.empty((t, steps + 1))
    for j in range(t):
        w[j] = _draw_noise(_trial_rng(seed, trial_lo + j), steps + 1, sigma, noise)

    finite = schedule.is_finite
    x = np.broadcast_to(model.x0, (t, n)).copy()
    past = [np.broadcast_to(u, (t, m)).copy() for u in model.u_init]
    Ad = np.linalg.matrix_power(model.A, d)
    # predictor control-weight blocks A^{i-1}B for i = 1..d (most recent first)
    pred_blocks = []
    Ai = np.eye(n)
    for _ in range(d):
        pred_blocks.append(Ai @ model.B)
        Ai = Ai @ model.A
    last_gain = (schedule.horizon or 0) - d if finite else None

    totals = np.zeros((len(terms), t))
    steps_mean = np.zeros((len(terms), steps + 1))
    controls_hist = {}
    for k in range(steps + 1):
        for i, term in enumerate(terms):
            sc = np.einsum("tj,jl,tl->t", x, term.Q, x)
            if k >= d:  # R-cost indexes the decided controls u_0, u_1, ...
                u_cost = controls_hist[k - d]
                sc = sc + np.einsum("tj,jl,tl->t", u_cost, term.R, u_cost)
            totals[i] += sc
            steps_mean[i, k] = sc.mean()
        if finite and k > last_gain:
            u = np.zeros((t, m))
        else:
            xh = x @ Ad.T
            for i in range(d):  # u_{k-1-i} weighted by A^i B
                xh = xh + past[d - 1 - i] @ pred_blocks[i].T
            u = -xh @ schedule.at(k).T
        controls_hist[k] = u
        u_applied = past[0]
        coef = model.A + w[:, k, None, None] * model.A_bar  # (t, n, n)
        coefB = model.B + w[:, k, None, None] * model.B_bar
        x = np.einsum("tij,tj->ti", coef, x) + np.einsum("tij,tj->ti", coefB, u_applied)
        past = past[1:] + [u]
    if finite:
        for i, term in enumerate(terms):
            totals[i] += np.einsum("tj,jl,tl->t", x, term.F, x)
    return totals, steps_mean


def estimate_costs(
    model: SystemModel,
    schedule: GainSchedule,
    terms,
    trials: int,
    steps: int | None = None,
    seed: int = 0,
    noise: str = "gaussian",
    threads: int = 1,
) -> list[CostEstimate]:
    """Sample mean and standard error of each cost term over independent trials.

    Finite horizons are summed exactly through the terminal weight; the
    infinite horizon is truncated at ``steps`` (default 400) and a
    geometric tail estimate, fitted on the last decile of per-step
    ensemble costs, is added to the mean.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    terms = tuple(terms)
    finite = schedule.is_finite
    if finite:
        steps = schedule.horizon
    elif steps is None:
        steps = 400

    ranges = [(lo, min(lo + _CHUNK, trials)) for lo in range(0, trials, _CHUNK)]
    args = [
        (model, schedule, terms, steps, seed, lo, hi, noise) for lo, hi in ranges
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda a: _simulate_chunk(*a), args))
    else:
        parts = [_simulate_chunk(*a) for a in args]
    totals = np.concatenate([p[0] for p in parts], axis=1)
    weights = np.array([hi - lo for lo, hi in ranges], dtype=float)
    steps_mean = np.einsum(
        "c,cik->ik", weights / trials, np.stack([p[1] for p in parts])
    )

    out = []
    for i in range(len(terms)):
        mean = float(totals[i].mean())
        se = float(totals[i].std(ddof=1) / math.sqrt(trials))
        tail = 0.0
        if not finite:
            tail = _geometric_tail(steps_mean[i])
        out.append(
            CostEstimate(mean=mean + tail, std_error=se, trials=trials, tail=tail)
        )
    return out


def _geometric_tail(per_step: np.ndarray) -> float:
    """Extrapolate the truncated remainder from the last decile's decay rate."""
    k = len(per_step)
    dec = max(k // 10, 2)
    window = per_step[-dec:]
    if np.any(window <= 0):
        return 0.0
    # log-linear fit of the decay; clip to a convergent ratio
    slope = np.polyfit(np.arange(dec), np.log(window), 1)[0]
    r = math.exp(slope)
    if r >= 1.0:
        return 0.0
    last = window[-1]
    return float(last * r / (1.0 - r))


def second_moment_profile(
    model: SystemModel, K: np.ndarray, steps: int
) -> np.ndarray:
    """Exact E[x_kᵀx_k] for k = 0..steps under the constant-gain law."""
    n = model.n
    C = _control_row(model, np.asarray(K, dtype=float))
    G, H = _augmented_maps(model, C)
    parts = [model.x0] + [model.u_init[model.d - 1 - i] for i in range(model.d)]
    s0 = np.concatenate(parts)
    S = np.outer(s0, s0)
    out = np.empty(steps + 1)
    for k in range(steps + 1):
        out[k] = np.trace(S[:n, :n])
        S = G @ S @ G.T + model.sigma2 * (H @ S @ H.T)
        S = (S + S.T) / 2
    return out


def stability_certificate(model: SystemModel, K) -> StabilityCertificate:
    """Spectral radius of the second-moment map S ↦ GSGᵀ + σ²HSHᵀ.

    The closed loop is mean-square stable iff the radius is below one.
    Power iteration on the (cone-preserving) operator, tolerance 1e-10.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    C = _control_row(model, K)
    G, H = _augmented_maps(model, C)
    p = G.shape[0]
    S = np.eye(p)
    rho_prev = 0.0
    for _ in range(100_000):
        T = G @ S @ G.T + model.sigma2 * (H @ S @ H.T)
        T = (T + T.T) / 2
        rho = np.abs(T).max()
        if rho == 0.0:
            return StabilityCertificate(spectral_radius=0.0, stable=True)
        S = T / rho
        if abs(rho - rho_prev) <= 1e-10 * max(rho, 1.0):
            break
        rho_prev = rho
    return StabilityCertificate(spectral_radius=float(rho), stable=bool(rho < 1.0))
