#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs the hot paths — single Riccati solves and full dual-ascent loops —
through both backends and prints a timing table.  The ascent loops are
capped at a fixed iteration count so the comparison is apples-to-apples
regardless of convergence speed.

Usage: python3 benchmarks/compare_backends.py [--iters 20000]
"""

import argparse
import time

import numpy as np

from delaylqr import _kernels_py
from delaylqr.evaluate import open_loop_moments, rotated_predictor_moments
from delaylqr.model import ConstrainedProblem, CostTerm, SystemModel

try:
    from delaylqr import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def finite_problem():
    model = SystemModel(A=[[1.0]], A_bar=[[1.0]], B=[[2.0]], B_bar=[[2.0]],
                        sigma2=1.0, d=1, x0=[1.0], u_init=[[-1.0]])
    objective = CostTerm(Q=[[2.0]], R=[[5.0]], F=[[5.0]])
    constraint = CostTerm(Q=[[2.0]], R=[[3.0]], F=[[1.0]], c=13.25)
    return ConstrainedProblem(model=model, objective=objective,
                              constraints=(constraint,), horizon=2)


def infinite_problem():
    model = SystemModel(A=[[1.3]], A_bar=[[0.1]], B=[[0.2]], B_bar=[[0.1]],
                        sigma2=1.0, d=1, x0=[1.0], u_init=[[-1.0]])
    objective = CostTerm(Q=[[1.0]], R=[[1.0]])
    constraint = CostTerm(Q=[[0.5]], R=[[2.0]], c=49.35)
    return ConstrainedProblem(model=model, objective=objective,
                              constraints=(constraint,), horizon=None)


def matrix_instance(n=4, m=2, d=2, N=40, seed=0):
    rng = np.random.default_rng(seed)

    def spd(k):
        G = rng.normal(size=(k, k))
        return G @ G.T + k * np.eye(k)

    model = SystemModel(
        A=rng.normal(size=(n, n)) * 0.4, A_bar=rng.normal(size=(n, n)) * 0.2,
        B=rng.normal(size=(n, m)), B_bar=rng.normal(size=(n, m)) * 0.2,
        sigma2=0.5, d=d, x0=rng.normal(size=n),
        u_init=[rng.normal(size=m) for _ in range(d)],
    )
    return model, spd(n), spd(m), spd(n), N


def time_call(fn, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--iters", type=int, default=20_000,
                        help="ascent iteration cap per benchmark case")
    args = parser.parse_args()

    if _kernels_c is None:
        raise SystemExit("compiled backend not built; run pip install -e .")

    rows = []

    # repeated finite Riccati solves on a matrix instance
    model, Q, R, F, N = matrix_instance()
    for name, mod in (("numpy", _kernels_py), ("cython", _kernels_c)):
        def run(mod=mod):
            for _ in range(500):
                mod.riccati_finite(model.A, model.A_bar, model.B, model.B_bar,
                                   model.sigma2, Q, R, F, model.d, N)
        rows.append((f"riccati_finite x500 (n=4, N=40) [{name}]", time_call(run)))

    # full ascent loops on the benchmark fixtures, iteration-capped
    fp = finite_problem()
    m = fp.model
    moments = open_loop_moments(m, m.d)
    S = np.stack([ms.S for ms in moments])
    Shat = np.stack(rotated_predictor_moments(m, moments))
    Qs = np.stack([t.Q for t in fp.terms])
    Rs = np.stack([t.R for t in fp.terms])
    Fs = np.stack([t.F for t in fp.terms])
    c = np.array([t.c for t in fp.constraints])
    for name, mod in (("numpy", _kernels_py), ("cython", _kernels_c)):
        def run(mod=mod):
            mod.ascend_finite(m.A, m.A_bar, m.B, m.B_bar, m.sigma2, m.d,
                              fp.horizon, Qs, Rs, Fs, c, S, Shat,
                              np.zeros(1), 0.01, 0.0, args.iters, 1e6, 100_000)
        rows.append((f"ascend_finite {args.iters} iters [{name}]", time_call(run, 1)))

    ip = infinite_problem()
    mi = ip.model
    U = np.stack(mi.u_init)
    from delaylqr.evaluate import initial_predictors
    Xh = initial_predictors(mi)
    Qsi = np.stack([t.Q for t in ip.terms])
    Rsi = np.stack([t.R for t in ip.terms])
    ci = np.array([t.c for t in ip.constraints])
    cap = max(args.iters // 10, 100)
    for name, mod in (("numpy", _kernels_py), ("cython", _kernels_c)):
        def run(mod=mod):
            mod.ascend_infinite(mi.A, mi.A_bar, mi.B, mi.B_bar, mi.sigma2,
                                mi.d, Qsi, Rsi, ci, mi.x0, U, Xh,
                                np.zeros(1), 0.001, 0.0, cap, 1e6,
                                1e-12, 100_000, 1e12, 100_000)
        rows.append((f"ascend_infinite {cap} iters [{name}]", time_call(run, 1)))

    width = max(len(r[0]) for r in rows)
    print(f"{'case'.ljust(width)}  seconds")
    prev = None
    for label, secs in rows:
        line = f"{label.ljust(width)}  {secs:9.4f}"
        if prev is not None and label.split("[")[0] == prev[0].split("[")[0]:
            line += f"   ({prev[1] / secs:6.1f}x faster)"
        print(line)
        prev = (label, secs)


if __name__ == "__main__":
    main()
