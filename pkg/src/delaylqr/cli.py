"""Command-line front end: config ingestion, run orchestration, JSON reports.

Subcommands: solve, evaluate, verify, simulate, certify.  Reports go to
stdout as JSON with floats at 17 significant digits; exit codes are
0 = optimal/success, 2 = infeasible, 3 = not stabilizable,
4 = config/validation error, 5 = iteration limit.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from ._backend import BACKEND
from . import dual, evaluate, simulate
from .model import ConstrainedProblem, CostTerm, MultiplierVector, SystemModel, validate
from .riccati import (
    NotPositiveDefiniteError,
    NotStabilizableError,
    solve_finite,
    solve_infinite,
    weighted_costs,
)

log = logging.getLogger("delaylqr")

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_NOT_STABILIZABLE = 3
EXIT_CONFIG = 4
EXIT_ITER_LIMIT = 5

_STATUS_EXIT = {
    dual.AscentStatus.OPTIMAL: EXIT_OK,
    dual.AscentStatus.INFEASIBLE: EXIT_INFEASIBLE,
    dual.AscentStatus.NOT_STABILIZABLE: EXIT_NOT_STABILIZABLE,
    dual.AscentStatus.ITERATION_LIMIT: EXIT_ITER_LIMIT,
}


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------- serialization

def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    return value


def dumps_report(obj, indent: int = 2) -> str:
    """JSON text with every float rendered at 17 significant digits."""

    def emit(node, depth):
        pad = " " * (indent * depth)
        pad_in = " " * (indent * (depth + 1))
        node = _jsonable(node)
        if isinstance(node, dict):
            if not node:
                return "{}"
            rows = ",\n".join(
                f"{pad_in}{json.dumps(str(k))}: {emit(v, depth + 1)}"
                for k, v in node.items()
            )
            return "{\n" + rows + "\n" + pad + "}"
        if isinstance(node, (list, tuple)):
            if not node:
                return "[]"
            rows = ",\n".join(f"{pad_in}{emit(v, depth + 1)}" for v in node)
            return "[\n" + rows + "\n" + pad + "]"
        if isinstance(node, bool) or node is None:
            return json.dumps(node)
        if isinstance(node, float):
            return f"{node:.17g}"
        return json.dumps(node)

    return emit(obj, 0)


# ------------------------------------------------------------- config parsing

def _require(mapping, key, where):
    if key not in mapping:
        raise ConfigError(f"missing key {key!r} in {where}")
    return mapping[key]


def _parse_term(raw, where, finite):
    Q = _require(raw, "Q", where)
    R = _require(raw, "R", where)
    F = raw.get("F")
    c = raw.get("c")
    try:
        return CostTerm(Q=Q, R=R, F=F, c=c)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_problem(config: dict) -> tuple[ConstrainedProblem, dict]:
    sys_raw = _require(config, "system", "config")
    horizon_raw = _require(config, "horizon", "config")
    if horizon_raw == "infinite":
        horizon = None
    elif isinstance(horizon_raw, dict) and "finite" in horizon_raw:
        horizon = int(horizon_raw["finite"])
    else:
        raise ConfigError('horizon must be {"finite": N} or "infinite"')
    model = SystemModel(
        A=_require(sys_raw, "A", "system"),
        A_bar=_require(sys_raw, "A_bar", "system"),
        B=_require(sys_raw, "B", "system"),
        B_bar=_require(sys_raw, "B_bar", "system"),
        sigma2=_require(sys_raw, "sigma2", "system"),
        d=_require(sys_raw, "d", "system"),
        x0=_require(sys_raw, "x0", "system"),
        u_init=_require(sys_raw, "u_init", "system"),
    )
    objective = _parse_term(_require(config, "objective", "config"), "objective", horizon is not None)
    constraints = tuple(
        _parse_term(raw, f"constraints[{i}]", horizon is not None)
        for i, raw in enumerate(config.get("constraints", []))
    )
    problem = ConstrainedProblem(
        model=model, objective=objective, constraints=constraints, horizon=horizon
    )
    report = validate(problem)
    if not report.ok:
        raise ConfigError("invalid problem: " + "; ".join(report.violations))
    return problem, config.get("ascent", {})


def build_ascent_config(problem, raw: dict, args) -> dual.AscentConfig:
    alpha = args.alpha if args.alpha is not None else raw.get("alpha")
    tol = args.tol if args.tol is not None else raw.get("tol")
    if alpha is None or tol is None:
        raise ConfigError("ascent.alpha and ascent.tol are required for this mode")
    max_iter = args.max_iter if args.max_iter is not None else raw.get("max_iter", 1_000_000)
    lambda0 = raw.get("lambda0")
    try:
        return dual.AscentConfig(
            alpha=float(alpha),
            tol=float(tol),
            max_iter=int(max_iter),
            lambda0=None if lambda0 is None else MultiplierVector(lambda0),
            divergence_cap=float(raw.get("divergence_cap", 1e6)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _lambda0(problem, raw) -> np.ndarray:
    lam = raw.get("lambda0")
    if lam is None:
        return np.zeros(problem.n_constraints)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.shape != (problem.n_constraints,):
        raise ConfigError("lambda0 length must match the number of constraints")
    return lam


# ------------------------------------------------------------- report pieces

def _solution_block(problem, lam):
    """Riccati solution, gains, and dual value at a fixed multiplier."""
    model = problem.model
    w = weighted_costs(problem, lam)
    c = np.array([t.c for t in problem.constraints], dtype=float)
    if problem.is_finite:
        sol = solve_finite(model, w, problem.horizon)
        value = evaluate.dual_value_finite(sol, model, w, lam, c)
        Z, X = sol.Z[model.d], sol.X[model.d]
    else:
        sol = solve_infinite(model, w)
        value = evaluate.dual_value_infinite(sol, model, w, lam, c)
        Z, X = sol.Z, sol.X
    schedule = evaluate.gains(sol)
    costs = [
        evaluate.closed_loop_cost(model, schedule, t, problem.horizon)
        for t in problem.constraints
    ]
    return sol, schedule, {
        "lambda": lam,
        "dual_value": value,
        "Z": Z,
        "X": X,
        "gains": schedule.K,
        "constraint_costs": costs,
    }


def _monte_carlo_block(problem, schedule, args, noise) -> dict:
    terms = problem.terms
    steps = problem.horizon if problem.is_finite else (args.steps or 400)
    estimates = simulate.estimate_costs(
        problem.model, schedule, terms,
        trials=args.trials, steps=steps, seed=args.seed,
        noise=noise, threads=args.threads,
    )
    analytic = [
        evaluate.closed_loop_cost(problem.model, schedule, t, problem.horizon)
        for t in terms
    ]
    rows = []
    for est, ref, label in zip(
        estimates, analytic, ["objective"] + [f"constraint {i+1}" for i in range(len(terms) - 1)]
    ):
        z = (est.mean - ref) / est.std_error if est.std_error > 0 else 0.0
        rows.append(
            {
                "term": label,
                "mean": est.mean,
                "std_error": est.std_error,
                "tail": est.tail,
                "analytic": ref,
                "z_score": z,
                "within_3se": bool(abs(z) <= 3.0),
            }
        )
    return {
        "trials": args.trials,
        "steps": steps,
        "seed": args.seed,
        "noise": noise,
        "estimates": rows,
    }


def _write_trace(path, trace: np.ndarray, n_constraints: int):
    header = (
        ["n"]
        + [f"lambda_{i+1}" for i in range(n_constraints)]
        + [f"gradient_{i+1}" for i in range(n_constraints)]
        + ["dual_value"]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in trace:
            writer.writerow([int(row[0])] + [f"{v:.17g}" for v in row[1:]])


def _write_plot_data(path, profile: np.ndarray):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "second_moment"])
        for k, v in enumerate(profile):
            writer.writerow([k, f"{v:.17g}"])


def _moment_profile(problem, schedule, steps: int) -> np.ndarray:
    if not problem.is_finite:
        return simulate.second_moment_profile(
            problem.model, schedule.constant, steps
        )
    # finite horizon: exact propagation under the time-varying schedule
    model = problem.model
    n, m, d = model.n, model.m, model.d
    S = evaluate._initial_augmented(model)
    out = np.empty(problem.horizon + 2)
    for k in range(problem.horizon + 2):
        out[k] = np.trace(S[:n, :n])
        K = (
            schedule.at(k)
            if k <= problem.horizon - d
            else np.zeros((m, n))
        )
        G, H = evaluate._augmented_maps(model, evaluate._control_row(model, K))
        S = G @ S @ G.T + model.sigma2 * (H @ S @ H.T)
    return out


# ------------------------------------------------------------------- modes

def _mode_solve(problem, ascent_raw, args, report):
    config = build_ascent_config(problem, ascent_raw, args)
    result = dual.ascend(problem, config)
    block = {
        "status": result.status.value,
        "lambda_star": result.lambda_star.lam,
        "iterations": result.iterations,
        "trace_rows": len(result.trace),
    }
    if result.status is dual.AscentStatus.OPTIMAL:
        _, schedule, sol_block = _solution_block(problem, result.lambda_star.lam)
        sol_block.pop("lambda")
        block.update(sol_block)
        block["kkt_residuals"] = result.kkt_residuals
        block["max_kkt_residual"] = (
            float(np.abs(result.kkt_residuals).max()) if len(result.kkt_residuals) else 0.0
        )
    report["solve"] = block
    if args.csv_trace:
        _write_trace(args.csv_trace, result.trace, problem.n_constraints)
    if args.plot_data and result.status is dual.AscentStatus.OPTIMAL:
        _write_plot_data(
            args.plot_data,
            _moment_profile(problem, result.gains, args.steps or 400),
        )
    return result, _STATUS_EXIT[result.status]


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    _setup_logging()
    t0 = time.perf_counter()
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    report = {"mode": args.mode, "backend": BACKEND, "config": args.config}
    if not args.no_timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
    try:
        problem, ascent_raw = load_problem(config)
        noise = config.get("noise", "gaussian")
        code = EXIT_OK

        if args.mode == "solve":
            _, code = _mode_solve(problem, ascent_raw, args, report)

        elif args.mode == "evaluate":
            lam = _lambda0(problem, ascent_raw)
            _, schedule, block = _solution_block(problem, lam)
            report["evaluate"] = block
            if args.plot_data:
                _write_plot_data(
                    args.plot_data, _moment_profile(problem, schedule, args.steps or 400)
                )

        elif args.mode == "verify":
            result, code = _mode_solve(problem, ascent_raw, args, report)
            if result.status is dual.AscentStatus.OPTIMAL:
                report["monte_carlo"] = _monte_carlo_block(
                    problem, result.gains, args, noise
                )
                report["kkt_residuals"] = result.kkt_residuals

        elif args.mode == "simulate":
            lam = _lambda0(problem, ascent_raw)
            _, schedule, _ = _solution_block(problem, lam)
            report["simulate"] = _monte_carlo_block(problem, schedule, args, noise)

        elif args.mode == "certify":
            if problem.is_finite:
                raise ConfigError("certify applies to the infinite-horizon law")
            lam = _lambda0(problem, ascent_raw)
            _, schedule, _ = _solution_block(problem, lam)
            cert = simulate.stability_certificate(problem.model, schedule.constant)
            report["certificate"] = {
                "gain": schedule.constant,
                "spectral_radius": cert.spectral_radius,
                "stable": cert.stable,
            }
            if args.plot_data:
                _write_plot_data(
                    args.plot_data, _moment_profile(problem, schedule, args.steps or 400)
                )

    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotStabilizableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        report["status"] = "NotStabilizable"
        print(dumps_report(report))
        return EXIT_NOT_STABILIZABLE
    except NotPositiveDefiniteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except evaluate.DivergingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        report["status"] = "NotStabilizable"
        print(dumps_report(report))
        return EXIT_NOT_STABILIZABLE

    if not args.no_timestamp:
        report["elapsed_seconds"] = time.perf_counter() - t0
    print(dumps_report(report))
    return code


def _setup_logging():
    level = os.environ.get("DELAY_LQR_LOG", "warn").lower()
    mapping = {
        "error": logging.ERROR,
        "warn": logging.WARNING,
        "info": logging.INFO,
        "debug": logging.DEBUG,
    }
    logging.basicConfig(
        level=mapping.get(level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delay-lqr",
        description=(
            "Constrained LQR with input delay and multiplicative noise: "
            "dual-ascent solver, exact evaluation, and Monte Carlo checks."
        ),
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode, helptext in [
        ("solve", "run the dual ascent end-to-end"),
        ("evaluate", "Riccati solution, gains and dual value at a fixed multiplier"),
        ("verify", "solve, then cross-check costs by Monte Carlo and report KKT data"),
        ("simulate", "Monte Carlo cost estimates for the multiplier in the config"),
        ("certify", "mean-square stability certificate for the config's gain"),
    ]:
        p = sub.add_parser(mode, help=helptext)
        p.add_argument("--config", required=True, help="path to the JSON problem file")
        p.add_argument("--alpha", type=float, default=None, help="override ascent step size")
        p.add_argument("--tol", type=float, default=None, help="override ascent tolerance")
        p.add_argument("--max-iter", type=int, default=None, help="override ascent iteration cap")
        p.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")
        p.add_argument("--trials", type=int, default=10_000, help="Monte Carlo trials")
        p.add_argument(
            "--steps", type=int, default=None,
            help="simulation/truncation steps (infinite horizon; default 400)",
        )
        p.add_argument("--threads", type=int, default=1, help="parallel trial workers")
        p.add_argument("--csv-trace", default=None, metavar="FILE",
                       help="write the per-iteration ascent table as CSV")
        p.add_argument("--plot-data", default=None, metavar="FILE",
                       help="write (k, E[x_k^T x_k]) pairs as CSV")
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit timestamp and timing (byte-stable reports)")
    return parser


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
