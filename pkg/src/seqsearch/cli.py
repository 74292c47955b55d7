"""Command-line surface for every pipeline stage.

Exit codes: 0 success, 2 usage/input error, 3 estimator non-convergence,
4 experiment failure (some cell had no converged replication).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .estimation import OptimizerConfig, estimate_benchmark, estimate_mpec
from .harness import (AllDiverged, MonteCarloConfig, run_monte_carlo)
from .likelihood import build_draw_set, consumer_likelihoods
from .model import Parameters, dataset_from_csv, dataset_to_csv, simulate_dataset
from .reservation import (NonPositiveCost, OutOfRange, build_lookup, cost_of_m,
                          lookup_m, solve_m_contraction, solve_m_newton)
from .stats import RngStream

_EXIT_USAGE = 2
_EXIT_NOT_CONVERGED = 3
_EXIT_EXPERIMENT_FAILED = 4


def _fail(msg: str, code: int = _EXIT_USAGE) -> int:
    print(msg, file=sys.stderr)
    return code


def cmd_solve_m(args) -> int:
    try:
        if args.method == "newton":
            m = solve_m_newton(args.c)
        elif args.method == "contraction":
            m = solve_m_contraction(args.c)
        else:
            table = build_lookup(args.table_min, args.table_max, args.fineness)
            m = lookup_m(table, args.c)
    except (NonPositiveCost, OutOfRange, ValueError) as exc:
        return _fail(f"solve-m: {exc}")
    residual = abs(cost_of_m(m) - args.c)
    print(f"m = {m:.15g}")
    print(f"residual = {residual:.15g}")
    return 0


def _parse_beta(text: str) -> np.ndarray:
    return np.array([float(tok) for tok in text.split(",")])


def cmd_simulate(args) -> int:
    try:
        beta = _parse_beta(args.beta)
        params = Parameters(beta=beta, log_c=args.logc)
        if args.n < 1:
            raise ValueError("--n must be >= 1")
        dataset = simulate_dataset(params, args.n, len(beta),
                                   RngStream(args.seed))
    except ValueError as exc:
        return _fail(f"simulate: {exc}")
    dataset_to_csv(dataset, args.out)
    print(f"wrote {args.n} consumers x {len(beta)} products to {args.out}")
    return 0


def cmd_estimate(args) -> int:
    try:
        dataset = dataset_from_csv(args.data)
    except (OSError, ValueError) as exc:
        return _fail(f"estimate: cannot read {args.data}: {exc}")
    draws = build_draw_set(len(dataset), dataset.J, args.d,
                           RngStream(args.seed))
    config = OptimizerConfig()
    if args.method == "benchmark":
        table = build_lookup(args.table_min, args.table_max, args.fineness)
        result = estimate_benchmark(dataset, draws, table, config=config,
                                    rho=args.rho)
    else:
        result = estimate_mpec(dataset, draws, config=config, rho=args.rho)
    with open(args.out, "w") as fh:
        fh.write(result.to_json())
    if args.dump_likelihoods:
        L = consumer_likelihoods(dataset, result.theta_hat, draws,
                                 result.m_hat, method="kernel", rho=args.rho)
        with open(args.dump_likelihoods, "w") as fh:
            fh.write("consumer_id,likelihood\n")
            for i, li in enumerate(L):
                fh.write(f"{i},{li:.17g}\n")
    print(result.to_json())
    return 0 if result.converged else _EXIT_NOT_CONVERGED


def _load_mc_config(args) -> MonteCarloConfig:
    doc = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    if args.reps is not None:
        doc["replications"] = args.reps
    if args.sizes is not None:
        doc["sample_sizes"] = [int(tok) for tok in args.sizes.split(",")]
    if args.seed is not None:
        doc["root_seed"] = args.seed
    kwargs = {}
    if "replications" in doc:
        kwargs["replications"] = int(doc["replications"])
    if "sample_sizes" in doc:
        kwargs["sample_sizes"] = tuple(int(n) for n in doc["sample_sizes"])
    if "beta" in doc or "log_c" in doc:
        beta = np.array(doc.get("beta", [1.0, 0.7, 0.5, 0.3]), dtype=float)
        kwargs["true_params"] = Parameters(beta=beta,
                                           log_c=float(doc.get("log_c", -3.0)))
        kwargs["J"] = len(beta)
    if "D" in doc:
        kwargs["D"] = int(doc["D"])
    if "rho_by_N" in doc:
        kwargs["rho_by_N"] = {int(k): float(v)
                              for k, v in doc["rho_by_N"].items()}
    if "methods" in doc:
        kwargs["methods"] = tuple(doc["methods"])
    if "root_seed" in doc:
        kwargs["root_seed"] = int(doc["root_seed"])
    for key in ("table_c_min", "table_c_max", "table_fineness"):
        if key in doc:
            kwargs[key] = float(doc[key])
    opt_keys = ("f_tol", "x_tol", "max_evals", "al_penalty0", "al_growth",
                "al_outer_max", "constraint_tol")
    opt = {k: doc[k] for k in opt_keys if k in doc}
    if opt:
        kwargs["optimizer"] = OptimizerConfig(**opt)
    cfg = MonteCarloConfig(**kwargs)
    missing = [N for N in cfg.sample_sizes if N not in cfg.rho_by_N]
    if missing:
        raise ValueError(f"rho_by_N does not cover sample sizes {missing}")
    return cfg


def _resolved_config_doc(cfg: MonteCarloConfig) -> dict:
    return {
        "replications": cfg.replications,
        "sample_sizes": list(cfg.sample_sizes),
        "beta": cfg.true_params.beta.tolist(),
        "log_c": cfg.true_params.log_c,
        "D": cfg.D,
        "rho_by_N": {str(k): v for k, v in sorted(cfg.rho_by_N.items())},
        "methods": list(cfg.methods),
        "root_seed": cfg.root_seed,
        "table_c_min": cfg.table_c_min,
        "table_c_max": cfg.table_c_max,
        "table_fineness": cfg.table_fineness,
        "f_tol": cfg.optimizer.f_tol,
        "x_tol": cfg.optimizer.x_tol,
        "max_evals": cfg.optimizer.max_evals,
        "al_penalty0": cfg.optimizer.al_penalty0,
        "al_growth": cfg.optimizer.al_growth,
        "al_outer_max": cfg.optimizer.al_outer_max,
        "constraint_tol": cfg.optimizer.constraint_tol,
    }


def cmd_montecarlo(args) -> int:
    try:
        cfg = _load_mc_config(args)
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
        return _fail(f"montecarlo: {exc}")
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("SEQSEARCH_WORKERS", "1"))
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "config.resolved.json"), "w") as fh:
        json.dump(_resolved_config_doc(cfg), fh, indent=2, sort_keys=True)
    try:
        run_monte_carlo(cfg, out_dir=args.out, workers=workers)
    except AllDiverged as exc:
        return _fail(f"montecarlo: {exc}", _EXIT_EXPERIMENT_FAILED)
    print(f"report written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqsearch",
        description="Sequential-search model simulation and estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-m", help="solve the reservation-cost equation")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--method", choices=("newton", "contraction", "table"),
                   default="newton")
    p.add_argument("--fineness", type=float, default=0.001)
    p.add_argument("--table-min", type=float, default=1e-6)
    p.add_argument("--table-max", type=float, default=0.5)
    p.set_defaults(func=cmd_solve_m)

    p = sub.add_parser("simulate", help="simulate a dataset to CSV")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--beta", default="1.0,0.7,0.5,0.3")
    p.add_argument("--logc", type=float, default=-3.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate on a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=("mpec", "benchmark"), required=True)
    p.add_argument("--rho", type=float, default=10.0)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--table-min", type=float, default=1e-6)
    p.add_argument("--table-max", type=float, default=1.5)
    p.add_argument("--fineness", type=float, default=0.001)
    p.add_argument("--dump-likelihoods", default=None,
                   help="optional CSV of per-consumer likelihoods")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("montecarlo", help="run the full experiment")
    p.add_argument("--config", default=None, help="JSON config document")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--sizes", default=None, help="comma-separated sample sizes")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_montecarlo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
