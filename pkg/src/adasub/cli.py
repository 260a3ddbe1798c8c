"""Command-line interface.

Subcommands: simulate, bestsubset, run, speed, experiment. All result CSVs
are deterministic given the seed (timestamps go to a separate meta.txt),
use one header row, print reals with 12 significant digits, and label
covariates 1-based; exit codes are 0 (success), 1 (usage error), 2 (data
or numeric error).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .criteria import AIC, BIC, CUSTOM, EBIC, CriterionSpec, evaluate
from .data import DataError, Dataset, fit_subset, load_dataset
from .engine import AdaSubConfig, run as engine_run
from .evaluation import PlanError, aggregate, parse_plan, run_experiment
from .oracles import (
    FINITE_SAMPLE_PF,
    MINIMAL_OIP,
    OracleSpec,
    expected_best_time_infinite_k,
    expected_first_consideration,
    expected_threshold_time,
    run_oracle_many,
)
from .simulate import (
    BLOCK,
    EQUAL,
    IDENTITY,
    TOEPLITZ,
    CorrelationSpec,
    SimConfig,
    SimulationError,
    simulate,
)
from .solver import (
    BRANCH_AND_BOUND,
    EXHAUSTIVE,
    SolverBudgetError,
    SolverConfig,
    full_search,
)


class CliError(Exception):
    """Data or numeric failure surfaced to the user with exit code 2."""


def _fmt(value) -> str:
    """CSV cell: 12 significant digits for reals, plain text otherwise."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "%.12g" % value
    return str(value)


def _write_csv(path: Path, header, rows, force: bool):
    if path.exists() and not force:
        raise CliError(f"refusing to overwrite {path} (pass --force)")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(out: Path, argv):
    with open(out / "meta.txt", "w", encoding="utf-8") as fh:
        fh.write(f"version: {__version__}\n")
        fh.write(f"command: {' '.join(argv)}\n")
        fh.write(f"timestamp: {time.strftime('%Y-%m-%dT%H:%M:%S%z')}\n")


def _criterion_from(args) -> CriterionSpec:
    return CriterionSpec(
        kind=args.criterion, gamma=args.gamma, custom_lambda=args.custom_lambda
    )


def _solver_from(args) -> SolverConfig:
    return SolverConfig(mode=args.mode, cap_uc=args.cap_uc)


def _add_criterion_flags(sp):
    sp.add_argument(
        "--criterion", choices=[AIC, BIC, EBIC, CUSTOM], default=BIC,
        help="selection criterion (default bic)",
    )
    sp.add_argument("--gamma", type=float, default=0.0, help="EBIC gamma in [0, 1]")
    sp.add_argument(
        "--custom-lambda", type=float, default=0.0,
        help="per-variable penalty for --criterion custom",
    )


def _add_solver_flags(sp):
    sp.add_argument(
        "--mode", choices=[EXHAUSTIVE, BRANCH_AND_BOUND], default=EXHAUSTIVE,
        help="sub-solver mode (default exhaustive)",
    )
    sp.add_argument(
        "--cap-uc", type=int, default=None,
        help="max subspace size solved exactly (default 20 exhaustive, 40 bb)",
    )


def _dataset_csv_rows(ds: Dataset):
    for i in range(ds.n):
        yield list(ds.x[i]) + [ds.y[i]]


def _cmd_simulate(args, argv) -> int:
    out = _out_dir(args)
    s0 = None if args.s0 == "random" else int(args.s0)
    try:
        cfg = SimConfig(
            n=args.n, p=args.p, s0=s0,
            corr=CorrelationSpec(kind=args.corr, c=args.c, blocks=args.blocks),
            test_n=args.test_n, seed=args.seed,
        )
        sim = simulate(cfg)
    except SimulationError as exc:
        raise CliError(str(exc)) from exc
    header = list(sim.train.names) + ["y"]
    _write_csv(out / "train.csv", header, _dataset_csv_rows(sim.train), args.force)
    if sim.test is not None:
        _write_csv(out / "test.csv", header, _dataset_csv_rows(sim.test), args.force)
    _write_csv(
        out / "truth.csv",
        ["index", "beta"],
        ([j + 1, float(sim.true_beta[j])] for j in range(args.p)),
        args.force,
    )
    _write_meta(out, argv)
    if args.verbosity >= 1:
        support = ",".join(str(j + 1) for j in sim.true_support) or "-"
        print(f"wrote {out}/train.csv ({args.n}x{args.p}), support: {support}")
    return 0


def _load(args) -> Dataset:
    try:
        return load_dataset(args.data, args.response)
    except DataError as exc:
        raise CliError(str(exc)) from exc


def _cmd_bestsubset(args, argv) -> int:
    data = _load(args)
    try:
        sol = full_search(data, _criterion_from(args), _solver_from(args))
    except (SolverBudgetError, DataError, ValueError) as exc:
        raise CliError(str(exc)) from exc
    names = ",".join(data.names[j] for j in sol.best) or "-"
    print(f"subset: {names}")
    print(f"indices: {','.join(str(j + 1) for j in sol.best) or '-'}")
    print(f"score: {_fmt(sol.score.value)}")
    print(f"evaluated_count: {sol.evaluated_count}")
    return 0


def _cmd_run(args, argv) -> int:
    data = _load(args)
    out = _out_dir(args)
    try:
        cfg = AdaSubConfig(
            q=args.q, k_rate=args.K, t_max=args.T, rho=args.rho, seed=args.seed,
            trace_prob_interval=args.trace_probs,
        )
        res = engine_run(data, _criterion_from(args), _solver_from(args), cfg)
    except (DataError, ValueError) as exc:
        raise CliError(str(exc)) from exc

    _write_csv(
        out / "trace.csv",
        ["t", "v_size", "s_size", "score", "expected_search_size"],
        (
            [r.t, r.v_size, r.s_size, r.score, r.expected_search_size]
            for r in res.trace
        ),
        args.force,
    )
    _write_csv(
        out / "final_probs.csv",
        ["name", "r"],
        ([data.names[j], float(res.final_probs[j])] for j in range(data.p)),
        args.force,
    )
    thr_score = evaluate(
        _criterion_from(args), fit_subset(data, res.thresholded_model), data.n, data.p
    ).value
    _write_csv(
        out / "models.csv",
        ["model_kind", "indices", "score"],
        [
            ["best", " ".join(str(j + 1) for j in res.best_model), res.best_score],
            [
                "thresholded",
                " ".join(str(j + 1) for j in res.thresholded_model),
                thr_score,
            ],
        ],
        args.force,
    )
    if res.prob_snapshots:
        _write_csv(
            out / "prob_snapshots.csv",
            ["t", "name", "r"],
            (
                [t, data.names[j], float(probs[j])]
                for t, probs in res.prob_snapshots
                for j in range(data.p)
            ),
            args.force,
        )
    _write_meta(out, argv)
    if args.verbosity >= 1:
        best = ",".join(str(j + 1) for j in res.best_model) or "-"
        thr = ",".join(str(j + 1) for j in res.thresholded_model) or "-"
        print(f"best model: {best} (score {_fmt(res.best_score)})")
        print(f"thresholded model (rho={args.rho}): {thr}")
    return 0


def _cmd_speed(args, argv) -> int:
    try:
        k = math.inf if args.K.lower() == "inf" else float(args.K)
        spec = OracleSpec(
            kind=args.oracle, s_star=tuple(range(args.sstar)), p=args.p
        )
        cfg = AdaSubConfig(
            q=args.q, k_rate=k, t_max=args.T, rho=args.rho, seed=args.seed
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    try:
        results = run_oracle_many(spec, cfg, args.reps)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    rows = [
        [rep, res.t_best, res.t_thresh, res.censored]
        for rep, res in enumerate(results)
    ]
    t_best = np.array([res.t_best for res in results], dtype=float)
    t_thresh = np.array([res.t_thresh for res in results], dtype=float)
    censored = sum(res.censored for res in results)

    rows.append(
        ["mean", float(t_best.mean()), float(t_thresh.mean()), censored]
    )
    rows.append(
        ["expected_first_consideration",
         expected_first_consideration(args.p, args.q), None, None]
    )
    if math.isinf(k):
        if args.sstar >= 1:
            rows.append(
                ["expected_best_time_infinite_k",
                 expected_best_time_infinite_k(args.p, args.q, args.sstar),
                 None, None]
            )
    else:
        try:
            _, exp_thresh = expected_threshold_time(args.p, args.q, k, args.rho)
            rows.append(["expected_threshold_time", None, exp_thresh, None])
        except ValueError:
            pass
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, ["rep", "t_best", "t_thresh", "censored"], rows, args.force)
    if args.verbosity >= 1:
        print(
            f"{args.reps} replicates: mean t_best {_fmt(float(t_best.mean()))}, "
            f"mean t_thresh {_fmt(float(t_thresh.mean()))}, censored {censored}"
        )
    return 0


def _cmd_experiment(args, argv) -> int:
    try:
        plan = parse_plan(args.plan)
    except PlanError as exc:
        raise CliError(str(exc)) from exc
    out = _out_dir(args)
    rows = run_experiment(plan, threads=args.threads)

    def metric_cells(r):
        m = r.metrics
        if m is None:
            return [None, None, None, None, None]
        return [
            m.false_positives, m.false_negatives, m.exact, m.mse_beta, m.rmse_pred
        ]

    _write_csv(
        out / "results.csv",
        ["cell", "replicate", "method", "model_kind", "model",
         "fp", "fn", "exact", "mse_beta", "rmse_pred", "score", "error"],
        (
            [r.cell, r.replicate, r.method, r.model_kind,
             " ".join(str(j + 1) for j in r.model)]
            + metric_cells(r)
            + [r.score, r.error]
            for r in rows
        ),
        args.force,
    )
    # wall times vary run to run, so they live outside the deterministic CSVs
    _write_csv(
        out / "timings.csv",
        ["cell", "replicate", "method", "model_kind", "runtime_ms"],
        ([r.cell, r.replicate, r.method, r.model_kind, r.runtime_ms] for r in rows),
        args.force,
    )
    _write_csv(
        out / "aggregates.csv",
        ["cell", "method", "model_kind", "count", "mean_fp", "mean_fn",
         "exact_rate", "mean_mse_beta", "mean_rmse_pred", "mean_score",
         "agreement_with_optimum"],
        (
            [a.cell, a.method, a.model_kind, a.count, a.mean_fp, a.mean_fn,
             a.exact_rate, a.mean_mse_beta, a.mean_rmse_pred, a.mean_score,
             a.agreement_with_optimum]
            for a in aggregate(rows)
        ),
        args.force,
    )
    _write_meta(out, argv)
    errors = sum(1 for r in rows if r.error)
    if args.verbosity >= 1:
        print(f"wrote {out}/results.csv ({len(rows)} rows, {errors} errors)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adasub",
        description="Adaptive subspace search for l0-criterion variable selection.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, out_default=None):
        sp.add_argument("--seed", type=int, default=0, help="master RNG seed")
        if out_default is not False:
            sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--force", action="store_true", help="overwrite existing files")
        sp.add_argument(
            "-v", "--verbose", dest="verbosity", action="store_const", const=2,
            default=1, help="verbose output",
        )
        sp.add_argument(
            "--quiet", dest="verbosity", action="store_const", const=0,
            help="suppress the summary line",
        )

    sp = sub.add_parser("simulate", help="generate a synthetic dataset")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--s0", default="random", help="support size, or 'random'")
    sp.add_argument(
        "--corr", choices=[IDENTITY, TOEPLITZ, EQUAL, BLOCK], default=IDENTITY
    )
    sp.add_argument("--c", type=float, default=0.0, help="correlation parameter")
    sp.add_argument("--blocks", type=int, default=1, help="block count (block corr)")
    sp.add_argument("--test-n", type=int, default=100)
    common(sp)
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("bestsubset", help="exact criterion-optimal model (small p)")
    sp.add_argument("--data", required=True, help="CSV with one response column")
    sp.add_argument("--response", default="y", help="response column name")
    _add_criterion_flags(sp)
    _add_solver_flags(sp)
    common(sp, out_default=False)
    sp.set_defaults(func=_cmd_bestsubset)

    sp = sub.add_parser("run", help="adaptive subspace search on a dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--response", default="y")
    _add_criterion_flags(sp)
    _add_solver_flags(sp)
    sp.add_argument("--q", type=float, default=10.0, help="initial expected search size")
    sp.add_argument("--K", type=float, default=0.0, help="learning rate (default n)")
    sp.add_argument("--T", type=int, default=1000, help="iterations")
    sp.add_argument("--rho", type=float, default=0.9, help="threshold")
    sp.add_argument(
        "--trace-probs", type=int, default=0,
        help="snapshot full probabilities every N iterations",
    )
    common(sp)
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("speed", help="oracle convergence-speed replicates")
    sp.add_argument("--oracle", choices=[FINITE_SAMPLE_PF, MINIMAL_OIP], required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--sstar", type=int, required=True, help="optimal set size")
    sp.add_argument("--q", type=float, default=10.0)
    sp.add_argument("--K", required=True, help="learning rate, a number or 'inf'")
    sp.add_argument("--rho", type=float, default=0.9)
    sp.add_argument("--T", type=int, default=10000)
    sp.add_argument("--reps", type=int, default=100)
    common(sp, out_default=False)
    sp.add_argument("--out", required=True, help="output CSV path")
    sp.set_defaults(func=_cmd_speed)

    sp = sub.add_parser("experiment", help="grid sweep from a plan file")
    sp.add_argument("--plan", required=True, help="flat key = value plan file")
    sp.add_argument("--threads", type=int, default=1)
    common(sp)
    sp.set_defaults(func=_cmd_experiment)
    return parser


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses status 2 for usage errors; --help/--version exit 0
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args, ["adasub"] + list(argv))
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
