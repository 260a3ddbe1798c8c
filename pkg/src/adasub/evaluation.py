"""Baselines, selection metrics, and the replication harness.

Provides forward stepwise selection, per-selection scoring against the
generating model (false positives/negatives, exact recovery, coefficient
MSE, prediction RMSE), a grid-sweep experiment runner with deterministic
parallel execution, and a q/K sensitivity sweep.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .criteria import AIC, BIC, CUSTOM, EBIC, CriterionSpec, evaluate
from .data import Dataset, fit_subset, predict, validate_subset
from .engine import AdaSubConfig, AdaSubResult, run
from .simulate import (
    BLOCK,
    EQUAL,
    IDENTITY,
    TOEPLITZ,
    CorrelationSpec,
    SimConfig,
    SimulatedData,
    derive_seed,
    simulate,
)
from .solver import BRANCH_AND_BOUND, EXHAUSTIVE, SolverConfig, full_search


class PlanError(ValueError):
    """Malformed experiment plan file."""


@dataclass(frozen=True)
class Metrics:
    false_positives: int
    false_negatives: int
    exact: bool
    mse_beta: float
    rmse_pred: float | None  # None when no test set is available


@dataclass(frozen=True)
class ExperimentPlan:
    """A grid sweep: the cartesian product of n_list and p_list, with the
    remaining settings shared across cells."""

    n_list: tuple[int, ...]
    p_list: tuple[int, ...]
    corr: CorrelationSpec = CorrelationSpec()
    s0: int | None = None
    test_n: int = 100
    criterion: CriterionSpec = CriterionSpec(BIC)
    q: float = 10.0
    k_rate: float = 0.0
    t_max: int = 1000
    rho: float = 0.9
    replicates: int = 1
    seed: int = 0
    methods: tuple[str, ...] = ("adasub", "full", "stepwise")
    solver: SolverConfig = SolverConfig()

    def __post_init__(self):
        if not self.n_list or not self.p_list:
            raise PlanError("n and p must each have at least one value")
        if self.replicates < 1:
            raise PlanError("replicates must be >= 1")
        bad = [m for m in self.methods if m not in ("adasub", "full", "stepwise")]
        if bad:
            raise PlanError(f"unknown method(s): {', '.join(bad)}")

    @property
    def cells(self) -> list[tuple[int, int]]:
        return list(itertools.product(self.n_list, self.p_list))


@dataclass
class ResultRow:
    cell: str
    replicate: int
    method: str
    model_kind: str
    model: tuple[int, ...] = ()
    metrics: Metrics | None = None
    score: float | None = None
    runtime_ms: float = 0.0
    error: str = ""


def forward_stepwise(data: Dataset, spec: CriterionSpec, max_size: int) -> tuple[int, ...]:
    """Greedy forward selection; returns the best-scoring visited subset.

    Starts from the empty model, repeatedly adds the single index that
    maximizes the criterion, and stops when no addition improves the score
    or ``max_size`` is reached.
    """
    n, p = data.n, data.p
    if max_size >= n - 2:
        raise ValueError(f"max_size must be < n - 2 = {n - 2}")
    current: tuple[int, ...] = ()
    current_score = evaluate(spec, fit_subset(data, current), n, p).value
    best, best_score = current, current_score
    remaining = list(range(p))
    while len(current) < max_size and remaining:
        step_best = None
        step_score = -math.inf
        for j in remaining:
            cand = tuple(sorted(current + (j,)))
            score = evaluate(spec, fit_subset(data, cand), n, p).value
            if score > step_score:
                step_score = score
                step_best = j
        if step_score <= current_score:
            break
        current = tuple(sorted(current + (step_best,)))
        current_score = step_score
        remaining.remove(step_best)
        if current_score > best_score:
            best, best_score = current, current_score
    return best


def score_selection(selected, truth: SimulatedData, data: Dataset) -> Metrics:
    """Metrics of a selected subset against the generating model.

    Refits OLS on the selected columns; the coefficient MSE is the squared
    l2 distance between the refit full-length coefficient vector (zeros off
    the selection) and the true one. Prediction RMSE uses truth.test when
    present.
    """
    s = validate_subset(selected, data.n, data.p)
    s0 = set(truth.true_support)
    sset = set(s)
    fp = len(sset - s0)
    fn = len(s0 - sset)

    fit = fit_subset(data, s)
    beta_hat = np.zeros(data.p)
    if s:
        beta_hat[list(s)] = fit.coefficients
    mse_beta = float(np.sum((beta_hat - truth.true_beta) ** 2))

    rmse = None
    if truth.test is not None:
        pred = predict(fit, s, truth.test.x)
        rmse = float(np.sqrt(np.mean((truth.test.y - pred) ** 2)))
    return Metrics(
        false_positives=fp,
        false_negatives=fn,
        exact=(fp == 0 and fn == 0),
        mse_beta=mse_beta,
        rmse_pred=rmse,
    )


def _run_cell_replicate(plan: ExperimentPlan, cell_idx: int, n: int, p: int, rep: int) -> list[ResultRow]:
    cell = f"n{n}_p{p}"
    sim_seed = derive_seed(plan.seed, cell_idx, rep, 0)
    sim = simulate(
        SimConfig(
            n=n, p=p, s0=plan.s0, corr=plan.corr, test_n=plan.test_n, seed=sim_seed
        )
    )
    data = sim.train
    rows: list[ResultRow] = []

    def emit(method: str, kind: str, model, score, started: float, err: str = ""):
        met = None
        if not err:
            met = score_selection(model, sim, data)
        rows.append(
            ResultRow(
                cell=cell,
                replicate=rep,
                method=method,
                model_kind=kind,
                model=tuple(model),
                metrics=met,
                score=score,
                runtime_ms=(time.perf_counter() - started) * 1e3,
                error=err,
            )
        )

    if "adasub" in plan.methods:
        started = time.perf_counter()
        try:
            cfg = AdaSubConfig(
                q=plan.q,
                k_rate=plan.k_rate,
                t_max=plan.t_max,
                rho=plan.rho,
                seed=derive_seed(plan.seed, cell_idx, rep, 1),
            )
            res = run(data, plan.criterion, plan.solver, cfg)
            emit("adasub", "best", res.best_model, res.best_score, started)
            thr_score = evaluate(
                plan.criterion, fit_subset(data, res.thresholded_model), n, p
            ).value
            emit("adasub", "thresholded", res.thresholded_model, thr_score, started)
        except Exception as exc:  # record and continue the sweep
            emit("adasub", "best", (), None, started, err=str(exc))

    if "full" in plan.methods:
        started = time.perf_counter()
        try:
            sol = full_search(data, plan.criterion, plan.solver)
            emit("full", "optimum", sol.best, sol.score.value, started)
        except Exception as exc:
            emit("full", "optimum", (), None, started, err=str(exc))

    if "stepwise" in plan.methods:
        started = time.perf_counter()
        try:
            cap = min(plan.solver.cap_uc, n - 3)
            sel = forward_stepwise(data, plan.criterion, max_size=cap)
            score = evaluate(plan.criterion, fit_subset(data, sel), n, p).value
            emit("stepwise", "selected", sel, score, started)
        except Exception as exc:
            emit("stepwise", "selected", (), None, started, err=str(exc))

    return rows


def run_experiment(plan: ExperimentPlan, threads: int = 1) -> list[ResultRow]:
    """Run the full grid; output order is fixed regardless of thread count.

    Each (cell, replicate) job derives its own seeds from the master seed,
    so scheduling cannot change any result. Per-replicate failures are
    recorded as rows carrying an error message.
    """
    jobs = [
        (ci, n, p, rep)
        for ci, (n, p) in enumerate(plan.cells)
        for rep in range(plan.replicates)
    ]
    if threads <= 1:
        chunks = [_run_cell_replicate(plan, *job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda j: _run_cell_replicate(plan, *j), jobs))
    return [row for chunk in chunks for row in chunk]


@dataclass(frozen=True)
class AggregateRow:
    cell: str
    method: str
    model_kind: str
    count: int
    mean_fp: float
    mean_fn: float
    exact_rate: float
    mean_mse_beta: float
    mean_rmse_pred: float | None
    mean_score: float | None
    agreement_with_optimum: float | None


def aggregate(rows: list[ResultRow]) -> list[AggregateRow]:
    """Per (cell, method, model_kind) means over error-free replicates.

    AdaSub rows additionally get the frequency of exact agreement with the
    criterion optimum, when the optimum was computed for the same cell.
    """
    ok = [r for r in rows if not r.error and r.metrics is not None]
    optima: dict[tuple[str, int], tuple[int, ...]] = {
        (r.cell, r.replicate): r.model
        for r in ok
        if r.method == "full" and r.model_kind == "optimum"
    }
    groups: dict[tuple[str, str, str], list[ResultRow]] = {}
    for r in ok:
        groups.setdefault((r.cell, r.method, r.model_kind), []).append(r)

    out = []
    for (cell, method, kind), grp in sorted(groups.items()):
        rmses = [r.metrics.rmse_pred for r in grp if r.metrics.rmse_pred is not None]
        scores = [r.score for r in grp if r.score is not None]
        agreement = None
        if method == "adasub" and optima:
            hits = [
                r.model == optima[(r.cell, r.replicate)]
                for r in grp
                if (r.cell, r.replicate) in optima
            ]
            if hits:
                agreement = float(np.mean(hits))
        out.append(
            AggregateRow(
                cell=cell,
                method=method,
                model_kind=kind,
                count=len(grp),
                mean_fp=float(np.mean([r.metrics.false_positives for r in grp])),
                mean_fn=float(np.mean([r.metrics.false_negatives for r in grp])),
                exact_rate=float(np.mean([r.metrics.exact for r in grp])),
                mean_mse_beta=float(np.mean([r.metrics.mse_beta for r in grp])),
                mean_rmse_pred=float(np.mean(rmses)) if rmses else None,
                mean_score=float(np.mean(scores)) if scores else None,
                agreement_with_optimum=agreement,
            )
        )
    return out


@dataclass(frozen=True)
class SweepRow:
    dataset: int
    label: str
    q: float
    k_rate: float
    best_score: float
    iterations_to_best: int
    failed: bool


def sensitivity_sweep(
    datasets: list[Dataset],
    settings: list[tuple[str, float, float]],  # (label, q, k_rate)
    spec: CriterionSpec,
    solver: SolverConfig,
    base: AdaSubConfig,
) -> list[SweepRow]:
    """Run the adaptive search once per (dataset, setting).

    Per dataset, the reference score is the best score any setting reached;
    each run reports the first iteration at which it matched that score.
    Runs that never match are flagged failed and charged t_max iterations.
    """
    out: list[SweepRow] = []
    for di, data in enumerate(datasets):
        results: list[AdaSubResult] = []
        for si, (label, q, k) in enumerate(settings):
            cfg = replace(
                base, q=q, k_rate=k, seed=derive_seed(base.seed, di, si)
            )
            results.append(run(data, spec, solver, cfg))
        overall = max(r.best_score for r in results)
        for (label, q, k), res in zip(settings, results):
            hit = next(
                (rec.t for rec in res.trace if rec.score >= overall - 1e-9), None
            )
            out.append(
                SweepRow(
                    dataset=di,
                    label=label,
                    q=q,
                    k_rate=k,
                    best_score=res.best_score,
                    iterations_to_best=hit if hit is not None else base.t_max,
                    failed=hit is None,
                )
            )
    return out


def parse_plan(path) -> ExperimentPlan:
    """Read an experiment plan from a flat key = value file.

    One ``key = value`` pair per line; ``#`` starts a comment; commas make a
    list. Keys: n, p (integer lists), corr, c, blocks, s0 (integer or
    ``random``), test_n, criterion, gamma, lambda, q, K (number or ``n``),
    T, rho, replicates, seed, methods, mode, cap_uc.
    """
    kv: dict[str, str] = {}
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise PlanError(f"cannot open plan file {path}: {exc}") from exc
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PlanError(f"{path}: line {line_no}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if key in kv:
            raise PlanError(f"{path}: line {line_no}: duplicate key {key!r}")
        kv[key] = value.strip()

    def ints(key, default):
        if key not in kv:
            return default
        try:
            return tuple(int(tok) for tok in kv[key].split(","))
        except ValueError:
            raise PlanError(f"{path}: {key} must be a comma list of integers") from None

    def num(key, default, cast=float):
        if key not in kv:
            return default
        try:
            return cast(kv[key])
        except ValueError:
            raise PlanError(f"{path}: {key} must be a number") from None

    corr_kind = kv.get("corr", IDENTITY).lower()
    if corr_kind not in (IDENTITY, TOEPLITZ, EQUAL, BLOCK):
        raise PlanError(f"{path}: unknown corr {corr_kind!r}")
    corr = CorrelationSpec(
        kind=corr_kind, c=num("c", 0.0), blocks=int(num("blocks", 1, cast=float))
    )

    s0_raw = kv.get("s0", "random").lower()
    s0 = None if s0_raw == "random" else int(num("s0", 0, cast=float))

    kind = kv.get("criterion", BIC).lower()
    if kind not in (AIC, BIC, EBIC, CUSTOM):
        raise PlanError(f"{path}: unknown criterion {kind!r}")
    criterion = CriterionSpec(
        kind=kind, gamma=num("gamma", 0.0), custom_lambda=num("lambda", 0.0)
    )

    k_raw = kv.get("k", "n").lower()
    k_rate = 0.0 if k_raw == "n" else num("k", 0.0)

    mode = kv.get("mode", EXHAUSTIVE).lower()
    if mode not in (EXHAUSTIVE, BRANCH_AND_BOUND):
        raise PlanError(f"{path}: unknown mode {mode!r}")
    cap = kv.get("cap_uc")
    solver = SolverConfig(mode=mode, cap_uc=int(cap) if cap is not None else None)

    methods = tuple(
        tok.strip().lower() for tok in kv.get("methods", "adasub,full,stepwise").split(",")
    )
    known = {
        "n", "p", "corr", "c", "blocks", "s0", "test_n", "criterion", "gamma",
        "lambda", "q", "k", "t", "rho", "replicates", "seed", "methods",
        "mode", "cap_uc",
    }
    unknown = set(kv) - known
    if unknown:
        raise PlanError(f"{path}: unknown key(s): {', '.join(sorted(unknown))}")

    n_list = ints("n", None)
    p_list = ints("p", None)
    if n_list is None or p_list is None:
        raise PlanError(f"{path}: plan must set both n and p")
    return ExperimentPlan(
        n_list=n_list,
        p_list=p_list,
        corr=corr,
        s0=s0,
        test_n=int(num("test_n", 100, cast=float)),
        criterion=criterion,
        q=num("q", 10.0),
        k_rate=k_rate,
        t_max=int(num("t", 1000, cast=float)),
        rho=num("rho", 0.9),
        replicates=int(num("replicates", 1, cast=float)),
        seed=int(num("seed", 0, cast=float)),
        methods=methods,
        solver=solver,
    )
