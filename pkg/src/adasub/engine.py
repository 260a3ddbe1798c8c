"""Adaptive subspace search: Bernoulli subspace sampling with exact
sub-solves and adaptive selection-probability updates.

Each iteration t samples V(t) by independent Bernoulli draws with the
current per-variable probabilities, solves the best-subset sub-problem on
V(t), and updates

    r_j(t) = (q + K * #{i <= t : j selected}) / (p + K * #{i <= t : j considered})

The engine stores the integer count vectors and derives r on demand, so the
update is exact. Outputs are the best sampled model (argmax of the
per-iteration scores, earliest iteration on ties), the thresholded model
{j : r_j(T) > rho}, and an iteration trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .criteria import CriterionSpec
from .data import Dataset
from .solver import SolverConfig, solve


class EngineInvariantError(AssertionError):
    """A per-iteration invariant of the probability update was violated."""


@dataclass(frozen=True)
class AdaSubConfig:
    q: float = 10.0          # initial expected search size, in (0, p)
    k_rate: float = 0.0      # learning rate K; 0 means "use n"
    t_max: int = 1000
    rho: float = 0.9
    seed: int = 0
    trace_prob_interval: int = 0  # 0 = never snapshot the full r vector
    validate: bool = False        # check update invariants every iteration

    def __post_init__(self):
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must be in (0, 1)")
        if self.trace_prob_interval < 0:
            raise ValueError("trace_prob_interval must be >= 0")

    def resolved_k(self, n: int) -> float:
        k = self.k_rate if self.k_rate > 0 else float(n)
        if not math.isfinite(k):
            raise ValueError("k_rate must be finite for data-driven runs")
        return k


@dataclass
class AdaSubState:
    t: int
    select_counts: np.ndarray   # per-variable times in the selected subset
    consider_counts: np.ndarray  # per-variable times in the searched subspace


@dataclass(frozen=True)
class TraceRecord:
    t: int
    v_size: int
    s_size: int
    score: float
    expected_search_size: float


@dataclass
class AdaSubResult:
    best_model: tuple[int, ...]
    best_score: float
    best_first_t: int
    thresholded_model: tuple[int, ...]
    final_probs: np.ndarray
    trace: list[TraceRecord]
    prob_snapshots: list[tuple[int, np.ndarray]]
    state: AdaSubState


def selection_probabilities(
    q: float, k: float, p: int, select_counts: np.ndarray, consider_counts: np.ndarray
) -> np.ndarray:
    """Vector of r_j from the count sums; equals q/p everywhere at t=0."""
    return (q + k * select_counts) / (p + k * consider_counts)


def selection_probability(state: AdaSubState, cfg: AdaSubConfig, j: int, p: int, n: int = 0) -> float:
    """Scalar r_j for variable j given the current counts."""
    k = cfg.k_rate if cfg.k_rate > 0 else float(n)
    return float(
        (cfg.q + k * state.select_counts[j]) / (p + k * state.consider_counts[j])
    )


def sample_subspace(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli draws; returns the sorted indices drawn."""
    return np.flatnonzero(rng.random(len(probs)) < probs)


def _check_iteration(r_prev, r_new, v_eff, selected, q, k, p, t):
    if not (np.all(r_new > 0.0) and np.all(r_new < 1.0)):
        raise EngineInvariantError(f"t={t}: r left (0, 1)")
    lower = q / (p + k * t)
    if np.any(r_new < lower - 1e-15):
        raise EngineInvariantError(f"t={t}: r below q/(p+Kt)")
    in_v = np.zeros(p, dtype=bool)
    in_v[v_eff] = True
    in_s = np.zeros(p, dtype=bool)
    in_s[list(selected)] = True
    if np.any(r_new[in_v & in_s] <= r_prev[in_v & in_s]):
        raise EngineInvariantError(f"t={t}: selected variable did not increase")
    if np.any(r_new[in_v & ~in_s] >= r_prev[in_v & ~in_s]):
        raise EngineInvariantError(f"t={t}: rejected variable did not decrease")
    if np.any(r_new[~in_v] != r_prev[~in_v]):
        raise EngineInvariantError(f"t={t}: unconsidered variable changed")


def run(
    data: Dataset,
    spec: CriterionSpec,
    solver_cfg: SolverConfig,
    cfg: AdaSubConfig,
) -> AdaSubResult:
    """Run the adaptive search for ``cfg.t_max`` iterations.

    Deterministic given all inputs including the seed. Degenerate sub-fits
    (rank-deficient or RSS-floored) score normally and never abort a run.
    """
    n, p = data.n, data.p
    if not 0.0 < cfg.q < p:
        raise ValueError(f"q must be in (0, p={p}), got {cfg.q}")
    k = cfg.resolved_k(n)
    q = float(cfg.q)
    rng = np.random.default_rng(cfg.seed)

    select_counts = np.zeros(p, dtype=np.int64)
    consider_counts = np.zeros(p, dtype=np.int64)
    trace: list[TraceRecord] = []
    snapshots: list[tuple[int, np.ndarray]] = []
    best_model: tuple[int, ...] = ()
    best_score = -math.inf
    best_first_t = 0
    # Sub-solves are pure in (v, data, spec), so repeat subspaces are served
    # from a per-run cache (subsampled oversize draws are never cached).
    memo: dict[bytes, object] = {}

    for t in range(1, cfg.t_max + 1):
        r = selection_probabilities(q, k, p, select_counts, consider_counts)
        # r is identically q/p at t=1, so the expected size is q by construction
        expected_size = q if t == 1 else float(r.sum())
        v = sample_subspace(r, rng)
        if len(v) <= solver_cfg.cap_uc:
            key = v.tobytes()
            sol = memo.get(key)
            if sol is None:
                sol = solve(data, v, spec, solver_cfg, rng)
                memo[key] = sol
        else:
            sol = solve(data, v, spec, solver_cfg, rng)
        v_eff = np.asarray(sol.v_effective, dtype=np.int64)
        selected = sol.best

        consider_counts[v_eff] += 1
        if selected:
            select_counts[list(selected)] += 1

        score = sol.score.value
        trace.append(
            TraceRecord(
                t=t,
                v_size=int(len(v)),
                s_size=len(selected),
                score=score,
                expected_search_size=expected_size,
            )
        )
        if score > best_score:
            best_score = score
            best_model = selected
            best_first_t = t

        if cfg.validate:
            r_new = selection_probabilities(q, k, p, select_counts, consider_counts)
            _check_iteration(r, r_new, v_eff, selected, q, k, p, t)
        if cfg.trace_prob_interval and t % cfg.trace_prob_interval == 0:
            snapshots.append(
                (t, selection_probabilities(q, k, p, select_counts, consider_counts))
            )

    final_probs = selection_probabilities(q, k, p, select_counts, consider_counts)
    thresholded = tuple(int(j) for j in np.flatnonzero(final_probs > cfg.rho))
    return AdaSubResult(
        best_model=best_model,
        best_score=best_score,
        best_first_t=best_first_t,
        thresholded_model=thresholded,
        final_probs=final_probs,
        trace=trace,
        prob_snapshots=snapshots,
        state=AdaSubState(
            t=cfg.t_max, select_counts=select_counts, consider_counts=consider_counts
        ),
    )


def top_k_model(result: AdaSubResult, k: int) -> tuple[int, ...]:
    """The k indices with the largest final probabilities (ties: smaller index)."""
    p = len(result.final_probs)
    if not 1 <= k <= p:
        raise ValueError(f"k must be in [1, {p}]")
    order = np.lexsort((np.arange(p), -result.final_probs))
    return tuple(sorted(int(j) for j in order[:k]))
