"""Exact best-subset search inside a subspace of covariates.

Computes argmax over S subseteq V (with |S| < n - 2) of the criterion score,
either by exhaustive enumeration or by a branch-and-bound tree that prunes
with the RSS monotonicity bound: every superset of A drawn from A u R has
RSS at least rss(A u R), so its score is at most
-(n * log(rss(A u R) / n) + penalty * (|A| + 1)).

Ties in the score are broken by smaller subset size, then by the
lexicographically smallest sorted index sequence, making the result a total
function of the inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .criteria import CriterionSpec, CriterionValue, evaluate, penalty, score_from_rss
from .data import Dataset, fit_subset, rss_floor

EXHAUSTIVE = "exhaustive"
BRANCH_AND_BOUND = "bb"

# Largest subset-batch solved in one LAPACK call; bounds peak memory.
_CHUNK = 32768
_COMBO_CACHE: dict[tuple[int, int], np.ndarray] = {}


class SolverBudgetError(RuntimeError):
    """Raised when an exact search would exceed the configured budget."""


@dataclass(frozen=True)
class SolverConfig:
    mode: str = EXHAUSTIVE
    cap_uc: int | None = None  # max |V| solved exactly; larger V is subsampled
    max_enumeration: float = float(2**26)  # full_search refusal threshold (2^p)

    def __post_init__(self):
        if self.mode not in (EXHAUSTIVE, BRANCH_AND_BOUND):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        if self.cap_uc is None:
            cap = 20 if self.mode == EXHAUSTIVE else 40
            object.__setattr__(self, "cap_uc", cap)
        if self.cap_uc < 1:
            raise ValueError("cap_uc must be >= 1")


@dataclass(frozen=True)
class SubProblemSolution:
    best: tuple[int, ...]
    score: CriterionValue
    evaluated_count: int
    v_effective: tuple[int, ...]


def _combinations(m: int, k: int):
    """Yield index arrays for all size-k subsets of range(m), in chunks.

    Chunks preserve lexicographic order; small tables are cached.
    """
    if m <= 16:
        key = (m, k)
        if key not in _COMBO_CACHE:
            _COMBO_CACHE[key] = np.array(
                list(itertools.combinations(range(m), k)), dtype=np.int64
            )
        arr = _COMBO_CACHE[key]
        for start in range(0, len(arr), _CHUNK):
            yield arr[start : start + _CHUNK]
        return
    it = itertools.combinations(range(m), k)
    while True:
        flat = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(it, _CHUNK)),
            dtype=np.int64,
        )
        if flat.size == 0:
            return
        yield flat.reshape(-1, k)


def _batched_rss(G: np.ndarray, g: np.ndarray, yty: float, sets: np.ndarray) -> np.ndarray:
    """RSS of each subset in ``sets`` (rows of relative indices) via normal equations."""
    gs = g[sets]
    Gs = G[sets[:, :, None], sets[:, None, :]]
    try:
        b = np.linalg.solve(Gs, gs[:, :, None])[:, :, 0]
        rss = yty - np.einsum("ij,ij->i", b, gs)
    except np.linalg.LinAlgError:
        rss = np.empty(len(sets))
        for i, s in enumerate(sets):
            sub = G[np.ix_(s, s)]
            try:
                bi = np.linalg.solve(sub, g[s])
            except np.linalg.LinAlgError:
                bi, *_ = np.linalg.lstsq(sub, g[s], rcond=None)
            rss[i] = yty - g[s] @ bi
    return np.maximum(rss, 0.0)


def _single_rss(G: np.ndarray, g: np.ndarray, yty: float, idx: np.ndarray) -> float:
    if idx.size == 0:
        return yty
    sub = G[np.ix_(idx, idx)]
    try:
        b = np.linalg.solve(sub, g[idx])
    except np.linalg.LinAlgError:
        b, *_ = np.linalg.lstsq(sub, g[idx], rcond=None)
    return max(float(yty - g[idx] @ b), 0.0)


def _exhaustive(G, g, yty, n, pen, max_size, floor):
    """Full enumeration; returns (best relative subset, internal score, count)."""
    m = len(g)
    best = ()
    best_score = score_from_rss(max(yty, floor), 0, pen, n)
    count = 1
    for k in range(1, min(m, max_size) + 1):
        for sets in _combinations(m, k):
            rss = np.maximum(_batched_rss(G, g, yty, sets), floor)
            scores = -(n * np.log(rss / n) + pen * k)
            count += len(sets)
            i = int(np.argmax(scores))
            if scores[i] > best_score:
                best_score = float(scores[i])
                best = tuple(int(j) for j in sets[i])
    return best, best_score, count


def _branch_and_bound(G, g, yty, n, pen, max_size, floor):
    """Criterion-directed branch and bound, equivalent to ``_exhaustive``."""
    m = len(g)
    best = ()
    best_score = score_from_rss(max(yty, floor), 0, pen, n)
    count = 1
    if m == 0 or max_size == 0:
        return best, best_score, count

    # Order variables by single-variable RSS reduction: strong candidates
    # first makes incumbents tight early and pruning effective.
    diag = np.diag(G).copy()
    diag[diag <= 0] = np.inf
    order = np.argsort(-(g * g) / diag, kind="stable")
    Go = G[np.ix_(order, order)]
    go = g[order]

    state = {"best": best, "score": best_score, "count": count}

    def consider(score: float, rel_set: np.ndarray):
        orig = tuple(sorted(int(order[i]) for i in rel_set))
        if score > state["score"] or (
            score == state["score"]
            and (len(orig), orig) < (len(state["best"]), state["best"])
        ):
            state["score"] = score
            state["best"] = orig

    # Greedy forward pass along the min-RSS path seeds the incumbent.
    active = np.empty(0, dtype=np.int64)
    remaining = np.arange(m, dtype=np.int64)
    while active.size < max_size and remaining.size > 0:
        sets = np.column_stack(
            [np.broadcast_to(active, (remaining.size, active.size)), remaining]
        )
        rss = np.maximum(_batched_rss(Go, go, yty, sets), floor)
        scores = -(n * np.log(rss / n) + pen * (active.size + 1))
        state["count"] += len(sets)
        i = int(np.argmin(rss))
        consider(float(scores[i]), sets[i])
        if rss[i] <= floor:
            break
        active = np.sort(sets[i])
        remaining = remaining[remaining != remaining[i]]

    def recurse(a: np.ndarray, r: np.ndarray):
        if r.size == 0 or a.size >= max_size:
            return
        rss_full = max(_single_rss(Go, go, yty, np.concatenate([a, r])), floor)
        if score_from_rss(rss_full, a.size + 1, pen, n) < state["score"]:
            return
        k = a.size + 1
        sets = np.column_stack([np.broadcast_to(a, (r.size, a.size)), r])
        rss_c = np.maximum(_batched_rss(Go, go, yty, sets), floor)
        scores = -(n * np.log(rss_c / n) + pen * k)
        state["count"] += len(sets)
        for i in range(r.size):
            consider(float(scores[i]), sets[i])
        if k >= max_size:
            return
        explore = np.argsort(rss_c, kind="stable")
        for pos, ci in enumerate(explore):
            # descendants of any child have size >= k + 1
            if score_from_rss(rss_full, k + 1, pen, n) < state["score"]:
                return
            r_child = r[explore[pos + 1 :]]
            if r_child.size == 0:
                continue
            recurse(np.sort(sets[ci]), r_child)

    recurse(np.empty(0, dtype=np.int64), np.arange(m, dtype=np.int64))
    # map best back: consider() already stores reorder-space via orig tuple
    return state["best"], state["score"], state["count"]


def _subspace_gram(data: Dataset, v: np.ndarray):
    x = data.x[:, v]
    xc = x - x.mean(axis=0)
    yc = data.y - data.y.mean()
    return xc.T @ xc, xc.T @ yc, float(yc @ yc)


def solve(
    data: Dataset,
    v,
    spec: CriterionSpec,
    cfg: SolverConfig,
    rng: np.random.Generator | None = None,
) -> SubProblemSolution:
    """Best subset of ``v`` by the criterion; exact within the U_C cap.

    If |v| exceeds ``cfg.cap_uc``, a uniform subsample of size cap_uc is
    drawn from ``rng`` and the exact search runs on that subsample;
    ``v_effective`` records what was actually searched.
    """
    v = np.array(sorted({int(j) for j in v}), dtype=np.int64)
    if v.size and (v[0] < 0 or v[-1] >= data.p):
        raise ValueError(f"subspace index out of range [0, {data.p})")
    if v.size > cfg.cap_uc:
        if rng is None:
            raise ValueError("rng is required when |v| exceeds cap_uc")
        v_eff = np.sort(rng.choice(v, size=cfg.cap_uc, replace=False))
    else:
        v_eff = v

    n, p = data.n, data.p
    pen = penalty(spec, n, p)
    max_size = max(n - 3, 0)
    if v_eff.size == 0:
        fit = fit_subset(data, ())
        return SubProblemSolution(
            best=(), score=evaluate(spec, fit, n, p), evaluated_count=1,
            v_effective=(),
        )

    G, g, yty = _subspace_gram(data, v_eff)
    floor = rss_floor(yty)
    search = _exhaustive if cfg.mode == EXHAUSTIVE else _branch_and_bound
    best_rel, _, count = search(G, g, yty, n, pen, max_size, floor)
    best = tuple(int(v_eff[i]) for i in best_rel)
    fit = fit_subset(data, best)
    return SubProblemSolution(
        best=best,
        score=evaluate(spec, fit, n, p),
        evaluated_count=count,
        v_effective=tuple(int(j) for j in v_eff),
    )


def full_search(data: Dataset, spec: CriterionSpec, cfg: SolverConfig) -> SubProblemSolution:
    """Criterion-optimal model over all p covariates (small p only)."""
    p = data.p
    if p > cfg.cap_uc:
        raise SolverBudgetError(
            f"exact search over p={p} exceeds the cap of {cfg.cap_uc}; "
            "use the adaptive subspace search (run subcommand) instead"
        )
    if cfg.mode == EXHAUSTIVE and 2.0**p > cfg.max_enumeration:
        raise SolverBudgetError(
            f"exhaustive enumeration of 2^{p} models exceeds the budget; "
            "use branch-and-bound mode or the adaptive subspace search"
        )
    return solve(data, np.arange(p), spec, cfg, rng=None)
