"""Synthetic selection oracles for convergence-speed studies.

These replace the data-driven sub-solver with idealized selection rules so
the adaptive search dynamics can be measured against closed-form
expectations:

- best case: every optimal variable is selected whenever it is considered
  (selection = s_star intersect V);
- worst case: the i-th variable of the ordered optimal set is selected only
  when the entire prefix k_1..k_i is considered together.

Variables outside the optimal set are never selected by either rule and
cannot affect the recorded hit times, so runs simulate only the optimal
coordinates; the total dimension p enters through the probability
denominators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import AdaSubConfig

FINITE_SAMPLE_PF = "pf"
MINIMAL_OIP = "minimal-oip"


@dataclass(frozen=True)
class OracleSpec:
    kind: str
    s_star: tuple[int, ...]  # ordered optimal variables (0-based, OIP order)
    p: int

    def __post_init__(self):
        if self.kind not in (FINITE_SAMPLE_PF, MINIMAL_OIP):
            raise ValueError(f"unknown oracle kind {self.kind!r}")
        s = tuple(int(j) for j in self.s_star)
        if len(set(s)) != len(s):
            raise ValueError("s_star indices must be distinct")
        if any(j < 0 or j >= self.p for j in s):
            raise ValueError(f"s_star index out of range [0, {self.p})")
        object.__setattr__(self, "s_star", s)


@dataclass(frozen=True)
class SpeedResult:
    t_best: int      # first t with the selected model equal to the optimum
    t_thresh: int    # first t with every optimal variable above rho
    censored: bool   # one of the hit times was not reached before t_max


def oracle_select(spec: OracleSpec, v) -> tuple[int, ...]:
    """Selected subset for subspace ``v`` under the oracle rule."""
    vset = set(int(j) for j in v)
    if spec.kind == FINITE_SAMPLE_PF:
        return tuple(sorted(j for j in spec.s_star if j in vset))
    out = []
    for j in spec.s_star:
        if j not in vset:
            break
        out.append(j)
    return tuple(sorted(out))


def run_oracle(spec: OracleSpec, cfg: AdaSubConfig) -> SpeedResult:
    """Run the adaptive search with the oracle in place of the sub-solver.

    ``cfg.k_rate`` may be ``inf`` in the best-case mode: a variable then has
    probability q/p until first considered and exactly 1 afterwards.
    Censors both hit times at ``cfg.t_max``.
    """
    p = spec.p
    q = float(cfg.q)
    if not 0.0 < q < p:
        raise ValueError(f"q must be in (0, p={p})")
    k = cfg.k_rate
    if k <= 0:
        raise ValueError("k_rate must be positive (or inf) for oracle runs")
    k_inf = math.isinf(k)
    if k_inf and spec.kind != FINITE_SAMPLE_PF:
        raise ValueError("infinite learning rate is defined for the best-case oracle only")

    s = len(spec.s_star)
    if s == 0:
        return SpeedResult(t_best=1, t_thresh=1, censored=False)

    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(s, dtype=np.int64)
    z = np.zeros(s, dtype=np.int64)
    r0 = q / p
    t_best = 0
    t_thresh = 0
    pf = spec.kind == FINITE_SAMPLE_PF

    for t in range(1, cfg.t_max + 1):
        if k_inf:
            r = np.where(w > 0, 1.0, r0)
        else:
            r = (q + k * w) / (p + k * z)
        in_v = rng.random(s) < r
        sel = in_v if pf else np.logical_and.accumulate(in_v)
        z += in_v
        w += sel
        if t_best == 0 and in_v.all():
            t_best = t
        if t_thresh == 0:
            if k_inf:
                above = w > 0
            else:
                above = (q + k * w) / (p + k * z) > cfg.rho
            if above.all():
                t_thresh = t
        if t_best and t_thresh:
            break

    censored = t_best == 0 or t_thresh == 0
    return SpeedResult(
        t_best=t_best or cfg.t_max,
        t_thresh=t_thresh or cfg.t_max,
        censored=censored,
    )


def run_oracle_many(spec: OracleSpec, cfg: AdaSubConfig, reps: int) -> list[SpeedResult]:
    """Vectorized batch of independent oracle replicates.

    Equivalent in distribution to ``reps`` calls of :func:`run_oracle` and
    deterministic given ``cfg.seed``; all replicates advance in lock step so
    the per-iteration work is a handful of array operations.
    """
    p = spec.p
    q = float(cfg.q)
    if not 0.0 < q < p:
        raise ValueError(f"q must be in (0, p={p})")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    k = cfg.k_rate
    if k <= 0:
        raise ValueError("k_rate must be positive (or inf) for oracle runs")
    k_inf = math.isinf(k)
    if k_inf and spec.kind != FINITE_SAMPLE_PF:
        raise ValueError("infinite learning rate is defined for the best-case oracle only")

    s = len(spec.s_star)
    if s == 0:
        return [SpeedResult(t_best=1, t_thresh=1, censored=False)] * reps

    rng = np.random.default_rng(cfg.seed)
    w = np.zeros((reps, s), dtype=np.int64)
    z = np.zeros((reps, s), dtype=np.int64)
    r0 = q / p
    t_best = np.zeros(reps, dtype=np.int64)
    t_thresh = np.zeros(reps, dtype=np.int64)
    pf = spec.kind == FINITE_SAMPLE_PF

    for t in range(1, cfg.t_max + 1):
        if k_inf:
            r = np.where(w > 0, 1.0, r0)
        else:
            r = (q + k * w) / (p + k * z)
        in_v = rng.random((reps, s)) < r
        sel = in_v if pf else np.logical_and.accumulate(in_v, axis=1)
        z += in_v
        w += sel
        hit = in_v.all(axis=1) & (t_best == 0)
        t_best[hit] = t
        if k_inf:
            above = w > 0
        else:
            above = (q + k * w) / (p + k * z) > cfg.rho
        hit = above.all(axis=1) & (t_thresh == 0)
        t_thresh[hit] = t
        if np.all(t_best > 0) and np.all(t_thresh > 0):
            break

    out = []
    for i in range(reps):
        censored = t_best[i] == 0 or t_thresh[i] == 0
        out.append(
            SpeedResult(
                t_best=int(t_best[i]) or cfg.t_max,
                t_thresh=int(t_thresh[i]) or cfg.t_max,
                censored=bool(censored),
            )
        )
    return out


def expected_first_consideration(p: int, q: float) -> float:
    """Mean iterations until a variable is first considered: p/q."""
    if not 0.0 < q < p:
        raise ValueError("need 0 < q < p")
    return p / q


def expected_threshold_time(p: int, q: float, k: float, rho: float) -> tuple[int, float]:
    """Crossing count i(rho) and the expected per-variable threshold time.

    A best-case variable crosses rho after i(rho) considerations with
    i(rho) = floor((rho*p - q) / (K*(1 - rho)) + 1); the expected iteration
    of that crossing is sum_{i=0}^{i(rho)-1} (p + K*i) / (q + K*i).
    """
    if not 0.0 < q < p:
        raise ValueError("need 0 < q < p")
    if k <= 0 or not 0.0 < rho < 1.0:
        raise ValueError("need K > 0 and rho in (0, 1)")
    i_rho = math.floor((rho * p - q) / (k * (1.0 - rho)) + 1.0)
    if i_rho < 1:
        raise ValueError("threshold already exceeded at initialization (q/p > rho)")
    i = np.arange(i_rho, dtype=float)
    expectation = float(np.sum((p + k * i) / (q + k * i)))
    return i_rho, expectation


def expected_best_time_infinite_k(p: int, q: float, s_star_size: int) -> float:
    """Mean first hit of the full optimal set under infinite adaptation.

    Approximates E[max of s* independent Geometric(q/p)] as
    1/2 + H_{s*} / log(p / (p - q)); the approximation error is at most 1/2.
    """
    if not 0.0 < q < p:
        raise ValueError("need 0 < q < p")
    if s_star_size < 1:
        raise ValueError("need s_star_size >= 1")
    harmonic = sum(1.0 / i for i in range(1, s_star_size + 1))
    return 0.5 + harmonic / math.log(p / (p - q))
