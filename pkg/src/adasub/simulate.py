"""Synthetic regression data: Gaussian designs under several correlation
structures, sparse uniform coefficient vectors, and independent test sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset

IDENTITY = "identity"
TOEPLITZ = "toeplitz"
EQUAL = "equal"
BLOCK = "block"


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationSpec:
    kind: str = IDENTITY
    c: float = 0.0
    blocks: int = 1

    def __post_init__(self):
        if self.kind not in (IDENTITY, TOEPLITZ, EQUAL, BLOCK):
            raise SimulationError(f"unknown correlation kind {self.kind!r}")
        if self.kind == TOEPLITZ and not -1.0 < self.c < 1.0:
            raise SimulationError("Toeplitz correlation needs c in (-1, 1)")
        if self.kind == EQUAL and not 0.0 <= self.c < 1.0:
            raise SimulationError("equal correlation needs c in [0, 1)")
        if self.kind == BLOCK:
            if not 0.0 < self.c < 1.0:
                raise SimulationError("block correlation needs c in (0, 1)")
            if self.blocks < 1:
                raise SimulationError("need at least one block")


@dataclass(frozen=True)
class SimConfig:
    n: int
    p: int
    s0: int | None = None  # None: drawn uniformly from {0, ..., min(10, p)}
    corr: CorrelationSpec = CorrelationSpec()
    coef_low: float = -2.0
    coef_high: float = 2.0
    noise_sd: float = 1.0
    test_n: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n < 3:
            raise SimulationError("need n >= 3")
        if self.p < 1:
            raise SimulationError("need p >= 1")
        if self.s0 is not None and not 0 <= self.s0 <= min(10, self.p):
            raise SimulationError(f"s0 must be in [0, min(10, p)], got {self.s0}")
        if self.noise_sd <= 0:
            raise SimulationError("noise_sd must be positive")
        if self.test_n < 0:
            raise SimulationError("test_n must be >= 0")


@dataclass
class SimulatedData:
    train: Dataset
    test: Dataset | None
    true_support: tuple[int, ...]
    true_beta: np.ndarray


def build_sigma(corr: CorrelationSpec, p: int) -> np.ndarray:
    """p-by-p correlation matrix for the given structure, validated SPD."""
    if corr.kind == IDENTITY:
        return np.eye(p)
    if corr.kind == TOEPLITZ:
        idx = np.arange(p)
        sigma = corr.c ** np.abs(idx[:, None] - idx[None, :])
    elif corr.kind == EQUAL:
        sigma = np.full((p, p), corr.c)
        np.fill_diagonal(sigma, 1.0)
    else:  # BLOCK: correlated iff indices are congruent modulo the block count
        idx = np.arange(p)
        sigma = np.where((idx[:, None] - idx[None, :]) % corr.blocks == 0, corr.c, 0.0)
        np.fill_diagonal(sigma, 1.0)
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise SimulationError(
            "correlation matrix not positive definite for these parameters"
        ) from None
    return sigma


def _draw_design(rng: np.random.Generator, n: int, p: int, corr: CorrelationSpec) -> np.ndarray:
    z = rng.standard_normal((n, p))
    if corr.kind == IDENTITY or (corr.kind == TOEPLITZ and corr.c == 0.0):
        return z
    chol = np.linalg.cholesky(build_sigma(corr, p))
    return z @ chol.T


def simulate(cfg: SimConfig) -> SimulatedData:
    """Draw one dataset (and optional test set) from the configured model.

    Rows are i.i.d. N(0, Sigma); the support is uniform among size-s0
    subsets; nonzero coefficients are Uniform(coef_low, coef_high) with
    exact zeros redrawn; y = X beta + Gaussian noise. The test set shares
    Sigma, support and beta. Deterministic given the seed.
    """
    rng = np.random.default_rng(cfg.seed)
    n, p = cfg.n, cfg.p
    s0 = cfg.s0 if cfg.s0 is not None else int(rng.integers(0, min(10, p) + 1))
    support = tuple(sorted(int(j) for j in rng.choice(p, size=s0, replace=False)))
    beta = np.zeros(p)
    for j in support:
        b = 0.0
        while b == 0.0:
            b = rng.uniform(cfg.coef_low, cfg.coef_high)
        beta[j] = b

    x = _draw_design(rng, n, p, cfg.corr)
    y = x @ beta + rng.normal(0.0, cfg.noise_sd, size=n)
    names = tuple(f"x{j + 1}" for j in range(p))
    train = Dataset(x=x, y=y, names=names)

    test = None
    if cfg.test_n >= 3:
        xt = _draw_design(rng, cfg.test_n, p, cfg.corr)
        yt = xt @ beta + rng.normal(0.0, cfg.noise_sd, size=cfg.test_n)
        test = Dataset(x=xt, y=yt, names=names)

    return SimulatedData(train=train, test=test, true_support=support, true_beta=beta)


def derive_seed(master_seed: int, *keys: int) -> int:
    """Stable 64-bit child seed from a master seed and index keys.

    Replicates generated from (master, keys) streams are mutually
    independent regardless of scheduling order.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
