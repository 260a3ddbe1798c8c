import itertools
import math

import numpy as np
import pytest

from adasub import Dataset


def make_dataset(rng, n, p, s0=2, signal=1.5):
    """Random Gaussian design with s0 strong coefficients."""
    x = rng.standard_normal((n, p))
    beta = np.zeros(p)
    if s0:
        idx = rng.choice(p, size=min(s0, p), replace=False)
        beta[idx] = signal * np.where(rng.random(len(idx)) < 0.5, -1.0, 1.0)
    y = x @ beta + rng.standard_normal(n)
    ds = Dataset(x=x, y=y, names=tuple(f"x{j + 1}" for j in range(p)))
    support = tuple(sorted(int(j) for j in np.flatnonzero(beta)))
    return ds, support


def reference_score(x, y, subset, pen):
    """Independent criterion evaluation via a direct intercept-model lstsq."""
    n = len(y)
    yc = y - y.mean()
    tss = float(yc @ yc)
    if subset:
        a = np.column_stack([np.ones(n), x[:, list(subset)]])
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        resid = y - a @ coef
        rss = float(resid @ resid)
    else:
        rss = tss
    rss = max(rss, 1e-12 * tss, np.finfo(float).tiny)
    return -(n * math.log(rss / n) + pen * len(subset))


def reference_best_subset(x, y, v, pen, max_size=None):
    """Brute-force argmax over subsets of v, smallest-size-then-lex on ties."""
    n = len(y)
    v = sorted(int(j) for j in v)
    if max_size is None:
        max_size = n - 3
    best, best_score = (), reference_score(x, y, (), pen)
    for k in range(1, min(len(v), max_size) + 1):
        for s in itertools.combinations(v, k):
            score = reference_score(x, y, s, pen)
            if score > best_score:
                best, best_score = s, score
    return tuple(best), best_score


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
