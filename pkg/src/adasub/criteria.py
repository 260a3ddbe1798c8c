"""Model-selection criteria of the l0 family (AIC, BIC, EBIC, custom penalty).

Scores follow the maximization convention: larger is better. For a subset S
of size k fitted with RSS on n observations and p candidate covariates,

    score(S) = -( n * log(RSS / n) + penalty * k )

where penalty is 2 (AIC), log n (BIC), log n + 2*gamma*log p (EBIC with
gamma in [0, 1]) or a user-supplied nonnegative constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .data import FitResult

AIC = "aic"
BIC = "bic"
EBIC = "ebic"
CUSTOM = "custom"

_KINDS = (AIC, BIC, EBIC, CUSTOM)


@dataclass(frozen=True)
class CriterionSpec:
    kind: str
    gamma: float = 0.0
    custom_lambda: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown criterion kind {self.kind!r}")
        if self.kind == EBIC and not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.kind == CUSTOM and self.custom_lambda < 0:
            raise ValueError("custom_lambda must be nonnegative")


@dataclass(frozen=True)
class CriterionValue:
    """Score to maximize, with a flag propagated from floored RSS fits."""

    value: float
    clamped: bool = False


def penalty(spec: CriterionSpec, n: int, p: int) -> float:
    """Per-variable penalty lambda for the given criterion and problem size."""
    if n < 3 or p < 1:
        raise ValueError(f"need n >= 3 and p >= 1, got n={n}, p={p}")
    if spec.kind == AIC:
        return 2.0
    if spec.kind == BIC:
        return math.log(n)
    if spec.kind == EBIC:
        return math.log(n) + 2.0 * spec.gamma * math.log(p)
    return spec.custom_lambda


def score_from_rss(rss: float, size: int, pen: float, n: int) -> float:
    """Score a subset directly from its (already floored, positive) RSS."""
    return -(n * math.log(rss / n) + pen * size)


def evaluate(spec: CriterionSpec, fit: FitResult, n: int, p: int) -> CriterionValue:
    """Score a fitted subset; larger values are better."""
    pen = penalty(spec, n, p)
    value = score_from_rss(fit.rss, fit.subset_size, pen, n)
    return CriterionValue(value=value, clamped=fit.clamped)


def raw_value(score: float) -> float:
    """The criterion on its conventional minimize-me scale (e.g. raw EBIC)."""
    return -score
