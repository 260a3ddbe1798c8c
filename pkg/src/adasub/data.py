"""Dataset container and least-squares fitting on column subsets.

All covariate indices in this library are 0-based; the CLI converts to
1-based labels at the I/O boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

# Relative floor applied to RSS before it enters any logarithm downstream.
RSS_FLOOR_REL = 1e-12


class DataError(ValueError):
    """Invalid input data (bad CSV, non-finite value, shape mismatch)."""


@dataclass(frozen=True)
class Dataset:
    """Regression data: design matrix ``x`` (n rows, p columns) and response ``y``.

    Immutable after construction; fitting functions are pure and safe to
    call concurrently.
    """

    x: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise DataError("x must be n-by-p and y length n")
        n, p = x.shape
        if n < 3:
            raise DataError(f"need at least 3 observations, got {n}")
        if p < 1:
            raise DataError("need at least one covariate")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise DataError("non-finite value in data")
        if len(self.names) != p:
            raise DataError("names must have one entry per column")
        if len(set(self.names)) != p:
            raise DataError("column names must be unique")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of y on an intercept plus a column subset.

    ``coefficients`` is aligned with the (sorted) subset indices.
    ``rank_deficient`` marks a minimum-norm solution of a singular system;
    ``clamped`` marks an RSS that was floored before use in logarithms.
    """

    rss: float
    intercept: float
    coefficients: np.ndarray
    subset_size: int
    n_features: int
    rank_deficient: bool = False
    clamped: bool = False


def validate_subset(subset, n: int, p: int) -> tuple[int, ...]:
    """Normalize ``subset`` to a sorted tuple and check model-space membership.

    Requires distinct indices in [0, p) and |subset| < n - 2.
    """
    s = tuple(int(j) for j in subset)
    if len(set(s)) != len(s):
        raise DataError(f"duplicate index in subset {s}")
    if any(j < 0 or j >= p for j in s):
        raise DataError(f"subset index out of range [0, {p}): {s}")
    if len(s) >= n - 2:
        raise DataError(f"subset of size {len(s)} too large for n={n} (need |S| < n-2)")
    return tuple(sorted(s))


def centered_tss(y: np.ndarray) -> float:
    """Total sum of squares of y around its mean."""
    y = np.asarray(y, dtype=float)
    return float(np.sum((y - y.mean()) ** 2))


def rss_floor(tss: float) -> float:
    """Positive lower clamp for RSS values, relative to the centered TSS."""
    return max(RSS_FLOOR_REL * tss, np.finfo(float).tiny)


def fit_subset(data: Dataset, subset) -> FitResult:
    """Ordinary least squares of y on an intercept plus ``data.x[:, subset]``.

    Uses a stable orthogonal factorization (LAPACK gelsd via lstsq); a
    rank-deficient system yields the minimum-norm solution and a flagged
    result rather than an error.
    """
    s = validate_subset(subset, data.n, data.p)
    y = data.y
    tss = centered_tss(y)
    floor = rss_floor(tss)

    if not s:
        rss = tss
        clamped = rss < floor
        return FitResult(
            rss=max(rss, floor),
            intercept=float(y.mean()),
            coefficients=np.empty(0),
            subset_size=0,
            n_features=data.p,
            clamped=clamped,
        )

    a = np.column_stack([np.ones(data.n), data.x[:, s]])
    coef, _, rank, _ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    rss = float(resid @ resid)
    rank_deficient = rank < len(s) + 1
    clamped = rss < floor
    return FitResult(
        rss=max(rss, floor),
        intercept=float(coef[0]),
        coefficients=coef[1:].copy(),
        subset_size=len(s),
        n_features=data.p,
        rank_deficient=rank_deficient,
        clamped=clamped,
    )


def predict(fit: FitResult, subset, x_new: np.ndarray) -> np.ndarray:
    """Predictions ``intercept + x_new[:, subset] @ coefficients``."""
    x_new = np.asarray(x_new, dtype=float)
    if x_new.ndim != 2 or x_new.shape[1] != fit.n_features:
        raise DataError(
            f"x_new must have {fit.n_features} columns, got shape {x_new.shape}"
        )
    s = tuple(sorted(int(j) for j in subset))
    if len(s) != fit.subset_size:
        raise DataError("subset does not match the fitted subset size")
    if not s:
        return np.full(x_new.shape[0], fit.intercept)
    return fit.intercept + x_new[:, s] @ fit.coefficients


def load_dataset(path, response_column: str) -> Dataset:
    """Read an RFC-4180-style CSV (one header row) into a Dataset.

    The column named ``response_column`` becomes y; all other columns, in
    file order, become the covariates.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column in header")
        if response_column not in header:
            raise DataError(f"{path}: no column named {response_column!r}")
        y_col = header.index(response_column)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {line_no} has {len(row)} fields, expected {len(header)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                bad = next(i for i, c in enumerate(row) if not _is_float(c))
                raise DataError(
                    f"{path}: non-numeric value at row {line_no}, column {header[bad]!r}"
                ) from None
            for i, v in enumerate(vals):
                if not np.isfinite(v):
                    raise DataError(
                        f"non-finite value at row {line_no}, column {header[i]!r}"
                    )
            rows.append(vals)
    if len(rows) < 3:
        raise DataError(f"{path}: need at least 3 data rows, got {len(rows)}")
    mat = np.array(rows, dtype=float)
    y = mat[:, y_col]
    x = np.delete(mat, y_col, axis=1)
    names = tuple(h for i, h in enumerate(header) if i != y_col)
    return Dataset(x=x, y=y, names=names)


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False
