"""Kernel estimators on the lagged predictor sample.

A series ``X_0, ..., X_n`` is turned into regression pairs
``(X_{k-1}, X_k)``; every predictor-side sum runs over the lagged sample
``X_0, ..., X_{n-1}``.  Data given as :class:`RegressionPairs` may use any
response (the differenced pairing ``(X_k, X_{k+1} - X_k)`` for instance).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _window
from .errors import BandwidthSelectionError, EmptyWindowError, StateCPError
from .kernels import BaseKernel, epanechnikov

MIN_LENGTH = 30
MIN_COVERAGE = 0.95
_EMPTY = 1e-12


@dataclass(frozen=True)
class TimeSeries:
    """Ordered real observations with the chain of transforms applied so far."""

    values: np.ndarray
    name: str = "series"
    transforms: tuple[str, ...] = ()

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(vals)):
            raise StateCPError(f"series {self.name!r} contains non-finite values")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def log(self) -> "TimeSeries":
        if np.any(self.values <= 0):
            raise StateCPError("log transform of a nonpositive value")
        return TimeSeries(np.log(self.values), self.name, self.transforms + ("log",))

    def difference(self) -> "TimeSeries":
        return TimeSeries(np.diff(self.values), self.name, self.transforms + ("difference",))

    def pairs(self, pairing: str = "lag") -> "RegressionPairs":
        """Regression pairs.

        ``"lag"`` gives ``(X_{k-1}, X_k)``; ``"diff"`` gives
        ``(X_k, X_{k+1} - X_k)``.
        """
        v = self.values
        if pairing == "lag":
            return RegressionPairs(v[:-1], v[1:], pairing, self.name)
        if pairing == "diff":
            return RegressionPairs(v[:-1], np.diff(v), pairing, self.name)
        raise ValueError(f"unknown pairing {pairing!r}")


@dataclass(frozen=True)
class RegressionPairs:
    """Predictors ``x`` and responses ``y`` with a sorted copy for windowing."""

    x: np.ndarray
    y: np.ndarray
    pairing: str = "lag"
    name: str = "series"
    order: np.ndarray = field(init=False, repr=False)
    xs: np.ndarray = field(init=False, repr=False)
    ys: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError("predictors and responses differ in length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise StateCPError("regression pairs contain non-finite values")
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "xs", x[order])
        object.__setattr__(self, "ys", y[order])

    @property
    def n(self) -> int:
        return len(self.x)

    def with_responses(self, y) -> "RegressionPairs":
        return RegressionPairs(self.x, y, self.pairing, self.name)


Data = Union[TimeSeries, RegressionPairs]


def as_pairs(data: Data, min_length: int | None = None) -> RegressionPairs:
    pairs = data.pairs("lag") if isinstance(data, TimeSeries) else data
    floor = MIN_LENGTH if min_length is None else min_length
    if pairs.n < floor:
        raise StateCPError(f"need at least {floor} regression pairs, got {pairs.n}")
    return pairs


def _scalar_or_array(values, like):
    return float(values[0]) if np.ndim(like) == 0 else values


def density_estimate(data: Data, x, h: float, base: BaseKernel | None = None):
    """Kernel density of the lagged predictors at ``x`` (scalar or array)."""
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    p = as_pairs(data)
    base = base or epanechnikov()
    s0, _ = _window.kernel_sums(p.xs, x, h, base)
    return _scalar_or_array(s0 / (p.n * h), x)


def _nw(p: RegressionPairs, x, h, base, values):
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    s0, (s1,) = _window.kernel_sums(p.xs, xs, h, base, (values,))
    empty = s0 <= _EMPTY
    if np.any(empty):
        raise EmptyWindowError(float(xs[np.argmax(empty)]), h)
    return s1 / s0


def nw_regression(data: Data, x, h: float, base: BaseKernel | None = None):
    """Nadaraya-Watson estimate of the regression function at ``x``.

    Raises
    ------
    EmptyWindowError
        If no predictor carries positive weight at some ``x``.
    """
    p = as_pairs(data)
    base = base or epanechnikov()
    return _scalar_or_array(_nw(p, x, h, base, p.ys), x)


def squared_residuals(data: Data, h: float, base: BaseKernel | None = None) -> np.ndarray:
    """``(Y_k - mu_n(X_{k-1}))^2`` in sorted-predictor order."""
    p = as_pairs(data)
    base = base or epanechnikov()
    return (p.ys - _nw(p, p.xs, h, base, p.ys)) ** 2


def conditional_variance(data: Data, x, h: float, base: BaseKernel | None = None, residuals=None):
    """NW smoother of squared residuals, residuals computed with the same ``h``.

    ``residuals`` may carry a precomputed :func:`squared_residuals` result.
    """
    p = as_pairs(data)
    base = base or epanechnikov()
    if residuals is None:
        residuals = squared_residuals(p, h, base)
    return _scalar_or_array(_nw(p, x, h, base, residuals), x)


def loo_regression(data: Data, h: float, base: BaseKernel | None = None, values=None) -> np.ndarray:
    """Leave-one-out NW fits at every sample predictor, NaN where the window is empty.

    Returned in sorted-predictor order.  ``values`` replaces the responses
    (sorted order) when smoothing something else, e.g. squared residuals.
    """
    p = as_pairs(data)
    base = base or epanechnikov()
    vals = p.ys if values is None else np.asarray(values, dtype=float)
    w0 = float(base(0.0))
    s0, (s1,) = _window.kernel_sums(p.xs, p.xs, h, base, (vals,))
    s0 = s0 - w0
    s1 = s1 - w0 * vals
    out = np.full(p.n, np.nan)
    ok = s0 > _EMPTY * max(w0, 1.0)
    out[ok] = s1[ok] / s0[ok]
    return out


def default_bandwidth_grid(data: Data, count: int = 40) -> np.ndarray:
    """Log-spaced candidates between ``0.5 s n^(-1/3)`` and ``3 s n^(-1/5)``."""
    p = as_pairs(data)
    s = float(np.std(p.x, ddof=1))
    return np.geomspace(0.5 * s * p.n ** (-1 / 3), 3.0 * s * p.n ** (-1 / 5), count)


@dataclass
class CVProfile:
    """Cross-validation scores over a bandwidth grid."""

    grid: np.ndarray
    scores: np.ndarray
    coverage: np.ndarray
    selected: float
    n_used: int
    criterion: str
    evaluation_set: str = "all pairs with a nonempty leave-one-out window under every admissible candidate"

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "grid": self.grid.tolist(),
            "scores": [None if not math.isfinite(s) else s for s in self.scores],
            "coverage": self.coverage.tolist(),
            "selected": self.selected,
            "n_used": self.n_used,
            "evaluation_set": self.evaluation_set,
        }


def _cv_select(grid, fits, targets, criterion, min_coverage):
    coverage = np.array([np.isfinite(f).mean() for f in fits])
    admissible = coverage >= min_coverage
    if not np.any(admissible):
        cov = {float(g): float(c) for g, c in zip(grid, coverage)}
        raise BandwidthSelectionError(
            f"{criterion}: every candidate leaves more than {1 - min_coverage:.0%} of windows empty", cov
        )
    common = np.ones(len(targets), dtype=bool)
    for f, ok in zip(fits, admissible):
        if ok:
            common &= np.isfinite(f)
    scores = np.full(len(grid), np.nan)
    for i, (f, ok) in enumerate(zip(fits, admissible)):
        if ok:
            scores[i] = np.mean((targets[common] - f[common]) ** 2)
    best = int(np.nanargmin(scores))  # first minimum, i.e. smallest bandwidth
    return CVProfile(grid, scores, coverage, float(grid[best]), int(common.sum()), criterion)


def cv_profile_mu(data: Data, grid=None, base: BaseKernel | None = None, min_coverage: float = MIN_COVERAGE) -> CVProfile:
    """Leave-one-out CV for the regression bandwidth."""
    p = as_pairs(data)
    base = base or epanechnikov()
    grid = np.sort(np.asarray(default_bandwidth_grid(p) if grid is None else grid, dtype=float))
    if grid.size == 0:
        raise BandwidthSelectionError("empty bandwidth grid")
    fits = [loo_regression(p, h, base) for h in grid]
    return _cv_select(grid, fits, p.ys, "CV(b)", min_coverage)


def cv_bandwidth_mu(data: Data, grid=None, base: BaseKernel | None = None) -> float:
    return cv_profile_mu(data, grid, base).selected


def cv_profile_sigma(
    data: Data, grid=None, b_mu: float | None = None, base: BaseKernel | None = None,
    min_coverage: float = MIN_COVERAGE,
) -> CVProfile:
    """Leave-one-out CV for the variance bandwidth, with the mean fitted once at ``b_mu``."""
    p = as_pairs(data)
    base = base or epanechnikov()
    grid = np.sort(np.asarray(default_bandwidth_grid(p) if grid is None else grid, dtype=float))
    if grid.size == 0:
        raise BandwidthSelectionError("empty bandwidth grid")
    if b_mu is None:
        b_mu = cv_bandwidth_mu(p, None, base)
    r2 = squared_residuals(p, b_mu, base)
    fits = [loo_regression(p, h, base, values=r2) for h in grid]
    return _cv_select(grid, fits, r2, "CV(h)", min_coverage)


def cv_bandwidth_sigma(data: Data, grid=None, b_mu: float | None = None, base: BaseKernel | None = None) -> float:
    return cv_profile_sigma(data, grid, b_mu, base).selected


def _dcor():
    # numba warns about the system TBB on import; the threading layer is unused here
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        import dcor
    return dcor


def distance_correlation(x, y) -> float:
    """Sample distance correlation (V-statistic), O(n log n) for scalar series."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise StateCPError("distance variance is zero (constant series)")
    r = float(_dcor().distance_correlation(x, y, method="mergesort"))
    return min(max(r, 0.0), 1.0)


def adcf(data: Data | np.ndarray, lag: int) -> float:
    """Auto distance correlation between ``X_i`` and ``X_{i+lag}``."""
    v = data.values if isinstance(data, TimeSeries) else np.asarray(data, dtype=float).ravel()
    if lag < 0 or lag >= len(v) / 4:
        raise ValueError(f"lag must be in [0, n/4), got {lag}")
    if np.ptp(v) == 0:
        raise StateCPError("distance variance is zero (constant series)")
    if lag == 0:
        return 1.0
    return distance_correlation(v[:-lag], v[lag:])
