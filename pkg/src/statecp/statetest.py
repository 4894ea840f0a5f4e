"""Sup-statistic for jumps in the state-domain regression function.

For a grid point ``x`` and test bandwidth ``b`` write ``u = (X_{k-1} - x) / b``
and

    S+ = sum K(u),    T+ = sum K(u) Y_k,    S- = sum K(-u),    T- = sum K(-u) Y_k.

The density-weighted contrast ``(1/nb) sum Kt_n(X_{k-1}, x, b) Y_k`` equals
``T+/S+ - T-/S-``: a right-sided minus a left-sided kernel smoother.  The
studentised statistic multiplies it by ``sqrt(f_n(x)) / sigma_n(x)``, both
estimated with the smoothing kernel at bandwidth ``h``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _window
from .errors import (
    BootstrapError,
    ConfigError,
    DataSparsityError,
    DegenerateVarianceError,
    EmptyWindowError,
    IntervalError,
)
from .estimators import Data, RegressionPairs, as_pairs
from .kernels import AntisymKernel, BaseKernel, default_kernel, epanechnikov

VARIANCE_FLOOR = 1e-12
MAX_GAP_FRACTION = 0.10
MAX_GRID_POINTS = 2000
GRID_DIVISOR = 20


@dataclass(frozen=True)
class BandwidthPair:
    """Test bandwidth ``b`` and estimation bandwidth ``h``.

    ``h <= b`` is required unless ``allow_h_above_b`` is set.
    """

    b: float
    h: float
    allow_h_above_b: bool = False
    b_grid: tuple[float, ...] | None = None
    h_grid: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (self.b > 0 and self.h > 0):
            raise ConfigError(f"bandwidths must be positive, got b={self.b}, h={self.h}")
        if self.h > self.b and not self.allow_h_above_b:
            raise ConfigError(f"estimation bandwidth h={self.h} exceeds test bandwidth b={self.b}")


def make_grid(interval, b: float | None = None, step: float | None = None) -> np.ndarray:
    """Uniform grid ``l, l + step, ...`` not exceeding ``u``.

    The default step is ``b / 20``; the grid is coarsened to at most 2000
    points.  Halving ``step`` always yields a superset of the grid.
    """
    l, u = (float(v) for v in interval)
    if not u > l:
        raise IntervalError(f"interval [{l}, {u}] is empty")
    if step is None:
        if b is None:
            raise ValueError("need a grid step or a bandwidth")
        step = b / GRID_DIVISOR
    if step <= 0:
        raise ValueError("grid step must be positive")
    m = int(math.floor((u - l) / step * (1 + 1e-12))) + 1
    if m > MAX_GRID_POINTS:
        step = (u - l) / (MAX_GRID_POINTS - 1)
        m = MAX_GRID_POINTS
    return l + step * np.arange(m)


def one_sided_sums(sorted_x, sorted_y, centers, b: float, kernel: AntisymKernel):
    """``(S+, T+, S-, T-)`` at every centre, summed in sorted-predictor order."""
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    g = len(centers)
    sp, tp, sm, tm = (np.zeros(g) for _ in range(4))
    for rows, idx, u in _window.iter_windows(sorted_x, centers, b):
        ka = np.asarray(kernel.K(np.abs(u)))
        kp = np.where(u >= 0, ka, 0.0)
        km = np.where(u <= 0, ka, 0.0)
        y = sorted_y[idx]
        sp[rows] = kp.sum(axis=1)
        tp[rows] = (kp * y).sum(axis=1)
        sm[rows] = km.sum(axis=1)
        tm[rows] = (km * y).sum(axis=1)
    return sp, tp, sm, tm


def antisym_weighted_kernel(sample, x: float, b: float, kernel: AntisymKernel, X):
    """Density-weighted anti-symmetric kernel ``Kt_n(X, x, b)``.

    The weights ``w_n`` and ``w_n*`` are computed from ``sample`` (the lagged
    predictors).  ``X`` may be an array.

    Raises
    ------
    EmptyWindowError
        If either weight is not positive; ``side`` names which one.
    """
    sample = np.asarray(sample, dtype=float)
    nb = len(sample) * b
    u = (sample - x) / b
    w = float(np.sum(kernel.K(u))) / nb
    w_star = float(np.sum(kernel.K_star(u))) / nb
    if not w > 0:
        raise EmptyWindowError(x, b, "right")
    if not w_star > 0:
        raise EmptyWindowError(x, b, "left")
    v = (np.asarray(X, dtype=float) - x) / b
    out = (w_star * np.asarray(kernel.K(v)) - w * np.asarray(kernel.K_star(v))) / (w * w_star)
    return out if np.ndim(out) else float(out)


@dataclass
class Gap:
    index: int
    x: float
    reason: str


@dataclass
class StatCurve:
    """Statistic and its ingredients on a grid; gaps hold NaN."""

    grid: np.ndarray
    t_n: np.ndarray
    f_n: np.ndarray
    sigma2_n: np.ndarray
    mu_n: np.ndarray
    contrast: np.ndarray
    gaps: list[Gap] = field(default_factory=list)
    b: float = float("nan")
    h: float = float("nan")
    n: int = 0

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.t_n)

    def sup(self, mask=None) -> float:
        a = np.abs(self.t_n)
        ok = self.valid if mask is None else (self.valid & mask)
        return float(a[ok].max()) if ok.any() else 0.0

    def argmax(self, mask=None) -> int:
        """Index of the largest ``|t_n|``; the smallest ``x`` wins ties."""
        ok = self.valid if mask is None else (self.valid & mask)
        if not ok.any():
            raise DataSparsityError("no valid grid point left")
        a = np.where(ok, np.abs(self.t_n), -np.inf)
        return int(np.argmax(a))

    def to_dict(self) -> dict:
        def arr(v):
            return [None if not math.isfinite(t) else float(t) for t in v]

        return {
            "grid": arr(self.grid),
            "t_n": arr(self.t_n),
            "f_n": arr(self.f_n),
            "sigma2_n": arr(self.sigma2_n),
            "mu_n": arr(self.mu_n),
            "gaps": [{"index": g.index, "x": g.x, "reason": g.reason} for g in self.gaps],
            "b": self.b,
            "h": self.h,
            "n": self.n,
            "sup": self.sup(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StatCurve":
        def arr(v):
            return np.array([np.nan if t is None else t for t in v], dtype=float)

        return cls(
            arr(d["grid"]), arr(d["t_n"]), arr(d["f_n"]), arr(d["sigma2_n"]), arr(d["mu_n"]),
            np.full(len(d["grid"]), np.nan),
            [Gap(g["index"], g["x"], g["reason"]) for g in d.get("gaps", [])],
            d.get("b", float("nan")), d.get("h", float("nan")), d.get("n", 0),
        )


def _check_bw(bw: BandwidthPair) -> None:
    if bw.h > bw.b and not bw.allow_h_above_b:
        raise ConfigError(f"estimation bandwidth h={bw.h} exceeds test bandwidth b={bw.b}")


def evaluate_curve(
    data: Data, grid, bw: BandwidthPair, kernel: AntisymKernel | None = None,
    base: BaseKernel | None = None,
) -> StatCurve:
    """Evaluate ``t_n*`` and its ingredients at every grid point, recording gaps."""
    p = as_pairs(data)
    kernel = kernel or default_kernel()
    base = base or epanechnikov()
    _check_bw(bw)
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    n = p.n

    sp, tp, sm, tm = one_sided_sums(p.xs, p.ys, grid, bw.b, kernel)
    with np.errstate(divide="ignore", invalid="ignore"):
        contrast = tp / sp - tm / sm

    # residuals need the regression fit at every sample predictor
    s0_at, (s1_at,) = _window.kernel_sums(p.xs, p.xs, bw.h, base, (p.ys,))
    resid2 = (p.ys - s1_at / s0_at) ** 2
    s0, (s1, sr) = _window.kernel_sums(p.xs, grid, bw.h, base, (p.ys, resid2))
    f = s0 / (n * bw.h)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = np.where(s0 > 0, s1 / s0, np.nan)
        sigma2 = np.where(s0 > 0, sr / s0, np.nan)

    gaps = []
    t = np.full(len(grid), np.nan)
    for i, x in enumerate(grid):
        if not sp[i] > 0:
            reason = "empty right window"
        elif not sm[i] > 0:
            reason = "empty left window"
        elif not s0[i] > 0:
            reason = "empty estimation window"
        elif not sigma2[i] >= VARIANCE_FLOOR:
            reason = "degenerate variance"
        else:
            continue
        gaps.append(Gap(i, float(x), reason))
    bad = np.zeros(len(grid), dtype=bool)
    bad[[g.index for g in gaps]] = True
    ok = ~bad
    t[ok] = np.sqrt(f[ok]) / np.sqrt(sigma2[ok]) * contrast[ok]
    contrast = np.where(ok, contrast, np.nan)
    return StatCurve(grid, t, f, sigma2, mu, contrast, gaps, bw.b, bw.h, n)


def test_statistic(
    data: Data, x: float, bw: BandwidthPair, kernel: AntisymKernel | None = None,
    base: BaseKernel | None = None,
) -> float:
    """``t_n*(x)`` at a single state value.

    Raises
    ------
    EmptyWindowError
        One-sided test window or estimation window is empty.
    DegenerateVarianceError
        ``sigma_n^2(x)`` falls below the floor.
    """
    curve = evaluate_curve(data, [x], bw, kernel, base)
    if curve.gaps:
        reason = curve.gaps[0].reason
        if reason == "degenerate variance":
            raise DegenerateVarianceError(float(x), float(curve.sigma2_n[0]))
        side = reason.split()[1]
        raise EmptyWindowError(float(x), bw.h if side == "estimation" else bw.b, side)
    return float(curve.t_n[0])


test_statistic.__test__ = False  # not a pytest test despite the name


def sup_statistic(
    data: Data, interval, bw: BandwidthPair, kernel: AntisymKernel | None = None,
    base: BaseKernel | None = None, grid_step: float | None = None, grid=None,
    max_gap_fraction: float = MAX_GAP_FRACTION,
) -> tuple[StatCurve, float]:
    """Curve of ``t_n*`` over ``[l, u]`` and ``sup |t_n*|`` over its valid points.

    Raises
    ------
    IntervalError
        If ``u - l <= 2 b``.
    DataSparsityError
        If more than ``max_gap_fraction`` of the grid are gaps.
    DegenerateVarianceError
        If every gap is a variance degeneracy (e.g. a noiseless series).
    """
    l, u = (float(v) for v in interval)
    if not u - l > 2 * bw.b:
        raise IntervalError(f"interval [{l}, {u}] must be longer than 2b = {2 * bw.b}")
    if grid is None:
        grid = make_grid((l, u), bw.b, grid_step)
    curve = evaluate_curve(data, grid, bw, kernel, base)
    if len(curve.gaps) > max_gap_fraction * len(curve.grid):
        if all(g.reason == "degenerate variance" for g in curve.gaps):
            g = curve.gaps[0]
            raise DegenerateVarianceError(g.x, float(curve.sigma2_n[g.index]))
        raise DataSparsityError(
            f"{len(curve.gaps)} of {len(curve.grid)} grid points have no usable window", curve.gaps
        )
    return curve, curve.sup()


# ---------------------------------------------------------------- critical values


@dataclass(frozen=True)
class CriticalValue:
    """Level-``alpha`` threshold for ``sup |t_n*|``.

    ``d_n``, ``scale`` and ``b_bar`` are the Gumbel normalisation for the
    same inputs and are reported for both methods.
    """

    alpha: float
    value: float
    method: str
    d_n: float
    scale: float
    b_bar: float
    z: float
    replicates: int | None = None
    seed: int | None = None
    regenerated: int = 0
    mapped_interval: tuple[float, float] | None = None
    mapped_b: float | None = None
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["mapped_interval"] = list(self.mapped_interval) if self.mapped_interval else None
        d["notes"] = list(self.notes)
        return d


def gumbel_z(alpha: float) -> float:
    """Solve ``exp(-2 exp(-z)) = 1 - alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    return -math.log(-math.log1p(-alpha) / 2.0)


def _gumbel_terms(n: int, b: float, interval, kernel: AntisymKernel):
    l, u = (float(v) for v in interval)
    if not u > l:
        raise IntervalError(f"interval [{l}, {u}] is empty")
    b_bar = b / (u - l)
    if not b_bar < 1.0:
        raise IntervalError(f"bandwidth {b} is not shorter than the interval [{l}, {u}]")
    root = math.sqrt(2.0 * math.log(1.0 / b_bar))
    d_n = root + math.log(math.sqrt(kernel.K2) / (math.sqrt(2.0) * math.pi)) / root
    scale = math.sqrt(2.0 * kernel.lambda_K / (n * b))
    return b_bar, root, d_n, scale


def gumbel_critical(n: int, b: float, interval, kernel: AntisymKernel | None = None, alpha: float = 0.05) -> CriticalValue:
    """Asymptotic threshold ``scale * (d_n + z / sqrt(2 log(1/b_bar)))``."""
    kernel = kernel or default_kernel()
    z = gumbel_z(alpha)
    b_bar, root, d_n, scale = _gumbel_terms(n, b, interval, kernel)
    return CriticalValue(alpha, scale * (d_n + z / root), "gumbel", d_n, scale, b_bar, z)


@dataclass
class BootstrapDraws:
    sup_values: np.ndarray
    seed: int
    n: int
    b: float
    grid: np.ndarray
    regenerated: int = 0

    def to_dict(self) -> dict:
        return {
            "sup_values": self.sup_values.tolist(), "seed": self.seed, "n": self.n, "b": self.b,
            "grid": self.grid.tolist(), "regenerated": self.regenerated,
        }


MAX_ATTEMPTS = 1000


def _replicate(n: int, b: float, grid: np.ndarray, kernel: AntisymKernel, seed: int, r: int):
    log_g = 0.5 * stats.norm.logpdf(grid)
    for attempt in range(MAX_ATTEMPTS):
        key = [seed, r] if attempt == 0 else [seed, r, attempt]
        draws = np.random.default_rng(np.random.SeedSequence(key)).standard_normal(n + 1)
        x, y = draws[:-1], draws[1:]
        order = np.argsort(x, kind="stable")
        sp, tp, sm, tm = one_sided_sums(x[order], y[order], grid, b, kernel)
        if np.all(sp > 0) and np.all(sm > 0):
            return float(np.max(np.abs(np.exp(log_g) * (tp / sp - tm / sm)))), attempt
    raise BootstrapError(f"replicate {r}: no valid draw after {MAX_ATTEMPTS} attempts")


def _replicate_block(n, b, grid, kernel, seed, indices):
    return [_replicate(n, b, grid, kernel, seed, r) for r in indices]


def bootstrap_draws(
    n: int, b: float, grid, kernel: AntisymKernel | None = None, replicates: int = 500,
    seed: int = 0, workers: int = 1,
) -> BootstrapDraws:
    """``replicates`` draws of the sup of the standard-normal surrogate statistic.

    Replicate ``r`` uses the stream ``SeedSequence([seed, r])``, so the
    draws do not depend on ``workers``.
    """
    kernel = kernel or default_kernel()
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    idx = np.arange(replicates)
    if workers <= 1:
        results = _replicate_block(n, b, grid, kernel, seed, idx)
    else:
        from joblib import Parallel, delayed

        blocks = np.array_split(idx, workers * 4)
        parts = Parallel(n_jobs=workers)(
            delayed(_replicate_block)(n, b, grid, kernel, seed, blk) for blk in blocks if len(blk)
        )
        results = [res for part in parts for res in part]
    values = np.array([v for v, _ in results])
    regen = sum(1 for _, a in results if a)  # replicates that needed a redraw
    return BootstrapDraws(values, seed, n, b, grid, regen)


def map_interval(sample, interval, b: float) -> tuple[tuple[float, float], float]:
    """Carry ``[l, u]`` to the standard-normal scale through the empirical CDF.

    The bandwidth is rescaled so that ``b / (u - l)`` is unchanged.
    """
    sample = np.sort(np.asarray(sample, dtype=float))
    n = len(sample)
    l, u = (float(v) for v in interval)
    cdf = np.searchsorted(sample, [l, u], side="right") / n
    cdf = np.clip(cdf, 0.5 / n, 1.0 - 0.5 / n)
    lo, hi = (float(v) for v in stats.norm.ppf(cdf))
    if not hi > lo:
        raise IntervalError(f"interval [{l}, {u}] holds no sample points")
    return (lo, hi), b * (hi - lo) / (u - l)


def empirical_quantile(values, alpha: float) -> float:
    """Order statistic ``ceil((1 - alpha) R)`` of ``R`` values."""
    v = np.sort(np.asarray(values, dtype=float))
    k = int(math.ceil((1.0 - alpha) * len(v) - 1e-9))
    return float(v[min(max(k, 1), len(v)) - 1])


def bootstrap_critical(
    n: int, b: float, interval, kernel: AntisymKernel | None = None, alpha: float = 0.05,
    replicates: int = 500, seed: int = 0, sample=None, grid_points: int | None = None,
    workers: int = 1, grid_step: float | None = None,
) -> tuple[CriticalValue, BootstrapDraws]:
    """Bootstrap threshold from i.i.d. standard-normal surrogates.

    Parameters
    ----------
    sample : array, optional
        Lagged predictors of the data.  When given, ``interval`` and ``b``
        are mapped to the normal scale (:func:`map_interval`); when omitted
        the surrogate is evaluated on ``interval`` as is.
    grid_points : int, optional
        Number of grid points; defaults to the count of the data grid.
    """
    kernel = kernel or default_kernel()
    if replicates < 200:
        raise ConfigError(f"need at least 200 bootstrap replicates, got {replicates}")
    if alpha * replicates < 10:
        raise ConfigError(f"alpha * replicates = {alpha * replicates:g} < 10; quantile too noisy")
    z = gumbel_z(alpha)
    b_bar, _, d_n, scale = _gumbel_terms(n, b, interval, kernel)
    if grid_points is None:
        grid_points = len(make_grid(interval, b, grid_step))
    if sample is not None:
        (lo, hi), b_boot = map_interval(sample, interval, b)
        mapped = (lo, hi)
    else:
        (lo, hi), b_boot, mapped = (float(interval[0]), float(interval[1])), b, None
    grid = np.linspace(lo, hi, grid_points) if grid_points > 1 else np.array([lo])
    draws = bootstrap_draws(n, b_boot, grid, kernel, replicates, seed, workers)
    notes = []
    if draws.regenerated > 0.01 * replicates:
        msg = f"{draws.regenerated} of {replicates} replicates regenerated (empty windows)"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    value = empirical_quantile(draws.sup_values, alpha)
    cv = CriticalValue(
        alpha, value, "bootstrap", d_n, scale, b_bar, z, replicates, seed, draws.regenerated,
        mapped, b_boot if mapped else None, tuple(notes),
    )
    return cv, draws
