"""Iterative localisation of jumps in the regression function.

Starting from the whole inspection interval, the grid point with the
largest ``|t_n*|`` is accepted as a change point while it exceeds the
critical value; grid points within ``b`` of it are then excluded and the
search repeats.  Locations are finally refined below grid resolution and
sorted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import OverSegmentationError, StateCPError
from .estimators import Data, as_pairs
from .kernels import AntisymKernel, BaseKernel, default_kernel, epanechnikov
from .statetest import BandwidthPair, CriticalValue, StatCurve, evaluate_curve, sup_statistic

MAX_POINTS = 20


@dataclass
class Detection:
    location: float
    statistic: float
    grid_location: float
    boundary: bool
    order: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ChangePointReport:
    """Detected change points, their exclusion zones and the curve they came from."""

    detections: list[Detection]
    critical: CriticalValue
    curve: StatCurve
    residual_sup: float
    interval: tuple[float, float]
    b: float
    capped: bool = False

    @property
    def m_hat(self) -> int:
        return len(self.detections)

    @property
    def locations(self) -> list[float]:
        return [d.location for d in self.detections]

    @property
    def exclusion_intervals(self) -> list[tuple[float, float]]:
        return [(d.grid_location - self.b, d.grid_location + self.b) for d in self.detections]

    def to_dict(self) -> dict:
        return {
            "m_hat": self.m_hat,
            "locations": self.locations,
            "detections": [d.to_dict() for d in self.detections],
            "exclusion_intervals": [list(e) for e in self.exclusion_intervals],
            "residual_sup": self.residual_sup,
            "interval": list(self.interval),
            "critical": self.critical.to_dict(),
        }

    def csv_rows(self) -> list[dict]:
        return [
            {"location": d.location, "statistic": d.statistic, "boundary": d.boundary}
            for d in self.detections
        ]


def _refine(data, x0, step, bw, kernel, base, others, b) -> tuple[float, float] | None:
    """Bounded scalar search of ``|t_n*|`` on ``[x0 - step, x0 + step]``."""

    def neg_abs_t(x):
        c = evaluate_curve(data, [x], bw, kernel, base)
        return -abs(c.t_n[0]) if np.isfinite(c.t_n[0]) else 0.0

    res = optimize.minimize_scalar(
        neg_abs_t, bounds=(x0 - step, x0 + step), method="bounded", options={"xatol": step * 1e-3}
    )
    if not res.success:
        return None
    x = float(res.x)
    if any(abs(x - o) <= b for o in others):
        return None
    return x, -float(res.fun)


def detect_change_points(
    data: Data, interval, bw: BandwidthPair, kernel: AntisymKernel | None = None,
    base: BaseKernel | None = None, critical: CriticalValue | None = None,
    grid_step: float | None = None, max_points: int = MAX_POINTS, curve: StatCurve | None = None,
    refine: bool = True,
) -> ChangePointReport:
    """Find and order the significant maxima of ``|t_n*|``.

    Parameters
    ----------
    critical : CriticalValue
        Threshold computed for the same ``n``, ``b`` and interval.
    curve : StatCurve, optional
        A curve already evaluated on the interval; recomputed if omitted.
    max_points : int
        Safety cap on the number of detections.

    Raises
    ------
    OverSegmentationError
        If ``max_points`` detections are made and the remaining curve still
        exceeds the threshold.  The partial report is attached.
    """
    if critical is None:
        raise StateCPError("a critical value is required")
    if max_points < 1:
        raise ValueError("max_points must be at least 1")
    p = as_pairs(data)
    kernel = kernel or default_kernel()
    base = base or epanechnikov()
    l, u = (float(v) for v in interval)
    if curve is None:
        curve, _ = sup_statistic(p, (l, u), bw, kernel, base, grid_step)
    grid = curve.grid
    step = float(grid[1] - grid[0]) if len(grid) > 1 else 0.0
    remaining = np.ones(len(grid), dtype=bool)
    found: list[tuple[int, float]] = []
    capped = False
    while True:
        if curve.sup(remaining) < critical.value or not (remaining & curve.valid).any():
            break
        if len(found) == max_points:
            capped = True
            break
        i = curve.argmax(remaining)
        found.append((i, float(curve.t_n[i])))
        # grid points within b of the detection, by centre distance
        remaining &= np.abs(grid - grid[i]) > bw.b

    detections = []
    for order, (i, t) in enumerate(found):
        x = float(grid[i])
        loc, stat = x, t
        if refine and step > 0:
            others = [float(grid[j]) for j, _ in found if j != i]
            better = _refine(p, x, step, bw, kernel, base, others, bw.b)
            if better is not None and better[1] > abs(t):
                loc = better[0]
                stat = math.copysign(better[1], t)
        boundary = min(loc - l, u - loc) < bw.b
        detections.append(Detection(loc, stat, x, boundary, order))
    detections.sort(key=lambda d: d.location)
    report = ChangePointReport(detections, critical, curve, curve.sup(remaining), (l, u), bw.b, capped)
    if capped:
        raise OverSegmentationError(
            f"stopped after {max_points} change points with the curve still above the threshold", report
        )
    return report


@dataclass
class AccuracyMetrics:
    made: float | None
    mse: float | None
    matched: bool
    per_point: list[float] = field(default_factory=list)


def accuracy_metrics(estimated, truth) -> AccuracyMetrics:
    """Mean absolute and squared location error, pairing sorted locations in order."""
    est = sorted(float(e) for e in estimated)
    tru = sorted(float(t) for t in truth)
    if len(est) != len(tru):
        return AccuracyMetrics(None, None, False)
    if not tru:
        return AccuracyMetrics(0.0, 0.0, True)
    err = np.subtract(est, tru)
    return AccuracyMetrics(float(np.abs(err).mean()), float((err**2).mean()), True, np.abs(err).tolist())
