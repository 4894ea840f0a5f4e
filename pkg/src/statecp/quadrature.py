"""Fixed-rule quadrature for piecewise-smooth functions on bounded intervals.

Both rules split the integration range at the supplied breakpoints so that
kernels with kinks (a compressed copy of the base kernel ends inside the
unit interval) are integrated piece by piece.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable

import numpy as np

DEFAULT_PANELS = 100_000


def _pieces(lo: float, hi: float, breakpoints: Iterable[float]) -> list[tuple[float, float]]:
    cuts = sorted({float(p) for p in breakpoints if lo < p < hi})
    edges = [lo, *cuts, hi]
    return list(zip(edges[:-1], edges[1:]))


def simpson(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    panels: int = DEFAULT_PANELS,
    breakpoints: Iterable[float] = (),
) -> float:
    """Composite Simpson rule with ``panels`` panels on every piece."""
    total = 0.0
    for a, b in _pieces(lo, hi, breakpoints):
        x = np.linspace(a, b, 2 * panels + 1)
        # one-sided values at the piece ends, so jumps at breakpoints do not leak
        x[0], x[-1] = np.nextafter(a, b), np.nextafter(b, a)
        y = np.asarray(f(x), dtype=float)
        step = (b - a) / (2 * panels)
        total += step / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())
    return float(total)


def adaptive_simpson(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    breakpoints: Iterable[float] = (),
    panels: int = DEFAULT_PANELS,
    tol: float = 1e-9,
    max_panels: int = 3_200_000,
) -> float:
    """Simpson rule, doubling the panel count until two passes agree to ``tol``."""
    breakpoints = tuple(breakpoints)
    prev = simpson(f, lo, hi, panels, breakpoints)
    while panels < max_panels:
        panels *= 2
        cur = simpson(f, lo, hi, panels, breakpoints)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    return prev


def gauss_legendre(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    order: int = 64,
    breakpoints: Iterable[float] = (),
) -> float:
    """Gauss-Legendre rule of the given order on every piece."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for a, b in _pieces(lo, hi, breakpoints):
        half = 0.5 * (b - a)
        x = half * nodes + 0.5 * (a + b)
        total += half * float(np.dot(weights, np.asarray(f(x), dtype=float)))
    return total
