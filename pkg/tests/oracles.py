"""Independent reference computations used by the tests.

Nothing here imports the windowed code paths: sums are explicit loops or
dense broadcasts over the full sample, in data order.
"""

from __future__ import annotations

import math

import numpy as np


def rescaled_epanechnikov(x):
    x = np.asarray(x, dtype=float)
    return np.where((x >= 0) & (x <= 1), 6.0 * x * (1.0 - x), 0.0)


def lambda_closed_form(a: float) -> float:
    """int_0^1 K^2 for the rescaled Epanechnikov base, by hand.

    With s = sqrt(a) and c = 1 / (s - a):
    int Wt(u/s)^2 = 1.2 s, int Wt(u)^2 = 1.2, and
    int_0^s Wt(u/s) Wt(u) = 36 s^2 (1/12 - s/20) = 3 s^2 - 1.8 s^3.
    """
    s = math.sqrt(a)
    c = 1.0 / (s - a)
    cross = 3.0 * s * s - 1.8 * s**3
    return c * c * (1.2 * s - 2 * a * cross + a * a * 1.2)


def epan(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1, 0.75 * (1 - u * u), 0.0)


def naive_density(x, sample, h):
    return float(np.sum([epan((xi - x) / h) for xi in sample]) / (len(sample) * h))


def naive_nw(x, px, py, h):
    num = den = 0.0
    for xi, yi in zip(px, py):
        w = float(epan((xi - x) / h))
        num += w * yi
        den += w
    return num / den


def naive_loo(px, py, h):
    out = np.full(len(px), np.nan)
    for k in range(len(px)):
        num = den = 0.0
        for j in range(len(px)):
            if j == k:
                continue
            w = float(epan((px[j] - px[k]) / h))
            num += w * py[j]
            den += w
        if den > 0:
            out[k] = num / den
    return out


def naive_weighted_kernel(sample, x, b, K, X):
    """Two passes: weights first, then the kernel formula at ``X``."""
    n = len(sample)
    w = ws = 0.0
    for s in sample:
        w += float(K((s - x) / b))
        ws += float(K(-(s - x) / b))
    w /= n * b
    ws /= n * b
    v = (X - x) / b
    return (ws * K(v) - w * K(-v)) / (w * ws)


def naive_t_stat(px, py, x, b, h, K):
    """Every ingredient of ``t_n*(x)`` from full-sample sums in data order."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    n = len(px)
    kt = naive_weighted_kernel(px, x, b, K, px)
    contrast = float(np.sum(kt * py)) / (n * b)
    wmat = epan((px[None, :] - px[:, None]) / h)
    fit = (wmat * py[None, :]).sum(axis=1) / wmat.sum(axis=1)
    resid2 = (py - fit) ** 2
    w = epan((px - x) / h)
    f = float(w.sum()) / (n * h)
    sigma2 = float((w * resid2).sum() / w.sum())
    return math.sqrt(f) / math.sqrt(sigma2) * contrast


def dcor_dense(x, y):
    """Distance correlation from full double-centred matrices."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.abs(x[:, None] - x[None, :])
    b = np.abs(y[:, None] - y[None, :])
    A = a - a.mean(0) - a.mean(1)[:, None] + a.mean()
    B = b - b.mean(0) - b.mean(1)[:, None] + b.mean()
    vxy, vxx, vyy = (A * B).mean(), (A * A).mean(), (B * B).mean()
    return math.sqrt(vxy / math.sqrt(vxx * vyy))
