"""Sorted-window gathering shared by all kernel smoothers.

For evaluation points ``centers`` and half-width ``h`` the observations
with ``|X - x| <= h`` occupy a contiguous run of the sorted predictor
array.  Runs are gathered into a padded matrix, chunked to bound memory;
padding cells get the scaled distance ``2.0`` which every kernel maps to
zero.  Each row is summed in sorted order, so results do not depend on
chunking.
"""

from __future__ import annotations

import numpy as np

_MAX_CELLS = 1_000_000
_PAD = 2.0


def bounds(sorted_x: np.ndarray, centers: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    slack = h * (1.0 + 1e-12)
    lo = np.searchsorted(sorted_x, centers - slack, side="left")
    hi = np.searchsorted(sorted_x, centers + slack, side="right")
    return lo, hi


def iter_windows(sorted_x: np.ndarray, centers: np.ndarray, h: float, max_cells: int = _MAX_CELLS):
    """Yield ``(rows, idx, u)`` chunks.

    ``idx`` indexes ``sorted_x`` (padding clipped to a valid index) and
    ``u = (X - x) / h`` with padding set outside every kernel support.
    """
    centers = np.asarray(centers, dtype=float)
    lo, hi = bounds(sorted_x, centers, h)
    width = hi - lo
    n = len(sorted_x)
    g = len(centers)
    start = 0
    while start < g:
        # grow the chunk while the padded matrix stays under the cell budget
        stop = start + 1
        m = int(width[start])
        while stop < g:
            m_next = max(m, int(width[stop]))
            if (stop - start + 1) * max(m_next, 1) > max_cells:
                break
            m = m_next
            stop += 1
        rows = slice(start, stop)
        m = max(m, 1)
        offs = np.arange(m)
        idx = lo[rows, None] + offs[None, :]
        valid = offs[None, :] < width[rows, None]
        idx = np.minimum(idx, n - 1)
        u = np.where(valid, (sorted_x[idx] - centers[rows, None]) / h, _PAD)
        yield rows, idx, u
        start = stop


def kernel_sums(sorted_x, centers, h, kernel, columns=()):
    """Return ``S0 = sum K(u)`` and ``[sum K(u) * col for col in columns]``."""
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    s0 = np.zeros(len(centers))
    sc = [np.zeros(len(centers)) for _ in columns]
    for rows, idx, u in iter_windows(sorted_x, centers, h):
        w = np.asarray(kernel(u))
        s0[rows] = w.sum(axis=1)
        for out, col in zip(sc, columns):
            out[rows] = (w * col[idx]).sum(axis=1)
    return s0, sc
