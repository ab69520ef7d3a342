"""Exact fixed-radius pair counting by uniform grid hashing."""

from __future__ import annotations

import itertools
import math

import numpy as np
from numba import njit

from clusterlab.geometry.kdtree import dist2

# Cell side is inflated slightly above delta, and never below 1e-9 of the
# bounding-box span, so that rounding in the cell computation can never put
# two points within delta more than one cell apart.
_SIDE_SLACK = 1e-6
_MAX_CELLS_PER_AXIS = 1e9


@njit(cache=True, inline="always")
def _cmp_row(cells, i, target):
    for a in range(cells.shape[1]):
        if cells[i, a] < target[a]:
            return -1
        if cells[i, a] > target[a]:
            return 1
    return 0


@njit(cache=True, nogil=True)
def _count(pts, ucells, ustart, offsets, delta2):
    total = 0
    n_cells = ucells.shape[0]
    target = np.empty(ucells.shape[1], np.int64)
    for c in range(n_cells):
        s, e = ustart[c], ustart[c + 1]
        for i in range(s, e):
            for j in range(i + 1, e):
                if dist2(pts, i, j) <= delta2:
                    total += 1
        for o in range(offsets.shape[0]):
            for a in range(ucells.shape[1]):
                target[a] = ucells[c, a] + offsets[o, a]
            # forward offsets only, so the neighbour sorts after c
            lo, hi = c + 1, n_cells
            while lo < hi:
                mid = (lo + hi) // 2
                if _cmp_row(ucells, mid, target) < 0:
                    lo = mid + 1
                else:
                    hi = mid
            if lo == n_cells or _cmp_row(ucells, lo, target) != 0:
                continue
            ts, te = ustart[lo], ustart[lo + 1]
            for i in range(s, e):
                for j in range(ts, te):
                    if dist2(pts, i, j) <= delta2:
                        total += 1
    return total


def forward_offsets(d: int) -> np.ndarray:
    """Neighbour offsets in {-1,0,1}^d whose first non-zero entry is +1."""
    out = [o for o in itertools.product((-1, 0, 1), repeat=d) if any(o) and next(x for x in o if x) > 0]
    return np.array(out, dtype=np.int64).reshape(len(out), d)


def close_pairs(points, delta: float) -> int:
    """Number of unordered pairs at Euclidean distance ``<= delta`` (inclusive)."""
    delta = float(delta)
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if not np.all(np.isfinite(pts)):
        raise ValueError("point coordinates must be finite")
    n, d = pts.shape
    if n < 2:
        return 0
    mins = pts.min(axis=0)
    span = float((pts.max(axis=0) - mins).max())
    side = max(delta * (1.0 + _SIDE_SLACK), span / _MAX_CELLS_PER_AXIS)
    if math.isinf(side):
        cells = np.zeros((n, d), dtype=np.int64)
    else:
        cells = np.floor((pts - mins) / side).astype(np.int64)
    order = np.lexsort(cells.T[::-1])
    cells = cells[order]
    pts = np.ascontiguousarray(pts[order])
    change = np.flatnonzero(np.any(cells[1:] != cells[:-1], axis=1)) + 1
    ustart = np.concatenate(([0], change, [n])).astype(np.int64)
    ucells = np.ascontiguousarray(cells[ustart[:-1]])
    return int(_count(pts, ucells, ustart, forward_offsets(d), delta * delta))
