"""Array-backed k-d tree used by the dual-tree Boruvka EMST.

Nodes are stored in flat arrays in creation (pre-)order, so every child has
a larger node id than its parent.  Each node owns the contiguous slice
``perm[start:end]`` of point ids and the tight bounding box of those points.
Splits are at the median along the widest box axis.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LEAF_SIZE = 16


@njit(cache=True, nogil=True)
def _build(points, leaf_size):
    n, d = points.shape
    cap = max(1, 2 * n - 1)
    start = np.empty(cap, np.int64)
    end = np.empty(cap, np.int64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    parent = np.full(cap, -1, np.int64)
    lo = np.empty((cap, d), np.float64)
    hi = np.empty((cap, d), np.float64)
    perm = np.arange(n)

    stack = np.empty(cap, np.int64)
    top = 0
    count = 1
    start[0] = 0
    end[0] = n
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        s, e = start[node], end[node]
        for a in range(d):
            lo[node, a] = np.inf
            hi[node, a] = -np.inf
        for t in range(s, e):
            p = perm[t]
            for a in range(d):
                v = points[p, a]
                if v < lo[node, a]:
                    lo[node, a] = v
                if v > hi[node, a]:
                    hi[node, a] = v
        if e - s <= leaf_size:
            continue
        axis = 0
        width = hi[node, 0] - lo[node, 0]
        for a in range(1, d):
            w = hi[node, a] - lo[node, a]
            if w > width:
                width = w
                axis = a
        idx = perm[s:e].copy()
        vals = np.empty(e - s, np.float64)
        for t in range(e - s):
            vals[t] = points[idx[t], axis]
        order = np.argsort(vals, kind="mergesort")
        for t in range(e - s):
            perm[s + t] = idx[order[t]]
        mid = s + (e - s) // 2
        l, r = count, count + 1
        count += 2
        start[l], end[l], parent[l] = s, mid, node
        start[r], end[r], parent[r] = mid, e, node
        left[node], right[node] = l, r
        # push right first so the left subtree is built (and numbered) first
        stack[top] = r
        stack[top + 1] = l
        top += 2
    return (perm, start[:count].copy(), end[:count].copy(), left[:count].copy(),
            right[:count].copy(), parent[:count].copy(), lo[:count].copy(), hi[:count].copy())


@njit(cache=True, nogil=True, inline="always")
def point_box_dist2(points, p, lo, hi, node):
    acc = 0.0
    for a in range(points.shape[1]):
        v = points[p, a]
        if v < lo[node, a]:
            t = lo[node, a] - v
            acc += t * t
        elif v > hi[node, a]:
            t = v - hi[node, a]
            acc += t * t
    return acc


@njit(cache=True, nogil=True, inline="always")
def box_box_dist2(lo, hi, q, r):
    acc = 0.0
    for a in range(lo.shape[1]):
        if hi[q, a] < lo[r, a]:
            t = lo[r, a] - hi[q, a]
            acc += t * t
        elif hi[r, a] < lo[q, a]:
            t = lo[q, a] - hi[r, a]
            acc += t * t
    return acc


@njit(cache=True, nogil=True, inline="always")
def dist2(points, i, j):
    acc = 0.0
    for a in range(points.shape[1]):
        t = points[i, a] - points[j, a]
        acc += t * t
    return acc


@njit(cache=True, nogil=True)
def _nearest(points, query, exclude, perm, start, end, left, right, lo, hi):
    qp = np.empty((1, points.shape[1]))
    qp[0] = query
    best = np.inf
    best_i = -1
    stack = np.empty(64 + 2 * start.shape[0], np.int64)
    top = 1
    stack[0] = 0
    while top > 0:
        top -= 1
        node = stack[top]
        if point_box_dist2(qp, 0, lo, hi, node) > best:
            continue
        if left[node] < 0:
            for t in range(start[node], end[node]):
                p = perm[t]
                if p == exclude:
                    continue
                acc = 0.0
                for a in range(points.shape[1]):
                    u = points[p, a] - query[a]
                    acc += u * u
                if acc < best or (acc == best and p < best_i):
                    best = acc
                    best_i = p
        else:
            l, r = left[node], right[node]
            dl = point_box_dist2(qp, 0, lo, hi, l)
            dr = point_box_dist2(qp, 0, lo, hi, r)
            if dl <= dr:
                stack[top] = r
                stack[top + 1] = l
            else:
                stack[top] = l
                stack[top + 1] = r
            top += 2
    return best_i, best


@njit(cache=True, nogil=True)
def _within(points, query, r2, perm, start, end, left, right, lo, hi):
    qp = np.empty((1, points.shape[1]))
    qp[0] = query
    out = np.empty(points.shape[0], np.int64)
    found = 0
    stack = np.empty(64 + 2 * start.shape[0], np.int64)
    top = 1
    stack[0] = 0
    while top > 0:
        top -= 1
        node = stack[top]
        if point_box_dist2(qp, 0, lo, hi, node) > r2:
            continue
        if left[node] < 0:
            for t in range(start[node], end[node]):
                p = perm[t]
                acc = 0.0
                for a in range(points.shape[1]):
                    u = points[p, a] - query[a]
                    acc += u * u
                if acc <= r2:
                    out[found] = p
                    found += 1
        else:
            stack[top] = left[node]
            stack[top + 1] = right[node]
            top += 2
    return np.sort(out[:found])


class SpatialIndex:
    """k-d tree over an ``(n, d)`` point array.

    >>> idx = SpatialIndex(np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 5.0]]))
    >>> idx.nearest([1.0, 0.5])
    (1, 0.5)
    >>> idx.within([0.0, 0.0], 1.0).tolist()
    [0, 1]
    """

    def __init__(self, points, leaf_size: int = LEAF_SIZE):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a non-empty (n, d) array")
        if leaf_size < 1:
            raise ValueError("leaf_size must be positive")
        self.points = pts
        self.leaf_size = leaf_size
        (self.perm, self.start, self.end, self.left, self.right,
         self.parent, self.lo, self.hi) = _build(pts, leaf_size)

    @property
    def n_nodes(self) -> int:
        return self.start.shape[0]

    def is_leaf(self, node: int) -> bool:
        return self.left[node] < 0

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.left < 0)

    def _arrays(self):
        return self.perm, self.start, self.end, self.left, self.right, self.lo, self.hi

    def nearest(self, query, exclude: int = -1) -> tuple[int, float]:
        """Nearest point to ``query`` (ties go to the smaller index), skipping ``exclude``."""
        q = np.asarray(query, dtype=np.float64)
        i, d2 = _nearest(self.points, q, exclude, *self._arrays())
        return int(i), float(np.sqrt(d2))

    def within(self, query, r: float) -> np.ndarray:
        """Sorted indices of points at distance ``<= r`` from ``query``."""
        q = np.asarray(query, dtype=np.float64)
        return _within(self.points, q, float(r) * float(r), *self._arrays())
