"""Euclidean minimum spanning trees.

Two independent engines compute the same tree:

* :func:`emst_exact` -- Prim's algorithm on the implicit complete graph,
  O(n^2) time and O(n) memory.  Used as the reference.
* :func:`emst_fast` -- dual-tree Boruvka over a :class:`SpatialIndex`.

Edges are ordered by the strict total order ``(squared length, min index,
max index)``.  Under that order the MST is unique, so both engines return
the same edge set even when distances tie.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from clusterlab.geometry.kdtree import (
    LEAF_SIZE,
    SpatialIndex,
    box_box_dist2,
    dist2,
    point_box_dist2,
)
from clusterlab.io import write_csv

KINDS = ("emst", "attachment_tree", "tour_bound")


@dataclass(frozen=True, eq=False)
class SpanningStructure:
    """Edge list ``(u[k], v[k], lengths[k])`` with ``u < v``, sorted by ``(u, v)``."""

    u: np.ndarray
    v: np.ndarray
    lengths: np.ndarray
    total_length: float
    kind: str
    n: int

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(w)) for a, b, w in zip(self.u, self.v, self.lengths)]

    def __len__(self) -> int:
        return self.u.shape[0]

    def summary(self) -> dict:
        return {"kind": self.kind, "n": self.n, "total_length": self.total_length}

    def to_csv(self, path) -> Path:
        return write_csv(path, ["u", "v", "length"], zip(self.u, self.v, self.lengths))

    def write_summary(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return path


def make_structure(u, v, lengths, kind: str, n: int) -> SpanningStructure:
    """Canonicalize an edge list (``u < v``, sorted) and total it by pairwise summation."""
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.float64)
    a, b = np.minimum(u, v), np.maximum(u, v)
    order = np.lexsort((b, a))
    a, b, lengths = a[order], b[order], np.ascontiguousarray(lengths[order])
    return SpanningStructure(a, b, lengths, float(np.sum(lengths)), kind, int(n))


def is_spanning_tree(n: int, u, v) -> bool:
    """True when the edges connect all ``n`` vertices without a cycle."""
    if len(u) != n - 1:
        return False
    root = list(range(n))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    for a, b in zip(u, v):
        ra, rb = find(int(a)), find(int(b))
        if ra == rb:
            return False
        root[ra] = rb
    return True


def _as_points(points) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("expected a non-empty (n, d) point array")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point coordinates must be finite")
    return pts


@njit(cache=True, nogil=True, inline="always")
def _key_less(d, lo, hi, bd, blo, bhi):
    if d != bd:
        return d < bd
    if lo != blo:
        return lo < blo
    return hi < bhi


@njit(cache=True, nogil=True)
def _prim(points):
    n = points.shape[0]
    in_tree = np.zeros(n, np.bool_)
    best = np.full(n, np.inf)
    src = np.full(n, -1, np.int64)
    eu = np.empty(n - 1, np.int64)
    ev = np.empty(n - 1, np.int64)
    ed = np.empty(n - 1, np.float64)
    cur = 0
    in_tree[0] = True
    for step in range(n - 1):
        pick = -1
        for w in range(n):
            if in_tree[w]:
                continue
            d = dist2(points, cur, w)
            lo, hi = min(cur, w), max(cur, w)
            if src[w] < 0 or _key_less(d, lo, hi, best[w], min(src[w], w), max(src[w], w)):
                best[w] = d
                src[w] = cur
            if pick < 0 or _key_less(best[w], min(src[w], w), max(src[w], w),
                                     best[pick], min(src[pick], pick), max(src[pick], pick)):
                pick = w
        in_tree[pick] = True
        eu[step] = src[pick]
        ev[step] = pick
        ed[step] = best[pick]
        cur = pick
    return eu, ev, ed


def emst_exact(points) -> SpanningStructure:
    """Reference EMST by Prim's algorithm (quadratic; fine up to a few thousand points)."""
    pts = _as_points(points)
    n = pts.shape[0]
    if n == 1:
        return make_structure([], [], [], "emst", 1)
    u, v, d2 = _prim(pts)
    return make_structure(u, v, np.sqrt(d2), "emst", n)


@njit(cache=True, nogil=True)
def _find(root, x):
    while root[x] != x:
        root[x] = root[root[x]]
        x = root[x]
    return x


@njit(cache=True, nogil=True)
def _boruvka(P, orig, start, end, left, right, parent, lo, hi):
    n = P.shape[0]
    nn = start.shape[0]
    root = np.arange(n)
    comp = np.arange(n)
    eu = np.empty(n - 1, np.int64)
    ev = np.empty(n - 1, np.int64)
    ed = np.empty(n - 1, np.float64)
    n_edges = 0

    node_comp = np.empty(nn, np.int64)
    bound = np.empty(nn, np.float64)
    best = np.empty(n, np.float64)
    best_a = np.empty(n, np.int64)
    best_b = np.empty(n, np.int64)
    best_lo = np.empty(n, np.int64)
    best_hi = np.empty(n, np.int64)
    stack_q = np.empty(4 * nn + 16, np.int64)
    stack_r = np.empty(4 * nn + 16, np.int64)
    cd = np.empty(4, np.float64)
    cq = np.empty(4, np.int64)
    cr = np.empty(4, np.int64)

    while n_edges < n - 1:
        # a node is "pure" when all of its points share one component
        for node in range(nn - 1, -1, -1):
            if left[node] < 0:
                c = comp[start[node]]
                for t in range(start[node] + 1, end[node]):
                    if comp[t] != c:
                        c = -1
                        break
                node_comp[node] = c
            else:
                c = node_comp[left[node]]
                node_comp[node] = c if c == node_comp[right[node]] else -1
        bound[:] = np.inf
        best[:] = np.inf
        best_a[:] = -1

        top = 1
        stack_q[0] = 0
        stack_r[0] = 0
        while top > 0:
            top -= 1
            q = stack_q[top]
            r = stack_r[top]
            if node_comp[q] >= 0 and node_comp[q] == node_comp[r]:
                continue
            if box_box_dist2(lo, hi, q, r) > bound[q]:
                continue
            q_leaf = left[q] < 0
            r_leaf = left[r] < 0
            if q_leaf and r_leaf:
                rc = node_comp[r]
                for i in range(start[q], end[q]):
                    c = comp[i]
                    if c == rc:
                        continue
                    if point_box_dist2(P, i, lo, hi, r) > best[c]:
                        continue
                    oi = orig[i]
                    for j in range(start[r], end[r]):
                        if comp[j] == c:
                            continue
                        d = dist2(P, i, j)
                        if d > best[c]:
                            continue
                        oj = orig[j]
                        klo = min(oi, oj)
                        khi = max(oi, oj)
                        if best_a[c] < 0 or _key_less(d, klo, khi, best[c], best_lo[c], best_hi[c]):
                            best[c] = d
                            best_a[c] = i
                            best_b[c] = j
                            best_lo[c] = klo
                            best_hi[c] = khi
                b = 0.0
                for i in range(start[q], end[q]):
                    v = best[comp[i]]
                    if v > b:
                        b = v
                bound[q] = b
                p = parent[q]
                while p >= 0:
                    nb = max(bound[left[p]], bound[right[p]])
                    if nb >= bound[p]:
                        break
                    bound[p] = nb
                    p = parent[p]
                continue
            # expand into up to four child pairs, nearest popped first
            k = 0
            if q_leaf:
                for rr in (left[r], right[r]):
                    cq[k] = q
                    cr[k] = rr
                    k += 1
            elif r_leaf:
                for qq in (left[q], right[q]):
                    cq[k] = qq
                    cr[k] = r
                    k += 1
            else:
                for qq in (left[q], right[q]):
                    for rr in (left[r], right[r]):
                        cq[k] = qq
                        cr[k] = rr
                        k += 1
            for t in range(k):
                cd[t] = box_box_dist2(lo, hi, cq[t], cr[t])
            for t in range(1, k):
                s = t
                while s > 0 and cd[s - 1] < cd[s]:
                    cd[s - 1], cd[s] = cd[s], cd[s - 1]
                    cq[s - 1], cq[s] = cq[s], cq[s - 1]
                    cr[s - 1], cr[s] = cr[s], cr[s - 1]
                    s -= 1
            for t in range(k):
                stack_q[top] = cq[t]
                stack_r[top] = cr[t]
                top += 1

        merged = 0
        for c in range(n):
            if comp[c] != c or best_a[c] < 0:
                continue
            a = best_a[c]
            b = best_b[c]
            ra = _find(root, a)
            rb = _find(root, b)
            if ra == rb:
                continue
            root[ra] = rb
            eu[n_edges] = orig[a]
            ev[n_edges] = orig[b]
            ed[n_edges] = best[c]
            n_edges += 1
            merged += 1
        if merged == 0:
            break
        for i in range(n):
            comp[i] = _find(root, i)
    return eu[:n_edges], ev[:n_edges], ed[:n_edges]


def emst_fast(points, leaf_size: int = LEAF_SIZE) -> SpanningStructure:
    """EMST by dual-tree Boruvka: each round finds every component's nearest
    foreign point with one simultaneous traversal of the k-d tree against
    itself, pruning node pairs that lie in one component or are farther than
    the worst current candidate in the query node."""
    pts = _as_points(points)
    n = pts.shape[0]
    if n == 1:
        return make_structure([], [], [], "emst", 1)
    index = SpatialIndex(pts, leaf_size)
    P = np.ascontiguousarray(pts[index.perm])
    u, v, d2 = _boruvka(P, index.perm, index.start, index.end, index.left,
                        index.right, index.parent, index.lo, index.hi)
    if u.shape[0] != n - 1:
        raise RuntimeError("Boruvka terminated without spanning all points")
    return make_structure(u, v, np.sqrt(d2), "emst", n)


def attachment_tree(cluster) -> SpanningStructure:
    """The cluster's own attachment forest as an edge list."""
    from clusterlab.process import attachment_edge_lengths

    child = np.flatnonzero(cluster.parents >= 0)
    return make_structure(child, cluster.parents[child], attachment_edge_lengths(cluster),
                          "attachment_tree", cluster.n)
