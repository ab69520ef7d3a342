"""Structure of the attachment forest and the urn model for subtree sizes.

The subtree of vertex ``m`` (0-based ``m``, i.e. the point numbered
``m + 1``) grows like the white balls of a Polya-Eggenberger urn started
with one white and ``m`` blue balls and reinforced by one ball per draw.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from clusterlab.io import write_csv
from clusterlab.process import NO_PARENT, Cluster, _check_index, levels


@njit(cache=True, nogil=True)
def _subtree_sizes(parents):
    n = parents.shape[0]
    size = np.ones(n, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        p = parents[i]
        if p >= 0:
            size[p] += size[i]
    return size


def subtree_sizes(cluster: Cluster) -> np.ndarray:
    """Number of vertices in every subtree, each vertex counting itself."""
    return _subtree_sizes(cluster.parents)


def subtree_size(cluster: Cluster, m: int) -> int:
    m = _check_index(cluster, m)
    return int(subtree_sizes(cluster)[m])


def lowest_common_ancestor(cluster: Cluster, i: int, j: int, depth: np.ndarray | None = None):
    """Deepest common ancestor of ``i`` and ``j``, or ``None`` across trees.

    Walks parent pointers after aligning depths; trees are O(log n) deep so
    no preprocessing is worth it.  Pass precomputed ``levels`` as ``depth``
    when calling repeatedly.
    """
    i = _check_index(cluster, i)
    j = _check_index(cluster, j)
    parents = cluster.parents
    if depth is None:
        depth = levels(cluster)
    while depth[i] > depth[j]:
        i = parents[i]
    while depth[j] > depth[i]:
        j = parents[j]
    while i != j:
        i, j = parents[i], parents[j]
        if i == NO_PARENT:
            return None
    return int(i)


@dataclass(frozen=True)
class AncestorPairProfile:
    """``counts[m]``: unordered pairs ``{i, j}``, ``i != j``, whose LCA is ``m``."""

    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_csv(self, path) -> Path:
        return write_csv(path, ["m", "count"], ((m, int(c)) for m, c in enumerate(self.counts)))


def ancestor_pair_profile(cluster: Cluster) -> AncestorPairProfile:
    """Pairs inside ``m``'s subtree, minus those already inside one child subtree.

    ``counts[m] = C(size(m), 2) - sum_c C(size(c), 2)`` over children ``c``.
    Pairs split across different roots have no LCA and are not counted.
    """
    size = subtree_sizes(cluster)
    within = size * (size - 1) // 2
    counts = within.copy()
    child = np.flatnonzero(cluster.parents != NO_PARENT)
    np.subtract.at(counts, cluster.parents[child], within[child])
    return AncestorPairProfile(counts)


@dataclass(frozen=True)
class UrnMoments:
    m: int
    n: int
    mean: float
    variance: float
    second_moment: float
    upper_bound: float


def urn_moments(m: int, n: int) -> UrnMoments:
    """Exact moments of the final subtree size of the ``m``-th point (1-based).

    Urn parameters: one white ball, ``m - 1`` blue, ``tau0 = m`` total,
    reinforcement ``s = 1``, run for ``n - m`` rounds.  ``upper_bound`` is
    the envelope ``2 n^2 / m^2`` on the second moment.
    """
    if isinstance(m, bool) or int(m) != m or isinstance(n, bool) or int(n) != n:
        raise ValueError("m and n must be integers")
    m, n = int(m), int(n)
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    w0, b0, tau0, s = 1, m - 1, m, 1
    rounds = n - m
    mean = w0 * s * rounds / tau0 + w0
    variance = w0 * b0 * s * s * rounds * (s * rounds + tau0) / (tau0 * tau0 * (tau0 + s))
    return UrnMoments(
        m=m,
        n=n,
        mean=mean,
        variance=variance,
        second_moment=variance + mean * mean,
        upper_bound=2.0 * n * n / (m * m),
    )


def write_urn_grid(path, n_max: int) -> Path:
    """CSV ``m,n,mean,second_moment,bound`` for every ``1 <= m <= n <= n_max``."""

    def rows():
        for n in range(1, n_max + 1):
            for m in range(1, n + 1):
                u = urn_moments(m, n)
                yield m, n, u.mean, u.second_moment, u.upper_bound

    return write_csv(path, ["m", "n", "mean", "second_moment", "bound"], rows())


@dataclass(frozen=True)
class DepthProfile:
    counts: np.ndarray  # counts[level] = number of vertices at that level
    max_depth: int

    def as_dict(self) -> dict:
        return {lvl: int(c) for lvl, c in enumerate(self.counts) if c}

    def to_csv(self, path) -> Path:
        return write_csv(path, ["level", "count"], ((lvl, int(c)) for lvl, c in enumerate(self.counts)))


def depth_profile(cluster: Cluster) -> DepthProfile:
    depth = levels(cluster)
    return DepthProfile(np.bincount(depth), int(depth.max()))
