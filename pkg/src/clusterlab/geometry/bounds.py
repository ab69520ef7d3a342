"""Tour-length bounds and the short-pair lower-bound witness."""

from __future__ import annotations

import numpy as np

from clusterlab.geometry.mst import emst_fast


def tsp_bounds(points) -> tuple[float, float]:
    """``(T, 2T)`` with ``T`` the EMST length; the optimal tour length lies between.

    For two points the "tour" goes out and back, so its length is exactly 2T;
    the lower bound T is then not tight.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("tour bounds need at least two points")
    t = emst_fast(pts).total_length
    return t, 2.0 * t


def mst_length_per_edge_floor(n: int, count_below: int, delta: float) -> float:
    """``max(0, (n - 1 - count_below) * delta)``.

    With ``count_below`` pairs at distance at most ``delta``, a spanning tree
    has at most that many edges of length ``<= delta``, so the rest of its
    ``n - 1`` edges each exceed ``delta``.
    """
    if count_below < 0 or count_below > n * (n - 1) // 2:
        raise ValueError(f"count_below={count_below} outside [0, C({n}, 2)]")
    return max(0, n - 1 - count_below) * float(delta)


def long_edge_count(lengths, delta: float) -> int:
    """Number of edges strictly longer than ``delta``."""
    return int(np.count_nonzero(np.asarray(lengths) > delta))
