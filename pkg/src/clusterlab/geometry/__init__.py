"""Spanning structures, pair counts and tour bounds on point clouds."""

from clusterlab.geometry.bounds import long_edge_count, mst_length_per_edge_floor, tsp_bounds
from clusterlab.geometry.kdtree import SpatialIndex
from clusterlab.geometry.mst import (
    SpanningStructure,
    attachment_tree,
    emst_exact,
    emst_fast,
    is_spanning_tree,
    make_structure,
)
from clusterlab.geometry.pairs import close_pairs

__all__ = [
    "SpanningStructure",
    "SpatialIndex",
    "attachment_tree",
    "close_pairs",
    "emst_exact",
    "emst_fast",
    "is_spanning_tree",
    "long_edge_count",
    "make_structure",
    "mst_length_per_edge_floor",
    "tsp_bounds",
]
