"""The growing Gaussian cluster: configuration, generation and basic measurements.

Points are stored 0-based: ``points[i]`` is the point the literature calls
``X_{i+1}``.  Step ``i`` (1-based point number, ``i > k``) attaches the new
point to a uniformly chosen earlier point and displaces it by an isotropic
Gaussian whose per-coordinate standard deviation is ``i ** -alpha``.

Random stream layout
--------------------
Each cluster owns one ``numpy.random.PCG64`` stream seeded with
``config.seed``.  Step ``i`` consumes exactly ``1 + 2*d`` uniforms on
``[0, 1)``, in this order::

    u_parent, (u1, u2) for axis 0, (u1, u2) for axis 1, ...

The parent (0-based) is ``floor(u_parent * (i - 1))``.  Each coordinate is
produced by the trigonometric Box-Muller transform
``sqrt(-2 log(1 - u1)) * cos(2 pi u2)`` from its own pair of uniforms, so the
count of uniforms per variate never depends on the values drawn.  A
consequence is that the cluster with ``n`` points is an exact prefix of the
cluster with ``n' > n`` points under the same seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit

from clusterlab.io import fmt, read_json, write_csv, write_json

NO_PARENT = -1
_UINT64_MAX = 2**64 - 1


class ClusterFormatError(ValueError):
    """A cluster CSV could not be parsed; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class GrowthConfig:
    """Parameters of one cluster.

    ``initial_points`` defaults to the single origin point.  With ``k > 1``
    initial points every later step still chooses its parent uniformly among
    all existing points.
    """

    dimension: int
    alpha: float
    n_points: int
    seed: int = 0
    initial_points: tuple | None = None

    def __post_init__(self):
        if isinstance(self.dimension, bool) or int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dimension!r}")
        object.__setattr__(self, "dimension", int(self.dimension))
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or alpha < 0:
            raise ValueError(f"alpha must be a finite non-negative real, got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)
        if int(self.seed) != self.seed or not 0 <= self.seed <= _UINT64_MAX:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))

        if self.initial_points is None:
            init = ((0.0,) * self.dimension,)
        else:
            init = tuple(tuple(float(c) for c in p) for p in self.initial_points)
        if not init:
            raise ValueError("at least one initial point is required")
        for p in init:
            if len(p) != self.dimension:
                raise ValueError(f"initial point {p} does not have dimension {self.dimension}")
            if not all(math.isfinite(c) for c in p):
                raise ValueError(f"initial point {p} has non-finite coordinates")
        object.__setattr__(self, "initial_points", init)

        if int(self.n_points) != self.n_points or self.n_points < len(init):
            raise ValueError(
                f"n_points must be an integer >= number of initial points ({len(init)}), got {self.n_points!r}"
            )
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def k(self) -> int:
        return len(self.initial_points)

    def replace(self, **changes) -> "GrowthConfig":
        values = self.to_dict()
        values.update(changes)
        return GrowthConfig.from_dict(values)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "alpha": self.alpha,
            "n_points": self.n_points,
            "seed": self.seed,
            "initial_points": [list(p) for p in self.initial_points],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GrowthConfig":
        init = data.get("initial_points")
        return cls(
            dimension=data["dimension"],
            alpha=data["alpha"],
            n_points=data["n_points"],
            seed=data.get("seed", 0),
            initial_points=None if init is None else tuple(tuple(p) for p in init),
        )


@dataclass(frozen=True, eq=False)
class Cluster:
    """Generated points plus the attachment forest (``parents``, -1 for roots)."""

    points: np.ndarray
    parents: np.ndarray
    config: GrowthConfig | None = field(default=None)

    def __post_init__(self):
        self.points.flags.writeable = False
        self.parents.flags.writeable = False

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def roots(self) -> np.ndarray:
        return np.flatnonzero(self.parents == NO_PARENT)

    def prefix(self, n: int) -> "Cluster":
        """The cluster as it stood after ``n`` points (same seed, smaller n)."""
        if not 1 <= n <= self.n:
            raise IndexError(f"prefix size {n} outside [1, {self.n}]")
        config = None if self.config is None else self.config.replace(n_points=n)
        return Cluster(self.points[:n].copy(), self.parents[:n].copy(), config)


def sigma(i: int, alpha: float) -> float:
    """Standard deviation ``i ** -alpha`` of each displacement coordinate at step ``i``."""
    if i < 1:
        raise ValueError(f"step index must be >= 1, got {i}")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    return float(i) ** -float(alpha)


def trial_seed(seed: int, *keys: int) -> int:
    """Derive an independent 64-bit seed from a base seed and integer keys.

    Implemented as ``SeedSequence(seed, spawn_key=keys)``, so derived streams
    are statistically independent of each other and of the base stream.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def box_muller(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Standard normals from paired uniforms on [0, 1)."""
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


@njit(cache=True, nogil=True)
def _accumulate(points, parents, disp, k):
    for i in range(k, points.shape[0]):
        p = parents[i]
        for a in range(points.shape[1]):
            points[i, a] = points[p, a] + disp[i - k, a]


def grow(config: GrowthConfig) -> Cluster:
    """Generate a cluster; see the module docstring for the exact random layout."""
    n, k, d = config.n_points, config.k, config.dimension
    points = np.empty((n, d), dtype=np.float64)
    points[:k] = np.asarray(config.initial_points, dtype=np.float64)
    parents = np.full(n, NO_PARENT, dtype=np.int64)
    steps = n - k
    if steps:
        rng = np.random.Generator(np.random.PCG64(config.seed))
        u = rng.random((steps, 1 + 2 * d))
        existing = np.arange(k, n, dtype=np.int64)
        parents[k:] = np.minimum((u[:, 0] * existing).astype(np.int64), existing - 1)
        step = np.arange(k + 1, n + 1, dtype=np.float64)
        scale = step ** -config.alpha
        disp = box_muller(u[:, 1::2], u[:, 2::2]) * scale[:, None]
        _accumulate(points, parents, disp, k)
    return Cluster(points, parents, config)


def radius(cluster: Cluster) -> float:
    """Largest distance from the origin over all points (0 for an empty cluster is undefined)."""
    pts = cluster.points if isinstance(cluster, Cluster) else np.asarray(cluster, dtype=float)
    if pts.shape[0] == 0:
        raise ValueError("radius of an empty point set")
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", pts, pts))))


def radius_profile(cluster: Cluster) -> np.ndarray:
    """``radius(cluster.prefix(m))`` for every ``m = 1..n`` (a running maximum)."""
    sq = np.einsum("ij,ij->i", cluster.points, cluster.points)
    return np.sqrt(np.maximum.accumulate(sq))


@njit(cache=True, nogil=True)
def _levels(parents):
    out = np.zeros(parents.shape[0], dtype=np.int64)
    for i in range(parents.shape[0]):
        p = parents[i]
        if p >= 0:
            out[i] = out[p] + 1
    return out


def levels(cluster: Cluster) -> np.ndarray:
    """Depth of every vertex in the attachment forest (roots are 0)."""
    return _levels(cluster.parents)


def _check_index(cluster: Cluster, i) -> int:
    if isinstance(i, bool) or int(i) != i or not 0 <= i < cluster.n:
        raise IndexError(f"vertex index {i!r} outside [0, {cluster.n})")
    return int(i)


def level(cluster: Cluster, i: int) -> int:
    i = _check_index(cluster, i)
    depth = 0
    parents = cluster.parents
    while parents[i] != NO_PARENT:
        i = parents[i]
        depth += 1
    return depth


def attachment_edge_lengths(cluster: Cluster) -> np.ndarray:
    child = np.flatnonzero(cluster.parents != NO_PARENT)
    diff = cluster.points[child] - cluster.points[cluster.parents[child]]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def attachment_tree_length(cluster: Cluster) -> float:
    """Total length of the attachment tree, an upper bound on the EMST length."""
    return float(np.sum(attachment_edge_lengths(cluster)))


def gaussian_tail_upper(x: float, sigma: float) -> float:
    """Mills-ratio bound ``sigma * exp(-x^2 / 2 sigma^2) / (x sqrt(2 pi))`` on P(N(0, sigma) >= x)."""
    if not x > 0 or not sigma > 0:
        raise ValueError(f"x and sigma must be positive, got x={x!r}, sigma={sigma!r}")
    return sigma * math.exp(-(x * x) / (2.0 * sigma * sigma)) / (x * math.sqrt(2.0 * math.pi))


# -- serialization -----------------------------------------------------------


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".config.json")


def write_cluster_csv(cluster: Cluster, path) -> Path:
    """Write ``index,parent,x0..x{d-1}``; the GrowthConfig goes to a JSON sidecar."""
    header = ["index", "parent"] + [f"x{a}" for a in range(cluster.d)]
    rows = (
        [i, int(cluster.parents[i])] + [fmt(c) for c in cluster.points[i]]
        for i in range(cluster.n)
    )
    path = write_csv(path, header, rows)
    if cluster.config is not None:
        write_json(sidecar_path(path), cluster.config.to_dict())
    return path


def read_cluster_csv(path) -> Cluster:
    """Parse a cluster CSV; malformed content raises :class:`ClusterFormatError`."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ClusterFormatError("empty file", 1) from None
        if len(header) < 3 or header[0] != "index" or header[1] != "parent":
            raise ClusterFormatError("expected header index,parent,x0,...", 1)
        d = len(header) - 2
        if header[2:] != [f"x{a}" for a in range(d)]:
            raise ClusterFormatError("coordinate columns must be x0..x{d-1}", 1)
        points, parents = [], []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != d + 2:
                raise ClusterFormatError(f"expected {d + 2} fields, got {len(row)}", line)
            try:
                idx, par = int(row[0]), int(row[1])
                coords = [float(c) for c in row[2:]]
            except ValueError as exc:
                raise ClusterFormatError(str(exc), line) from None
            if idx != len(points):
                raise ClusterFormatError(f"index {idx} out of sequence", line)
            if not (par == NO_PARENT or 0 <= par < idx):
                raise ClusterFormatError(f"parent {par} must be -1 or an earlier index", line)
            if not all(math.isfinite(c) for c in coords):
                raise ClusterFormatError("non-finite coordinate", line)
            points.append(coords)
            parents.append(par)
    if not points:
        raise ClusterFormatError("no data rows", 2)
    config = None
    side = sidecar_path(path)
    if side.exists():
        config = GrowthConfig.from_dict(read_json(side))
    return Cluster(np.array(points, dtype=np.float64), np.array(parents, dtype=np.int64), config)


def read_points_file(path) -> list[Sequence[float]]:
    """Whitespace- or comma-separated coordinates, one point per line (``#`` comments)."""
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                out.append([float(t) for t in text.replace(",", " ").split()])
            except ValueError as exc:
                raise ClusterFormatError(str(exc), lineno) from None
    return out
