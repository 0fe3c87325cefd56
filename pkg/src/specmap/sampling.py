"""Farthest-point sampling and nearest-neighbor indices over point sets.

The exact index guarantees the true nearest neighbor with ties broken
toward the smallest stored index. The approximate index is a kd-tree
whose queries scan a bounded number of leaves (the candidate-list width),
trading a small, bounded disagreement with exact search for speed in
higher dimensions.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

DEFAULT_WIDTH = 32
MODES = ("exact", "approximate")


@dataclass(frozen=True)
class SampleSet:
    """Distinct vertex indices chosen by FPS and the seed that drove it."""

    indices: np.ndarray
    seed: int

    def __len__(self):
        return self.indices.shape[0]


@dataclass(frozen=True)
class NNIndex:
    """Queryable nearest-neighbor structure over ``points`` (m, k) rows.

    Immutable once built; concurrent queries from multiple threads are
    safe and independent.
    """

    points: np.ndarray
    mode: str
    width: int = DEFAULT_WIDTH
    _tree: object = field(default=None, repr=False, compare=False)

    @property
    def m(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


def farthest_point_sample(mesh, count, seed):
    """Greedy Euclidean FPS over mesh vertices, seeded start vertex.

    Deterministic per (mesh, count, seed); distance ties resolve to the
    smallest vertex index.
    """
    n = mesh.n
    if not 1 <= count <= n:
        raise ValueError(f"sample count {count} out of range [1, {n}]")
    start = int(np.random.default_rng(seed).integers(n))
    idx = _kernels.farthest_point_indices(mesh.vertices, count, start)
    return SampleSet(idx, seed)


def build_nn(points, mode="exact", width=DEFAULT_WIDTH):
    """Build an :class:`NNIndex` over the rows of ``points``."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ValueError("point set must be a non-empty (m, k) array")
    if not np.isfinite(points).all():
        raise ValueError("point set contains non-finite entries")
    if mode not in MODES:
        raise ValueError(f"nn mode must be one of {MODES}, got {mode!r}")
    tree = _kernels.kdtree_build(points) if mode == "approximate" else None
    return NNIndex(points, mode, width, tree)


def query_nn(index, q):
    """Nearest stored point to the single query ``q``: (index, distance)."""
    idx, dist = query_nn_batch(index, np.asarray(q, np.float64)[None, :])
    return int(idx[0]), float(dist[0])


def query_nn_batch(index, queries):
    """Vectorized :func:`query_nn` over query rows."""
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    if queries.ndim != 2 or queries.shape[1] != index.dim:
        raise ValueError(
            f"queries must be (q, {index.dim}), got {queries.shape}"
        )
    if index.mode == "exact":
        idx, d2 = _kernels.nearest_scan(index.points, queries)
    else:
        idx, d2 = _kernels.kdtree_query_batch(index._tree, queries, index.width)
    return idx, np.sqrt(d2)


def save_samples(samples, path):
    with open(path, "w", encoding="ascii") as fh:
        for i in samples.indices:
            fh.write(f"{int(i)}\n")


def load_samples(path, seed=0):
    idx = np.loadtxt(path, dtype=np.int64, ndmin=1)
    return SampleSet(idx, seed)
