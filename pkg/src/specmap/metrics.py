"""Map-quality measurements: geodesic accuracy, coverage, bijectivity,
edge distortion, and Dirichlet smoothness.

Geodesic distances are shortest paths along mesh edges weighted by
Euclidean length (graph geodesics), computed per requested source vertex.
Errors are reported divided by a normalizer that defaults to the square
root of the relevant shape's total area; the normalizer is an explicit
argument everywhere, so callers can substitute e.g. the geodesic
diameter.
"""

import warnings
from dataclasses import dataclass, asdict

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .mesh import edge_set, total_area, triangle_areas


@dataclass(frozen=True)
class GeodesicTable:
    """Graph-geodesic distances from each listed source vertex to every
    vertex of its mesh."""

    sources: np.ndarray
    dist: np.ndarray
    _row: np.ndarray

    def row(self, vertex):
        """Distance row for one source vertex (must have been requested)."""
        r = self._row[vertex]
        if r < 0:
            raise KeyError(f"vertex {vertex} is not a source of this table")
        return self.dist[r]

    def rows(self, vertices):
        r = self._row[np.asarray(vertices, dtype=np.int64)]
        if (r < 0).any():
            missing = np.asarray(vertices)[r < 0][:5]
            raise KeyError(f"vertices {missing} are not sources of this table")
        return self.dist[r]


@dataclass(frozen=True)
class MapReport:
    """Bundle of the five map-quality numbers; entries are None when the
    inputs needed for them were not supplied."""

    accuracy_mean: float = None
    uncoverage_percent: float = None
    bijectivity_mean: float = None
    edge_distortion_mean: float = None
    dirichlet: float = None

    def to_dict(self):
        return asdict(self)


def dijkstra_geodesics(mesh, edges, sources):
    """Shortest-path distances along weighted mesh edges from each vertex
    in ``sources``. Unreachable vertices get +inf (and a warning)."""
    n = mesh.n
    sources = np.unique(np.asarray(sources, dtype=np.int64))
    if sources.size and (sources.min() < 0 or sources.max() >= n):
        raise IndexError("geodesic source vertex out of range")
    e = edges.edges
    ij = np.concatenate([e[:, 0], e[:, 1]])
    ji = np.concatenate([e[:, 1], e[:, 0]])
    w = np.concatenate([edges.lengths, edges.lengths])
    graph = sparse.csr_matrix((w, (ij, ji)), shape=(n, n))
    dist = _csgraph_dijkstra(graph, directed=True, indices=sources)
    dist = np.atleast_2d(dist)
    if np.isinf(dist).any():
        warnings.warn(
            "mesh is disconnected: some geodesic distances are infinite",
            stacklevel=2,
        )
    row = np.full(n, -1, dtype=np.int64)
    row[sources] = np.arange(sources.size)
    return GeodesicTable(sources, dist, row)


def accuracy(pm, gt, geo_N, normalizer):
    """Mean geodesic distance on the target shape between mapped and
    ground-truth images, divided by ``normalizer``."""
    if len(pm) != len(gt):
        raise ValueError(f"map covers {len(pm)} vertices, ground truth {len(gt)}")
    d = geo_N.rows(gt.targets)[np.arange(len(pm)), pm.targets]
    return float(d.mean() / normalizer)


def uncoverage(pm, mesh_N, variant="vertex"):
    """Percentage of the target shape missed by the map's image.

    ``variant="vertex"`` counts vertices; ``variant="area"`` weights them
    by lumped vertex area.
    """
    covered = np.zeros(mesh_N.n, dtype=bool)
    covered[pm.targets] = True
    if variant == "vertex":
        return float(100.0 * (mesh_N.n - covered.sum()) / mesh_N.n)
    if variant == "area":
        areas = np.bincount(
            mesh_N.triangles.reshape(-1),
            weights=np.repeat(triangle_areas(mesh_N) / 3.0, 3),
            minlength=mesh_N.n,
        )
        return float(100.0 * areas[~covered].sum() / areas.sum())
    raise ValueError(f"variant must be 'vertex' or 'area', got {variant!r}")


def bijectivity(map_MN, map_NM, geo_M, normalizer):
    """Mean geodesic distance between the round trip through both maps
    and the identity, divided by ``normalizer``."""
    comp = map_NM.targets[map_MN.targets]
    if comp.shape[0] != len(map_MN):
        raise ValueError("maps are not composable")
    d = geo_M.rows(comp)[np.arange(comp.shape[0]), np.arange(comp.shape[0])]
    return float(d.mean() / normalizer)


def edge_distortion(pm, edges_M, geo_N):
    """Mean squared relative stretch of source edges under the map.

    An edge collapsed to a single target vertex contributes (0/len - 1)^2
    = 1; edge lengths are positive so the denominator never vanishes.
    """
    e = edges_M.edges
    ti = pm.targets[e[:, 0]]
    tj = pm.targets[e[:, 1]]
    d = geo_N.rows(ti)[np.arange(e.shape[0]), tj]
    return float((((d / edges_M.lengths) - 1.0) ** 2).mean())


def dirichlet_energy(pm, lap_M, mesh_N):
    """Smoothness of the map as the Dirichlet energy of the pulled-back,
    area-normalized target coordinates, averaged over the 3 axes."""
    P = mesh_N.vertices[pm.targets] / np.sqrt(total_area(mesh_N))
    return float(np.einsum("ic,ic->", P, lap_M.W @ P) / 3.0)


def map_report(mesh_M, mesh_N, map_MN, map_NM=None, gt=None, lap_M=None,
               normalizer_M=None, normalizer_N=None, uncoverage_variant="vertex"):
    """Assemble a :class:`MapReport`, computing geodesic tables only for
    the source vertices each metric actually needs."""
    from .spectral import cotan_laplacian

    if normalizer_N is None:
        normalizer_N = float(np.sqrt(total_area(mesh_N)))
    if normalizer_M is None:
        normalizer_M = float(np.sqrt(total_area(mesh_M)))

    edges_M = edge_set(mesh_M)
    edges_N = edge_set(mesh_N)

    sources_N = [np.unique(map_MN.targets[edges_M.edges[:, 0]])]
    if gt is not None:
        sources_N.append(np.unique(gt.targets))
    geo_N = dijkstra_geodesics(mesh_N, edges_N, np.concatenate(sources_N))

    acc = None
    if gt is not None:
        acc = accuracy(map_MN, gt, geo_N, normalizer_N)

    bij = None
    if map_NM is not None:
        comp = np.unique(map_NM.targets[map_MN.targets])
        geo_M = dijkstra_geodesics(mesh_M, edges_M, comp)
        bij = bijectivity(map_MN, map_NM, geo_M, normalizer_M)

    if lap_M is None:
        lap_M = cotan_laplacian(mesh_M)

    return MapReport(
        accuracy_mean=acc,
        uncoverage_percent=uncoverage(map_MN, mesh_N, uncoverage_variant),
        bijectivity_mean=bij,
        edge_distortion_mean=edge_distortion(map_MN, edges_M, geo_N),
        dirichlet=dirichlet_energy(map_MN, lap_M, mesh_N),
    )
