import numpy as np
import pytest

from specmap.mesh import TriangleMesh
from specmap.spectral import cotan_laplacian, spectral_basis
from specmap.testbed import make_asymmetric_blob, make_permutation_pair


@pytest.fixture
def tri_mesh():
    """Unit equilateral triangle in the z=0 plane."""
    verts = np.array(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, np.sqrt(3.0) / 2.0, 0.0]]
    )
    return TriangleMesh(verts, np.array([[0, 1, 2]]))


@pytest.fixture
def cube_mesh():
    """Unit cube surface, 12 triangles, area 6."""
    v = np.array(
        [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
            [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
        ],
        dtype=np.float64,
    )
    quads = [
        (0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4),
        (2, 3, 7, 6), (1, 2, 6, 5), (3, 0, 4, 7),
    ]
    tris = []
    for a, b, c, d in quads:
        tris += [(a, b, c), (a, c, d)]
    return TriangleMesh(v, np.array(tris))


@pytest.fixture(scope="session")
def ico_mesh():
    """Small closed blob, n=162."""
    return make_asymmetric_blob(162, seed=42)


@pytest.fixture(scope="session")
def small_pair():
    """Permutation-isometry pair on n=162 with bases of size 40."""
    mesh = make_asymmetric_blob(162, seed=7)
    pair = make_permutation_pair(mesh, seed=11)
    bM = spectral_basis(cotan_laplacian(pair.mesh_M), 40)
    bN = spectral_basis(cotan_laplacian(pair.mesh_N), 40)
    return pair, bM, bN


@pytest.fixture(scope="session")
def pair_642():
    """Permutation-isometry pair on n=642 with bases of size 55."""
    mesh = make_asymmetric_blob(642, seed=0)
    pair = make_permutation_pair(mesh, seed=1000)
    bM = spectral_basis(cotan_laplacian(pair.mesh_M), 55)
    bN = spectral_basis(cotan_laplacian(pair.mesh_N), 55)
    return pair, bM, bN
