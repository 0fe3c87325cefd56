"""Cotangent Laplacian, lumped mass matrix, and the truncated eigenbasis.

The stiffness matrix W carries the positive-semi-definite sign convention
(positive diagonal, -(cot a + cot b)/2 off the diagonal) and the mass
matrix is the lumped barycentric one: each vertex receives one third of
its incident triangle areas. The basis solves the generalized problem
W phi = lambda A phi with A-orthonormal eigenvectors, realized as a
standard symmetric problem on A^(-1/2) W A^(-1/2).
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from .errors import EigenSolveError
from .mesh import triangle_areas

EIG_TOL = 1e-10
EIG_MAXITER = 1000
DENSE_LIMIT = 1000
SIGN_EPS = 1e-8


@dataclass(frozen=True)
class LaplacianPair:
    """Stiffness matrix W (sparse CSR) and lumped vertex areas (diagonal
    of the mass matrix A)."""

    W: sparse.csr_matrix
    mass: np.ndarray

    @property
    def n(self):
        return self.mass.shape[0]

    @property
    def A(self):
        """The mass matrix as a sparse diagonal matrix."""
        return sparse.diags(self.mass)


@dataclass(frozen=True)
class SpectralBasis:
    """First k generalized eigenpairs of a Laplacian.

    phi : (n, k) eigenvector columns, A-orthonormal, sign-fixed so the
        first significant entry of each column is positive.
    lam : (k,) eigenvalues, ascending.
    mass : (n,) lumped vertex areas of the underlying mesh.
    """

    phi: np.ndarray
    lam: np.ndarray
    mass: np.ndarray

    @property
    def n(self):
        return self.phi.shape[0]

    @property
    def k(self):
        return self.phi.shape[1]


def cotan_laplacian(mesh):
    """Assemble the cotangent stiffness matrix and lumped mass matrix."""
    v = mesh.vertices
    t = mesh.triangles
    n = mesh.n

    rows = []
    cols = []
    vals = []
    # corner c sits opposite edge (a, b); its half-cotangent weights the edge
    for c, a, b in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        ea = v[t[:, a]] - v[t[:, c]]
        eb = v[t[:, b]] - v[t[:, c]]
        cot = 0.5 * np.einsum("ij,ij->i", ea, eb) / np.linalg.norm(
            np.cross(ea, eb), axis=1
        )
        ia, ib = t[:, a], t[:, b]
        rows += [ia, ib, ia, ib]
        cols += [ib, ia, ia, ib]
        vals += [-cot, -cot, cot, cot]

    W = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()

    areas = triangle_areas(mesh)
    mass = np.bincount(t.reshape(-1), weights=np.repeat(areas / 3.0, 3), minlength=n)
    return LaplacianPair(W, mass)


def spectral_basis(lap, k):
    """First ``k`` eigenpairs of W phi = lambda A phi, ascending.

    Uses a dense solve for small problems and ARPACK shift-invert
    otherwise. Raises :class:`EigenSolveError` on non-convergence or when
    ``k`` exceeds the vertex count.
    """
    n = lap.n
    if not 1 <= k <= n:
        raise EigenSolveError(f"requested k={k} eigenpairs of an n={n} mesh")
    if np.any(lap.mass <= 0):
        raise EigenSolveError("mass matrix has non-positive entries")

    d = 1.0 / np.sqrt(lap.mass)
    S = sparse.diags(d) @ lap.W @ sparse.diags(d)
    S = (S + S.T) * 0.5  # symmetrize away assembly round-off

    if n <= DENSE_LIMIT or k > n - 2:
        lam, u = eigh(S.toarray())
        lam, u = lam[:k], u[:, :k]
    else:
        scale = S.diagonal().mean()
        try:
            lam, u = eigsh(
                S.tocsc(),
                k=k,
                sigma=-0.01 * scale,
                which="LM",
                tol=EIG_TOL,
                maxiter=EIG_MAXITER,
            )
        except ArpackNoConvergence as exc:
            raise EigenSolveError(
                f"eigensolver converged only {len(exc.eigenvalues)}/{k} pairs "
                f"within {EIG_MAXITER} iterations"
            ) from exc
        except ArpackError as exc:
            raise EigenSolveError(f"eigensolver failed: {exc}") from exc
        order = np.argsort(lam)
        lam, u = lam[order], u[:, order]

    phi = u * d[:, None]
    _fix_signs(phi)
    return SpectralBasis(np.ascontiguousarray(phi), lam.copy(), lap.mass)


def _fix_signs(phi):
    """Flip columns in place so the first significant entry is positive."""
    for j in range(phi.shape[1]):
        col = phi[:, j]
        big = np.abs(col) > SIGN_EPS * np.abs(col).max()
        first = int(np.argmax(big))
        if col[first] < 0:
            phi[:, j] = -col


def embed(basis, vertex):
    """Spectral embedding of one vertex: its row of phi."""
    if not 0 <= vertex < basis.n:
        raise IndexError(f"vertex {vertex} out of range [0, {basis.n})")
    return basis.phi[vertex].copy()


def residuals(lap, basis):
    """Per-eigenpair residual norms ||W phi_i - lambda_i A phi_i||."""
    R = lap.W @ basis.phi - (lap.mass[:, None] * basis.phi) * basis.lam[None, :]
    return np.linalg.norm(R, axis=0)


# ---------------------------------------------------------------------------
# basis cache file: "n k" header, one line of eigenvalues, n rows of phi


def save_basis(basis, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{basis.n} {basis.k}\n")
        fh.write(" ".join(f"{x:.17g}" for x in basis.lam) + "\n")
        for row in basis.phi:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def load_basis(path, mass):
    """Read a basis cache written by :func:`save_basis`.

    ``mass`` must be the lumped areas of the same mesh (the cache stores
    only eigenvalues and eigenvectors).
    """
    with open(path, "r", encoding="ascii") as fh:
        n, k = (int(x) for x in fh.readline().split())
        lam = np.array([float(x) for x in fh.readline().split()])
        phi = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if phi.shape != (n, k) or lam.shape != (k,):
        raise ValueError(f"basis cache {path} is inconsistent with its header")
    if mass.shape[0] != n:
        raise ValueError(
            f"basis cache {path} has n={n} but the mesh has n={mass.shape[0]}"
        )
    return SpectralBasis(phi, lam, mass)
