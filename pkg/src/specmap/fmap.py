"""Functional-map algebra between two spectral bases.

Direction convention, fixed across the package: the pointwise map T sends
source vertices to target vertices, while the functional map C transfers
functions on the target to functions on the source. With A-orthonormal
bases the pseudo-inverse needed to express C collapses to Phi^T A, so no
dense pseudo-inverse is ever formed.

All operations are pure functions of immutable inputs. The per-vertex
argmin inside the map recovery runs in parallel over source vertices;
its tie rule (smallest target index) is order-free, so the result is
deterministic either way.
"""

from dataclasses import dataclass

import numpy as np

from . import sampling


@dataclass(frozen=True)
class FunctionalMap:
    """A k_M x k_N matrix mapping target-basis coefficients to source-basis
    coefficients."""

    C: np.ndarray

    def __post_init__(self):
        C = np.ascontiguousarray(self.C, dtype=np.float64)
        if C.ndim != 2 or C.shape[0] < 1 or C.shape[1] < 1:
            raise ValueError(f"functional map must be a 2-D matrix, got {C.shape}")
        if not np.isfinite(C).all():
            raise ValueError("functional map contains non-finite entries")
        object.__setattr__(self, "C", C)

    @property
    def k_M(self):
        return self.C.shape[0]

    @property
    def k_N(self):
        return self.C.shape[1]


@dataclass(frozen=True)
class PointMap:
    """Per-source-vertex target indices (a total map, not necessarily a
    bijection). ``n_target`` bounds the index range when known."""

    targets: np.ndarray
    n_target: int = None

    def __post_init__(self):
        t = np.ascontiguousarray(self.targets, dtype=np.int64)
        if t.ndim != 1:
            raise ValueError("point map targets must be a 1-D index array")
        if t.size and t.min() < 0:
            raise ValueError("point map contains negative indices")
        if self.n_target is not None and t.size and t.max() >= self.n_target:
            raise ValueError(
                f"point map index {t.max()} out of range [0, {self.n_target})"
            )
        object.__setattr__(self, "targets", t)

    def __len__(self):
        return self.targets.shape[0]


def pointmap_to_fmap(T, basis_M, basis_N, k_M, k_N):
    """Express a pointwise map as a k_M x k_N functional map.

    Computes (Phi_M^k)^T A_M G with G the T-selected rows of Phi_N^k; the
    permutation-style matrix of T is never materialized.
    """
    _check_k(k_M, basis_M, "source")
    _check_k(k_N, basis_N, "target")
    t = T.targets
    if t.shape[0] != basis_M.n:
        raise ValueError(
            f"point map covers {t.shape[0]} vertices, source mesh has {basis_M.n}"
        )
    if t.size and t.max() >= basis_N.n:
        raise ValueError(
            f"point map index {t.max()} out of range for target mesh n={basis_N.n}"
        )
    G = basis_N.phi[t, :k_N]
    C = (basis_M.phi[:, :k_M] * basis_M.mass[:, None]).T @ G
    return FunctionalMap(C)


def fmap_to_pointmap(fm, basis_M, basis_N, nn_mode="exact", source_subset=None,
                     width=sampling.DEFAULT_WIDTH):
    """Recover the pointwise map induced by a functional map.

    Each source vertex p goes to the target vertex q whose C-transformed
    embedding is nearest to the embedding of p; with exact search, ties
    go to the smallest q. ``source_subset`` restricts the queries to the
    given vertices (the result then has one entry per subset element).
    """
    k_M, k_N = fm.k_M, fm.k_N
    _check_k(k_M, basis_M, "source")
    _check_k(k_N, basis_N, "target")
    refs = basis_N.phi[:, :k_N] @ fm.C.T
    queries = basis_M.phi[:, :k_M]
    if source_subset is not None:
        queries = queries[np.asarray(source_subset, dtype=np.int64)]
    index = sampling.build_nn(refs, nn_mode, width)
    targets, _ = sampling.query_nn_batch(index, queries)
    return PointMap(targets, n_target=basis_N.n)


def orthogonality_energy(fm, k_max):
    """Sum over k <= k_max of ||C_k^T C_k - I||_F^2 / k, where C_k is the
    top-left k x k block. Zero exactly when every principal submatrix is
    orthonormal."""
    if not 1 <= k_max <= min(fm.k_M, fm.k_N):
        raise ValueError(
            f"k_max={k_max} out of range [1, {min(fm.k_M, fm.k_N)}]"
        )
    C = fm.C
    total = 0.0
    for k in range(1, k_max + 1):
        Ck = C[:k, :k]
        G = Ck.T @ Ck
        G = G - np.eye(k)
        total += float((G * G).sum()) / k
    return total


def icp_project(fm):
    """Nearest orthonormal matrix: U V^T from the SVD of C (all singular
    values forced to one). Requires a square map."""
    if fm.k_M != fm.k_N:
        raise ValueError(f"projection needs a square map, got {fm.C.shape}")
    U, _, Vt = np.linalg.svd(fm.C)
    return FunctionalMap(U @ Vt)


def transfer_function(fm, f, basis_M, basis_N):
    """Pull a function on the target shape back to the source shape:
    project onto the target basis, apply C, reconstruct on the source."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != basis_N.n:
        raise ValueError(
            f"function has {f.shape[0]} values, target mesh has {basis_N.n}"
        )
    _check_k(fm.k_M, basis_M, "source")
    _check_k(fm.k_N, basis_N, "target")
    coeffs = basis_N.phi[:, : fm.k_N].T @ (basis_N.mass * f)
    return basis_M.phi[:, : fm.k_M] @ (fm.C @ coeffs)


def perturb_fmap(fm, sigma, seed):
    """Add i.i.d. Gaussian noise of standard deviation ``sigma``,
    deterministic per seed."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    noise = np.random.default_rng(seed).standard_normal(fm.C.shape)
    return FunctionalMap(fm.C + sigma * noise)


def _check_k(k, basis, which):
    if not 1 <= k <= basis.k:
        raise ValueError(
            f"{which} size {k} exceeds the available basis size {basis.k}"
        )


# ---------------------------------------------------------------------------
# file formats: fmap = "k_M k_N" header then k_M rows; point map = one
# 0-based target index per line


def save_fmap(fm, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{fm.k_M} {fm.k_N}\n")
        for row in fm.C:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def load_fmap(path):
    with open(path, "r", encoding="ascii") as fh:
        k_M, k_N = (int(x) for x in fh.readline().split())
        C = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if C.shape != (k_M, k_N):
        raise ValueError(f"functional map file {path} disagrees with its header")
    return FunctionalMap(C)


def save_pointmap(pm, path):
    with open(path, "w", encoding="ascii") as fh:
        for t in pm.targets:
            fh.write(f"{int(t)}\n")


def load_pointmap(path, n_target=None):
    targets = np.loadtxt(path, dtype=np.int64, ndmin=1)
    return PointMap(targets, n_target=n_target)
