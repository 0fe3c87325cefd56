"""Iterative spectral upsampling of correspondences, plus the fixed-size
ICP baseline.

One refinement level does two things: recover the pointwise map induced
by the current functional map (a nearest-neighbor query between spectral
embeddings), then re-express that pointwise map as a functional map at
the next, larger size. Square mode grows both sides by ``step``;
rectangular mode grows rows by one and columns by a rate set from the
spectra (for partial-style slanted maps). The trace records, per size
level, the orthogonality energy of the current pointwise map expressed
at a fixed probe size.
"""

import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import sampling
from .fmap import (
    FunctionalMap,
    PointMap,
    fmap_to_pointmap,
    icp_project,
    orthogonality_energy,
    pointmap_to_fmap,
)

RANK_REL_TOL = 1e-9


@dataclass(frozen=True)
class RefineConfig:
    """Knobs of the upsampling loop; validated on use."""

    k0_M: int = 20
    k0_N: int = 20
    kmax_M: int = 120
    kmax_N: int = 120
    step: int = 1
    nn_mode: str = "exact"
    sample_count: int = 0
    seed: int = 0
    rectangular: bool = False
    rank_estimate_K: int = 100
    nn_width: int = sampling.DEFAULT_WIDTH

    def validate(self):
        if self.k0_M < 1 or self.k0_N < 1:
            raise ValueError("initial sizes must be at least 1")
        if self.k0_M > self.kmax_M or self.k0_N > self.kmax_N:
            raise ValueError(
                f"k0 ({self.k0_M}, {self.k0_N}) exceeds kmax "
                f"({self.kmax_M}, {self.kmax_N})"
            )
        if self.step < 1:
            raise ValueError(f"step must be >= 1, got {self.step}")
        if self.sample_count != 0 and self.sample_count < max(self.kmax_M, self.kmax_N):
            raise ValueError(
                f"sample_count must be 0 (dense) or >= max kmax "
                f"({max(self.kmax_M, self.kmax_N)}), got {self.sample_count}"
            )
        if self.nn_mode not in sampling.MODES:
            raise ValueError(f"nn_mode must be one of {sampling.MODES}")

    def to_dict(self):
        return asdict(self)


@dataclass
class RefineTrace:
    """Per-size-level records: (k_M, k_N, probe energy, elapsed millis)."""

    probe_k: int
    records: list = field(default_factory=list)

    def append(self, k_M, k_N, energy, millis):
        self.records.append(
            {"kM": int(k_M), "kN": int(k_N), "energy": float(energy),
             "millis": float(millis)}
        )

    def energies(self):
        return np.array([r["energy"] for r in self.records])

    def to_json(self):
        return list(self.records)

    def __len__(self):
        return len(self.records)


def estimate_rank(lambda_M, lambda_N, K):
    """Spectral rank estimate: the largest i <= K whose source eigenvalue
    sits below the largest of the first K target eigenvalues.

    Comparison uses a hair of relative slack so that identical spectra
    give K (exact float equality would exclude the last index); the
    result is clamped to at least 1.
    """
    lambda_M = np.asarray(lambda_M, dtype=np.float64)
    lambda_N = np.asarray(lambda_N, dtype=np.float64)
    if lambda_M.shape[0] < K or lambda_N.shape[0] < K:
        raise ValueError(
            f"rank estimate needs {K} eigenvalues per shape, got "
            f"{lambda_M.shape[0]} and {lambda_N.shape[0]}"
        )
    cap = float(lambda_N[:K].max())
    below = lambda_M[:K] < cap + RANK_REL_TOL * abs(cap)
    r = int(np.nonzero(below)[0][-1]) + 1 if below.any() else 0
    return max(r, 1)


def rectangular_updates(k_M, k_N, r):
    """Next (k_M, k_N) for rectangular growth: rows advance by one,
    columns by 1 + ceil(k_N (100 - r) / 100)."""
    if not 1 <= r <= 100:
        raise ValueError(f"rank estimate r must be in [1, 100], got {r}")
    grow = -((-k_N * (100 - r)) // 100)  # ceil for non-negative ints
    return k_M + 1, k_N + 1 + grow


def zoomout(init, basis_M, basis_N, cfg, probe_k=None, mesh_M=None, mesh_N=None):
    """Upsample an initial map to (kmax_M, kmax_N).

    ``init`` may be a FunctionalMap of size at least (k0_M, k0_N) or a
    PointMap (converted at the initial size first). With
    ``cfg.sample_count > 0`` the iterations run on FPS subsets of both
    shapes (meshes required) and only the final conversion is dense.
    Returns (final functional map, final dense pointwise map, trace).
    """
    cfg.validate()
    if basis_M.k < cfg.kmax_M or basis_N.k < cfg.kmax_N:
        raise ValueError(
            f"bases of size ({basis_M.k}, {basis_N.k}) are too small for "
            f"kmax ({cfg.kmax_M}, {cfg.kmax_N})"
        )
    if probe_k is None:
        probe_k = min(cfg.kmax_M, cfg.kmax_N)
    if probe_k > min(basis_M.k, basis_N.k):
        raise ValueError(f"probe size {probe_k} exceeds the bases")

    if isinstance(init, PointMap):
        C = pointmap_to_fmap(init, basis_M, basis_N, cfg.k0_M, cfg.k0_N).C
    elif isinstance(init, FunctionalMap):
        C = init.C
        if C.shape[0] < cfg.k0_M or C.shape[1] < cfg.k0_N:
            raise ValueError(
                f"initial map {C.shape} is smaller than k0 "
                f"({cfg.k0_M}, {cfg.k0_N})"
            )
        if C.shape[0] > cfg.kmax_M or C.shape[1] > cfg.kmax_N:
            raise ValueError(f"initial map {C.shape} exceeds kmax")
    else:
        raise TypeError(f"init must be a FunctionalMap or PointMap, got {type(init)}")

    rank = None
    if cfg.rectangular:
        rank = estimate_rank(basis_M.lam, basis_N.lam, cfg.rank_estimate_K)

    sub_M = sub_N = None
    if cfg.sample_count > 0:
        if mesh_M is None or mesh_N is None:
            raise ValueError("sub-sampled refinement needs mesh_M and mesh_N")
        # independent FPS per shape, seeds derived as (seed, seed + 1)
        sub_M = sampling.farthest_point_sample(mesh_M, cfg.sample_count, cfg.seed)
        sub_N = sampling.farthest_point_sample(mesh_N, cfg.sample_count, cfg.seed + 1)

    k_M, k_N = C.shape
    trace = RefineTrace(probe_k=probe_k)
    pm = None
    while True:
        t0 = time.perf_counter()
        if sub_M is None:
            pm = fmap_to_pointmap(
                FunctionalMap(C), basis_M, basis_N, cfg.nn_mode, width=cfg.nn_width
            )
            targets = pm.targets
            probe_C = pointmap_to_fmap(pm, basis_M, basis_N, probe_k, probe_k)
        else:
            positions = _subset_pointmap(
                C, basis_M, basis_N, sub_M.indices, sub_N.indices,
                cfg.nn_mode, cfg.nn_width,
            )
            targets = sub_N.indices[positions]
            probe_C = FunctionalMap(
                _subset_fmap(basis_M, basis_N, sub_M.indices, targets,
                             probe_k, probe_k)
            )
        energy = orthogonality_energy(probe_C, probe_k)
        trace.append(k_M, k_N, energy, (time.perf_counter() - t0) * 1e3)

        if k_M == cfg.kmax_M and k_N == cfg.kmax_N:
            break
        k_M, k_N = _next_sizes(k_M, k_N, cfg, rank)
        if sub_M is None:
            C = pointmap_to_fmap(pm, basis_M, basis_N, k_M, k_N).C
        else:
            C = _subset_fmap(basis_M, basis_N, sub_M.indices, targets, k_M, k_N)

    final = FunctionalMap(C)
    if sub_M is not None:
        # the one dense conversion of the whole run
        pm = fmap_to_pointmap(final, basis_M, basis_N, cfg.nn_mode,
                              width=cfg.nn_width)
    return final, pm, trace


def icp_refine(init, basis_M, basis_N, iters, probe_k=None, nn_mode="exact",
               nn_width=sampling.DEFAULT_WIDTH):
    """Fixed-dimension baseline: alternate pointwise recovery,
    re-expression at the same size, and projection onto orthonormal
    matrices, for ``iters`` iterations."""
    if init.k_M != init.k_N:
        raise ValueError(f"this refinement needs a square init, got {init.C.shape}")
    k = init.k_M
    if basis_M.k < k or basis_N.k < k:
        raise ValueError(f"bases too small for size-{k} refinement")
    if probe_k is None:
        probe_k = k
    if probe_k > min(basis_M.k, basis_N.k):
        raise ValueError(f"probe size {probe_k} exceeds the bases")
    if iters < 1:
        raise ValueError("iters must be >= 1")

    fm = init
    pm = None
    trace = RefineTrace(probe_k=probe_k)
    for _ in range(iters):
        t0 = time.perf_counter()
        pm = fmap_to_pointmap(fm, basis_M, basis_N, nn_mode, width=nn_width)
        fm = icp_project(pointmap_to_fmap(pm, basis_M, basis_N, k, k))
        probe_C = pointmap_to_fmap(pm, basis_M, basis_N, probe_k, probe_k)
        energy = orthogonality_energy(probe_C, probe_k)
        trace.append(k, k, energy, (time.perf_counter() - t0) * 1e3)
    return fm, pm, trace


def _next_sizes(k_M, k_N, cfg, rank):
    if cfg.rectangular:
        nM, nN = rectangular_updates(k_M, k_N, rank)
    else:
        nM, nN = k_M + cfg.step, k_N + cfg.step
    # the last step clamps so the final size is exactly kmax
    return min(nM, cfg.kmax_M), min(nN, cfg.kmax_N)


def _subset_pointmap(C, basis_M, basis_N, idx_M, idx_N, nn_mode, width):
    """NN recovery restricted to sampled vertices. Returned targets are
    positions into ``idx_N``."""
    k_M, k_N = C.shape
    refs = basis_N.phi[idx_N, :k_N] @ C.T
    queries = basis_M.phi[idx_M, :k_M]
    index = sampling.build_nn(refs, nn_mode, width)
    targets, _ = sampling.query_nn_batch(index, queries)
    return targets


def _subset_fmap(basis_M, basis_N, idx_M, target_vertices, k_M, k_N):
    """Least-squares re-expression from sampled correspondences; the
    A-weighted closed form needs all vertices, so samples use lstsq
    (well-posed because sample_count >= max kmax)."""
    src = basis_M.phi[idx_M, :k_M]
    dst = basis_N.phi[target_vertices, :k_N]
    return np.linalg.lstsq(src, dst, rcond=None)[0]
