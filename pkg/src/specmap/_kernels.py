"""Hot numeric kernels: brute-force NN, bounded kd-tree NN, and FPS.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy
fallback with identical semantics. `_accel` decides which one backs the
public entry points (``nearest_scan``, ``kdtree_query_batch``,
``farthest_point_indices``). Both paths are deterministic; ties are broken
toward the smallest point index.
"""

from collections import namedtuple

import numpy as np

from ._accel import USING_NUMBA, njit, prange

# Query-side traversal stack; deep enough for width*depth pushes at desk
# scale. When exceeded, far branches are dropped (legal for the bounded
# approximate contract, unreachable for realistic widths).
_STACK_CAP = 4096

KDTree = namedtuple(
    "KDTree", ["axis", "split", "left", "right", "start", "end", "perm", "points"]
)


# ---------------------------------------------------------------------------
# pure-numpy implementations


def _nn_scan_numpy(points, queries):
    m, k = points.shape
    nq = queries.shape[0]
    idx = np.empty(nq, np.int64)
    d2 = np.empty(nq, np.float64)
    # chunk so the (chunk, m, k) temporary stays around 64 MB
    chunk = max(1, int(8_000_000 // max(1, m * k)))
    for s in range(0, nq, chunk):
        q = queries[s : s + chunk]
        diff = q[:, None, :] - points[None, :, :]
        dist = np.einsum("cmk,cmk->cm", diff, diff)
        best = np.argmin(dist, axis=1)
        idx[s : s + chunk] = best
        d2[s : s + chunk] = dist[np.arange(best.shape[0]), best]
    return idx, d2


def _fps_numpy(coords, count, start):
    n = coords.shape[0]
    chosen = np.empty(count, np.int64)
    chosen[0] = start
    mind2 = np.einsum("ij,ij->i", coords - coords[start], coords - coords[start])
    mind2[start] = -1.0  # never re-picked
    for t in range(1, count):
        nxt = int(np.argmax(mind2))
        chosen[t] = nxt
        diff = coords - coords[nxt]
        d2 = np.einsum("ij,ij->i", diff, diff)
        np.minimum(mind2, d2, out=mind2)
        mind2[nxt] = -1.0
    return chosen


def _kd_query_one_numpy(tree, q, width):
    axis, split, left, right, start, end, perm, points = tree
    best_d2 = np.inf
    best_i = -1
    leaves = 0
    stack = [(0, 0.0)]
    while stack and leaves < width:
        node, margin2 = stack.pop()
        if margin2 >= best_d2:
            continue
        while left[node] != -1:
            ax = axis[node]
            diff = q[ax] - split[node]
            if diff < 0.0:
                near, far = left[node], right[node]
            else:
                near, far = right[node], left[node]
            if diff * diff < best_d2:
                stack.append((far, diff * diff))
            node = near
        sel = perm[start[node] : end[node]]
        d2 = np.einsum("ij,ij->i", points[sel] - q, points[sel] - q)
        j = int(np.argmin(d2))
        if d2[j] < best_d2 or (d2[j] == best_d2 and sel[j] < best_i):
            best_d2 = float(d2[j])
            best_i = int(sel[j])
        leaves += 1
    return best_i, best_d2


def _kd_query_batch_numpy(tree, queries, width):
    nq = queries.shape[0]
    idx = np.empty(nq, np.int64)
    d2 = np.empty(nq, np.float64)
    for i in range(nq):
        idx[i], d2[i] = _kd_query_one_numpy(tree, queries[i], width)
    return idx, d2


# ---------------------------------------------------------------------------
# numba implementations

_nn_scan_numba = None
_fps_numba = None
_kd_query_batch_numba = None

if USING_NUMBA:

    @njit(parallel=True, cache=True)
    def _nn_scan_numba(points, queries):  # noqa: F811
        m, k = points.shape
        nq = queries.shape[0]
        idx = np.empty(nq, np.int64)
        d2 = np.empty(nq, np.float64)
        for i in prange(nq):
            best = np.inf
            bi = -1
            for j in range(m):
                d = 0.0
                for c in range(k):
                    t = queries[i, c] - points[j, c]
                    d += t * t
                if d < best:
                    best = d
                    bi = j
            idx[i] = bi
            d2[i] = best
        return idx, d2

    @njit(cache=True)
    def _fps_numba(coords, count, start):  # noqa: F811
        n, dim = coords.shape
        chosen = np.empty(count, np.int64)
        chosen[0] = start
        mind2 = np.empty(n, np.float64)
        for i in range(n):
            d = 0.0
            for c in range(dim):
                t = coords[i, c] - coords[start, c]
                d += t * t
            mind2[i] = d
        mind2[start] = -1.0
        for t in range(1, count):
            nxt = 0
            best = -np.inf
            for i in range(n):
                if mind2[i] > best:
                    best = mind2[i]
                    nxt = i
            chosen[t] = nxt
            for i in range(n):
                d = 0.0
                for c in range(dim):
                    u = coords[i, c] - coords[nxt, c]
                    d += u * u
                if d < mind2[i]:
                    mind2[i] = d
            mind2[nxt] = -1.0
        return chosen

    @njit(cache=True)
    def _kd_query_one_numba(
        axis, split, left, right, start, end, perm, points, q, width
    ):
        best_d2 = np.inf
        best_i = -1
        leaves = 0
        stack_node = np.empty(_STACK_CAP, np.int64)
        stack_margin = np.empty(_STACK_CAP, np.float64)
        sp = 0
        stack_node[sp] = 0
        stack_margin[sp] = 0.0
        sp += 1
        dim = points.shape[1]
        while sp > 0 and leaves < width:
            sp -= 1
            node = stack_node[sp]
            if stack_margin[sp] >= best_d2:
                continue
            while left[node] != -1:
                ax = axis[node]
                diff = q[ax] - split[node]
                if diff < 0.0:
                    near = left[node]
                    far = right[node]
                else:
                    near = right[node]
                    far = left[node]
                m2 = diff * diff
                if m2 < best_d2 and sp < _STACK_CAP:
                    stack_node[sp] = far
                    stack_margin[sp] = m2
                    sp += 1
                node = near
            for t in range(start[node], end[node]):
                j = perm[t]
                d = 0.0
                for c in range(dim):
                    u = q[c] - points[j, c]
                    d += u * u
                if d < best_d2 or (d == best_d2 and j < best_i):
                    best_d2 = d
                    best_i = j
            leaves += 1
        return best_i, best_d2

    @njit(parallel=True, cache=True)
    def _kd_query_batch_numba(
        axis, split, left, right, start, end, perm, points, queries, width
    ):
        nq = queries.shape[0]
        idx = np.empty(nq, np.int64)
        d2 = np.empty(nq, np.float64)
        for i in prange(nq):
            bi, bd = _kd_query_one_numba(
                axis, split, left, right, start, end, perm, points, queries[i], width
            )
            idx[i] = bi
            d2[i] = bd
        return idx, d2


# ---------------------------------------------------------------------------
# kd-tree construction (shared, numpy)


def kdtree_build(points, leafsize=32):
    """Array-based kd-tree over ``points`` (m, k), median split on the
    widest axis. Returns a :class:`KDTree` tuple of flat node arrays."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    m = points.shape[0]
    if m < 1:
        raise ValueError("kd-tree needs at least one point")
    perm = np.arange(m, dtype=np.int64)
    axis, split = [], []
    left, right = [], []
    start, end = [], []

    def new_node():
        axis.append(-1)
        split.append(0.0)
        left.append(-1)
        right.append(-1)
        start.append(0)
        end.append(0)
        return len(axis) - 1

    stack = [(new_node(), 0, m)]
    while stack:
        node, lo, hi = stack.pop()
        if hi - lo <= leafsize:
            start[node] = lo
            end[node] = hi
            continue
        sub = points[perm[lo:hi]]
        ax = int(np.argmax(sub.max(axis=0) - sub.min(axis=0)))
        mid = (hi - lo) // 2
        order = np.argpartition(sub[:, ax], mid)
        perm[lo:hi] = perm[lo:hi][order]
        axis[node] = ax
        split[node] = float(points[perm[lo + mid], ax])
        lnode = new_node()
        rnode = new_node()
        left[node] = lnode
        right[node] = rnode
        stack.append((lnode, lo, lo + mid))
        stack.append((rnode, lo + mid, hi))

    return KDTree(
        np.asarray(axis, np.int64),
        np.asarray(split, np.float64),
        np.asarray(left, np.int64),
        np.asarray(right, np.int64),
        np.asarray(start, np.int64),
        np.asarray(end, np.int64),
        perm,
        points,
    )


# ---------------------------------------------------------------------------
# public dispatch


def nearest_scan(points, queries):
    """Exact nearest neighbor of each query row among ``points`` rows.

    Returns (indices, squared distances). The true argmin is returned;
    equal distances resolve to the smallest point index.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    if USING_NUMBA:
        return _nn_scan_numba(points, queries)
    return _nn_scan_numpy(points, queries)


def kdtree_query_batch(tree, queries, width):
    """Approximate NN via bounded backtracking: at most ``width`` leaves
    of the tree are scanned per query. Returns (indices, squared
    distances) of the best candidates found."""
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    if USING_NUMBA:
        return _kd_query_batch_numba(*tree, queries, width)
    return _kd_query_batch_numpy(tree, queries, width)


def farthest_point_indices(coords, count, start):
    """Greedy Euclidean farthest-point selection of ``count`` rows of
    ``coords`` beginning at row ``start``."""
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    if USING_NUMBA:
        return _fps_numba(coords, count, start)
    return _fps_numpy(coords, count, start)
