"""Triangle meshes: representation, OFF/OBJ I/O, and metric derivations.

Indices are 0-based everywhere in memory and in files written by this
package; the 1-based face indices of OBJ input are converted at the
boundary. Meshes need not be closed or manifold. Degenerate triangles
(area below 1e-12 times the squared bounding-box diagonal) are rejected
when a mesh is constructed, because the cotangent Laplacian is undefined
on them.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import MeshError

DEGENERATE_REL_AREA = 1e-12


class TriangleMesh:
    """Immutable triangle mesh.

    Parameters
    ----------
    vertices : (n, 3) float array
        3D vertex positions, arbitrary length units.
    triangles : (f, 3) int array
        Ordered vertex-index triples, 0-based.

    Raises
    ------
    MeshError
        If an index is out of range, a triangle repeats a vertex, or a
        triangle is degenerate. Construction from a file reports the
        offending line.
    """

    def __init__(self, vertices, triangles, _path=None, _face_lines=None):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        t = np.ascontiguousarray(triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array", path=_path)
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError("triangles must be an (f, 3) array", path=_path)
        _validate_triangles(v, t, _path, _face_lines)
        v.setflags(write=False)
        t.setflags(write=False)
        self.vertices = v
        self.triangles = t

    @property
    def n(self):
        """Vertex count."""
        return self.vertices.shape[0]

    @property
    def triangle_count(self):
        return self.triangles.shape[0]

    def __repr__(self):
        return f"TriangleMesh(n={self.n}, triangles={self.triangle_count})"


@dataclass(frozen=True)
class EdgeSet:
    """Undirected edges of a triangulation, each listed once.

    ``edges`` is an (e, 2) int array with edges[i, 0] < edges[i, 1];
    ``lengths`` holds the Euclidean length of each edge.
    """

    edges: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        self.edges.setflags(write=False)
        self.lengths.setflags(write=False)

    def __len__(self):
        return self.edges.shape[0]


def _line_for_face(face_lines, i):
    if face_lines is None:
        return None
    return int(face_lines[i])


def _validate_triangles(v, t, path, face_lines):
    n = v.shape[0]
    if t.size:
        bad = np.nonzero((t < 0) | (t >= n))[0]
        if bad.size:
            i = int(bad[0] // 3) if t.ndim == 1 else int(bad[0])
            raise MeshError(
                f"vertex index out of range in triangle {i}: {tuple(t[i])} "
                f"(n={n})",
                path=path,
                line=_line_for_face(face_lines, i),
            )
        rep = np.nonzero(
            (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
        )[0]
        if rep.size:
            i = int(rep[0])
            raise MeshError(
                f"repeated vertex in triangle {i}: {tuple(t[i])}",
                path=path,
                line=_line_for_face(face_lines, i),
            )
        areas = _triangle_areas(v, t)
        span = v.max(axis=0) - v.min(axis=0)
        diag2 = float(span @ span)
        degen = np.nonzero(areas <= DEGENERATE_REL_AREA * diag2)[0]
        if degen.size:
            i = int(degen[0])
            raise MeshError(
                f"degenerate (zero-area) triangle {i}: {tuple(t[i])}",
                path=path,
                line=_line_for_face(face_lines, i),
            )


def _triangle_areas(v, t):
    a = v[t[:, 1]] - v[t[:, 0]]
    b = v[t[:, 2]] - v[t[:, 0]]
    return 0.5 * np.linalg.norm(np.cross(a, b), axis=1)


def triangle_areas(mesh):
    """Area of each triangle, shape (f,)."""
    return _triangle_areas(mesh.vertices, mesh.triangles)


def total_area(mesh):
    """Sum of all triangle areas."""
    return float(triangle_areas(mesh).sum())


def rescale_to_area(mesh, target_area):
    """Uniformly scaled copy of ``mesh`` with the requested total area."""
    if target_area <= 0:
        raise ValueError(f"target_area must be positive, got {target_area}")
    scale = np.sqrt(target_area / total_area(mesh))
    return TriangleMesh(mesh.vertices * scale, mesh.triangles)


def edge_set(mesh):
    """Undirected edge set of the triangulation with Euclidean lengths."""
    t = mesh.triangles
    pairs = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    pairs = np.sort(pairs, axis=1)
    edges = np.unique(pairs, axis=0)
    d = mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]]
    return EdgeSet(edges, np.linalg.norm(d, axis=1))


# ---------------------------------------------------------------------------
# file I/O


def load_mesh(path, format=None):
    """Read a triangle mesh from an OFF or OBJ file.

    ``format`` may be "OFF"/"OBJ"; when omitted it is inferred from the
    file extension. Parse problems raise :class:`MeshError` with the
    offending line number.
    """
    fmt = _resolve_format(path, format)
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise MeshError(f"cannot read mesh file: {exc}", path=path) from exc
    if fmt == "OFF":
        return _parse_off(lines, path)
    return _parse_obj(lines, path)


def save_mesh(mesh, path, format=None):
    """Write ``mesh`` as OFF or OBJ (0-based indices are converted for OBJ)."""
    fmt = _resolve_format(path, format)
    v, t = mesh.vertices, mesh.triangles
    out = []
    if fmt == "OFF":
        out.append("OFF")
        out.append(f"{mesh.n} {mesh.triangle_count} 0")
        for p in v:
            out.append(_fmt_floats(p))
        for tri in t:
            out.append(f"3 {tri[0]} {tri[1]} {tri[2]}")
    else:
        for p in v:
            out.append("v " + _fmt_floats(p))
        for tri in t:
            out.append(f"f {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(out) + "\n")


def _fmt_floats(values):
    return " ".join(f"{float(x):.17g}" for x in values)


def _resolve_format(path, format):
    if format is not None:
        fmt = format.upper()
        if fmt not in ("OFF", "OBJ"):
            raise ValueError(f"unsupported mesh format {format!r}")
        return fmt
    name = str(path).lower()
    if name.endswith(".off"):
        return "OFF"
    if name.endswith(".obj"):
        return "OBJ"
    raise ValueError(f"cannot infer mesh format from {path!r}; pass format=")


def _meaningful(lines):
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            yield lineno, text


def _parse_off(lines, path):
    it = _meaningful(lines)
    try:
        lineno, header = next(it)
    except StopIteration:
        raise MeshError("empty OFF file", path=path) from None
    tokens = header.split()
    if tokens[0] != "OFF":
        raise MeshError("missing OFF header", path=path, line=lineno)
    if len(tokens) >= 4:
        counts, counts_line = tokens[1:4], lineno
    else:
        try:
            counts_line, counts_text = next(it)
        except StopIteration:
            raise MeshError("missing OFF counts line", path=path) from None
        counts = counts_text.split()
    try:
        nv, nf = int(counts[0]), int(counts[1])
    except (ValueError, IndexError):
        raise MeshError(
            "counts line must be 'nv nf ne'", path=path, line=counts_line
        ) from None

    vertices = np.empty((nv, 3), np.float64)
    for i in range(nv):
        try:
            lineno, text = next(it)
        except StopIteration:
            raise MeshError(
                f"expected {nv} vertex lines, found {i}", path=path
            ) from None
        parts = text.split()
        if len(parts) < 3:
            raise MeshError("vertex line needs 3 coordinates", path=path, line=lineno)
        try:
            vertices[i] = [float(parts[0]), float(parts[1]), float(parts[2])]
        except ValueError:
            raise MeshError(
                f"bad vertex coordinate: {text!r}", path=path, line=lineno
            ) from None

    triangles = np.empty((nf, 3), np.int64)
    face_lines = np.empty(nf, np.int64)
    for i in range(nf):
        try:
            lineno, text = next(it)
        except StopIteration:
            raise MeshError(f"expected {nf} face lines, found {i}", path=path) from None
        parts = text.split()
        try:
            count = int(parts[0])
        except (ValueError, IndexError):
            raise MeshError(f"bad face line: {text!r}", path=path, line=lineno) from None
        if count != 3:
            raise MeshError(
                f"non-triangular face with {count} vertices", path=path, line=lineno
            )
        if len(parts) < 4:
            raise MeshError("face line needs 3 indices", path=path, line=lineno)
        try:
            triangles[i] = [int(parts[1]), int(parts[2]), int(parts[3])]
        except ValueError:
            raise MeshError(f"bad face index: {text!r}", path=path, line=lineno) from None
        face_lines[i] = lineno

    return TriangleMesh(vertices, triangles, _path=path, _face_lines=face_lines)


def _parse_obj(lines, path):
    vertices = []
    triangles = []
    face_lines = []
    warned = set()
    for lineno, text in _meaningful(lines):
        parts = text.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise MeshError(
                    "vertex line needs 3 coordinates", path=path, line=lineno
                )
            try:
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError:
                raise MeshError(
                    f"bad vertex coordinate: {text!r}", path=path, line=lineno
                ) from None
        elif tag == "f":
            if len(parts) != 4:
                raise MeshError(
                    f"non-triangular face with {len(parts) - 1} vertices",
                    path=path,
                    line=lineno,
                )
            try:
                # "i", "i/j", "i/j/k" forms all carry the vertex index first
                idx = [int(p.split("/", 1)[0]) for p in parts[1:]]
            except ValueError:
                raise MeshError(
                    f"bad face index: {text!r}", path=path, line=lineno
                ) from None
            if any(i < 1 for i in idx):
                raise MeshError(
                    f"face index must be positive (1-based): {text!r}",
                    path=path,
                    line=lineno,
                )
            triangles.append([i - 1 for i in idx])
            face_lines.append(lineno)
        else:
            if tag not in warned:
                warned.add(tag)
                warnings.warn(
                    f"{path}:{lineno}: ignoring OBJ directive {tag!r}", stacklevel=2
                )
    if not vertices:
        raise MeshError("no vertices in OBJ file", path=path)
    return TriangleMesh(
        np.asarray(vertices, np.float64),
        np.asarray(triangles, np.int64).reshape(-1, 3),
        _path=path,
        _face_lines=np.asarray(face_lines, np.int64),
    )
