"""Core mesh type, rigid transforms and global mesh measures.

Meshes are shared-vertex triangle lists: a float64 ``(n, 3)`` vertex array
and an int64 ``(m, 3)`` face array.  Faces are counterclockwise seen from
outside, so ``(b - a) x (c - a)`` is the outward normal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

WELD_TOL = 1e-9


class MeshError(ValueError):
    """Malformed mesh data (bad shape, index out of range, non-finite)."""


class TopologyError(ValueError):
    """Operation needs a closed edge-manifold mesh and did not get one."""


class TransformError(ValueError):
    pass


class ParameterError(ValueError):
    """A named parameter is outside its documented range."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class IndexedMesh:
    vertices: np.ndarray
    faces: np.ndarray
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "faces", _frozen(f))
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def check(self, name: str = "mesh") -> "IndexedMesh":
        """Raise MeshError unless every face index is in range."""
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise MeshError(f"{name}: face index out of bounds for {len(self.vertices)} vertices")
        return self

    def triangles(self) -> np.ndarray:
        """Face corner coordinates, shape ``(m, 3, 3)``."""
        return self.vertices[self.faces]

    def with_meta(self, **items) -> "IndexedMesh":
        meta = dict(self.meta)
        meta.update(items)
        return IndexedMesh(self.vertices, self.faces, meta)

    def flipped(self) -> "IndexedMesh":
        return IndexedMesh(self.vertices, self.faces[:, ::-1], self.meta)

    def same_as(self, other: "IndexedMesh") -> bool:
        """Bit-exact equality of vertices and faces."""
        return (
            self.vertices.shape == other.vertices.shape
            and self.faces.shape == other.faces.shape
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.faces, other.faces)
        )


def empty_mesh() -> IndexedMesh:
    return IndexedMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))


def unit_cube() -> IndexedMesh:
    """Axis-aligned cube [0,1]^3, 8 vertices, 12 outward triangles."""
    v = np.array([[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)], dtype=float)
    f = [
        [0, 2, 3], [0, 3, 1],  # z=0
        [4, 5, 7], [4, 7, 6],  # z=1
        [0, 1, 5], [0, 5, 4],  # y=0
        [2, 6, 7], [2, 7, 3],  # y=1
        [0, 4, 6], [0, 6, 2],  # x=0
        [1, 3, 7], [1, 7, 5],  # x=1
    ]
    return IndexedMesh(v, f)


def box(lo, hi) -> IndexedMesh:
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    cube = unit_cube()
    return IndexedMesh(lo + cube.vertices * (hi - lo), cube.faces)


@dataclass(frozen=True)
class Transform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: float = 1.0

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.allclose(r @ r.T, np.eye(3), rtol=0, atol=1e-9):
            raise TransformError("rotation is not orthonormal")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise TransformError(f"scale must be positive, got {self.scale}")
        if not np.all(np.isfinite(t)):
            raise TransformError("translation must be finite")
        object.__setattr__(self, "rotation", _frozen(r.copy()))
        object.__setattr__(self, "translation", _frozen(t.copy()))

    @classmethod
    def translate(cls, offset) -> "Transform":
        return cls(translation=offset)

    @classmethod
    def about_axis(cls, axis, angle: float) -> "Transform":
        """Rotation by ``angle`` radians about ``axis`` (Rodrigues)."""
        k = np.asarray(axis, float)
        k = k / np.linalg.norm(k)
        K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
        r = np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K
        return cls(rotation=r)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.scale * (np.asarray(points, float) @ self.rotation.T) + self.translation


def merge(meshes: Iterable[IndexedMesh]) -> IndexedMesh:
    """Concatenate meshes without welding; face order follows input order."""
    verts, faces = [], []
    offset = 0
    for i, m in enumerate(meshes):
        m.check(f"merge input {i}")
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += len(m.vertices)
    if not verts:
        return empty_mesh()
    return IndexedMesh(np.concatenate(verts), np.concatenate(faces))


def apply_transform(mesh: IndexedMesh, t: Transform) -> IndexedMesh:
    if not isinstance(t, Transform):
        raise TransformError("expected a Transform")
    if t.scale == 1.0 and not t.translation.any() and np.array_equal(t.rotation, np.eye(3)):
        return IndexedMesh(mesh.vertices.copy(), mesh.faces, mesh.meta)
    return IndexedMesh(t.apply(mesh.vertices), mesh.faces, mesh.meta)


def _require_finite(mesh: IndexedMesh):
    if not np.all(np.isfinite(mesh.vertices)):
        bad = int(np.argwhere(~np.isfinite(mesh.vertices))[0, 0])
        raise MeshError(f"non-finite coordinate at vertex {bad}")


def face_cross(mesh: IndexedMesh) -> np.ndarray:
    """Unnormalized face normals (b - a) x (c - a)."""
    tri = mesh.triangles()
    return np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])


def surface_area(mesh: IndexedMesh) -> float:
    _require_finite(mesh)
    if not mesh.n_faces:
        return 0.0
    return float(np.linalg.norm(face_cross(mesh), axis=1).sum() / 2)


def degenerate_mask(mesh: IndexedMesh, rel: float = 1e-12) -> np.ndarray:
    """Faces with a repeated index or area below ``rel`` times the squared longest edge."""
    f = mesh.faces
    if not len(f):
        return np.zeros(0, dtype=bool)
    repeated = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
    tri = mesh.triangles()
    edges = tri - np.roll(tri, -1, axis=1)
    longest = np.max(np.einsum("ijk,ijk->ij", edges, edges), axis=1)
    cross = np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    return repeated | ~(cross > rel * longest)


def face_volumes(mesh: IndexedMesh) -> np.ndarray:
    tri = mesh.triangles()
    return np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])) / 6.0


def signed_volume(mesh: IndexedMesh) -> float:
    """Divergence-theorem volume; positive for outward-oriented closed meshes."""
    if not mesh.n_faces:
        return 0.0
    return float(face_volumes(mesh).sum())


def weld_map(vertices: np.ndarray, tol: float = WELD_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Group vertices whose coordinates quantize to the same ``tol`` cell.

    Returns ``(keep, remap)``: indices of the representative (first) vertex of
    each group in first-occurrence order, and old index -> new index.
    """
    if len(vertices) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    keys = np.round(np.asarray(vertices) / tol)
    keys[keys == 0] = 0.0  # -0.0 and 0.0 must hash alike
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    # renumber groups by first occurrence so output order follows input order
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return first[order], rank[inverse]


def weld(mesh: IndexedMesh, tol: float = WELD_TOL, drop_collapsed: bool = True) -> IndexedMesh:
    """Merge coincident vertices; faces with repeated indices are dropped."""
    keep, remap = weld_map(mesh.vertices, tol)
    faces = remap[mesh.faces] if mesh.n_faces else mesh.faces
    if drop_collapsed and len(faces):
        ok = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
        faces = faces[ok]
    return IndexedMesh(mesh.vertices[keep], faces, mesh.meta)


def edge_table(faces: np.ndarray):
    """Unique undirected edges and per-edge face counts.

    Returns ``(edges, counts, inverse)`` where ``inverse`` maps each of the
    ``3m`` half-edges (face-major, corners 01, 12, 20) to its edge row.
    """
    half = np.stack([faces, np.roll(faces, -1, axis=1)], axis=2).reshape(-1, 2)
    und = np.sort(half, axis=1)
    if len(und) == 0:
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    # scalar keys sort far faster than row-wise unique
    base = np.int64(und.max()) + 1
    keys, inverse, counts = np.unique(und[:, 0] * base + und[:, 1], return_inverse=True, return_counts=True)
    edges = np.stack([keys // base, keys % base], axis=1)
    return edges, counts, inverse.reshape(-1)


def _closed_welded(mesh: IndexedMesh, tol: float) -> tuple[IndexedMesh, np.ndarray]:
    _require_finite(mesh)
    w = weld(mesh, tol)
    edges, counts, _ = edge_table(w.faces)
    bad = np.flatnonzero(counts != 2)
    if len(bad):
        a, b = edges[bad[0]]
        raise TopologyError(
            f"edge ({w.vertices[a].tolist()}, {w.vertices[b].tolist()}) bounds "
            f"{counts[bad[0]]} faces; mesh is not closed edge-manifold"
        )
    return w, edges


def euler_characteristic(mesh: IndexedMesh, tol: float = WELD_TOL) -> int:
    """V - E + F of the welded mesh; V counts only vertices used by faces."""
    w, edges = _closed_welded(mesh, tol)
    used = np.unique(w.faces)
    return int(len(used) - len(edges) + len(w.faces))


def corner_angles(mesh: IndexedMesh) -> np.ndarray:
    """Interior angle at each face corner, shape ``(m, 3)``."""
    tri = mesh.triangles()
    out = np.empty(mesh.faces.shape)
    for k in range(3):
        p = tri[:, k]
        e1 = tri[:, (k + 1) % 3] - p
        e2 = tri[:, (k + 2) % 3] - p
        out[:, k] = np.arctan2(np.linalg.norm(np.cross(e1, e2), axis=1), np.einsum("ij,ij->i", e1, e2))
    return out


def angle_defects(mesh: IndexedMesh) -> np.ndarray:
    """2*pi minus the incident face angles, per vertex, in radians."""
    sums = np.bincount(mesh.faces.ravel(), weights=corner_angles(mesh).ravel(), minlength=mesh.n_vertices)
    return 2 * np.pi - sums


def total_curvature(mesh: IndexedMesh, tol: float = WELD_TOL) -> float:
    """Sum of angle defects divided by 2*pi; equals the Euler characteristic."""
    w, _ = _closed_welded(mesh, tol)
    used = np.unique(w.faces)
    return float(angle_defects(w)[used].sum() / (2 * np.pi))


def connected_components(faces: np.ndarray, n_vertices: int) -> tuple[int, np.ndarray]:
    """Label faces by vertex connectivity."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components as cc

    m = len(faces)
    if m == 0:
        return 0, np.zeros(0, dtype=np.int64)
    rows = np.repeat(np.arange(m), 3)
    g = coo_matrix((np.ones(3 * m), (rows, m + faces.ravel())), shape=(m + n_vertices, m + n_vertices))
    n, labels = cc(g, directed=False)
    face_labels = labels[:m]
    _, compact = np.unique(face_labels, return_inverse=True)
    return int(compact.max() + 1), compact
