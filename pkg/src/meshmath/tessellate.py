"""Generators: parametric grids, offset shells, tubes, solids of revolution,
polyhedra and voxel bricks.  Every generator is deterministic."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geomcore import IndexedMesh, Transform, apply_transform, edge_table, merge

SEAMS = ("open", "u_periodic", "v_periodic", "u_periodic_flipped")
GOLDEN = (1 + 5 ** 0.5) / 2


class GenerationError(ValueError):
    pass


class ThickenError(GenerationError):
    pass


class PathError(GenerationError):
    pass


class ProfileError(GenerationError):
    pass


class VoxelError(GenerationError):
    pass


# ---------------------------------------------------------------- patches

@dataclass(frozen=True)
class ParametricPatch:
    """A map (u, v) -> R^3 sampled on a closed rectangular domain.

    ``fn`` is called with broadcastable arrays ``u`` and ``v`` and returns the
    three coordinate arrays (a tuple or a stacked array with a leading axis of
    length 3).  For ``u_periodic_flipped`` the map must satisfy
    ``fn(u_max, v) == fn(u_min, v_min + v_max - v)``, as a Moebius band does.
    """

    fn: Callable
    u_range: tuple[float, float]
    v_range: tuple[float, float]
    nu: int = 32
    nv: int = 32
    seam: str = "open"

    def __post_init__(self):
        if self.nu < 2 or self.nv < 2:
            raise GenerationError(f"grid resolution must be >= 2, got {self.nu}x{self.nv}")
        if self.seam not in SEAMS:
            raise GenerationError(f"unknown seam {self.seam!r}; expected one of {SEAMS}")

    def evaluate(self, u, v) -> np.ndarray:
        out = self.fn(np.asarray(u, float), np.asarray(v, float))
        x, y, z = np.broadcast_arrays(*out)
        return np.stack([x, y, z], axis=-1).astype(float)

    def grid(self, nu: int | None = None, nv: int | None = None):
        nu = nu or self.nu
        nv = nv or self.nv
        us = np.linspace(*self.u_range, nu)
        vs = np.linspace(*self.v_range, nv)
        pts = self.evaluate(us[:, None], vs[None, :])
        bad = ~np.all(np.isfinite(pts), axis=-1)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise GenerationError(f"patch map not finite at (u, v) = ({us[i]!r}, {vs[j]!r})")
        return us, vs, pts


def _grid_index(nu: int, nv: int, seam: str, pts: np.ndarray, tol: float = 1e-9):
    """Vertex ids for an nu x nv sample grid after seam welding and pole collapse.

    Returns the id grid plus the boolean mask of grid samples sitting on a
    collapsed boundary line.
    """
    idx = np.arange(nu * nv).reshape(nu, nv)
    if seam == "u_periodic":
        idx[-1, :] = idx[0, :]
    elif seam == "v_periodic":
        idx[:, -1] = idx[:, 0]
    elif seam == "u_periodic_flipped":
        idx[-1, :] = idx[0, ::-1]

    collapsed = np.zeros((nu, nv), dtype=bool)
    for line in (np.s_[0, :], np.s_[-1, :], np.s_[:, 0], np.s_[:, -1]):
        p = pts[line]
        if np.abs(p - p[0]).max() <= tol:
            first = idx[line][0]
            idx[line] = first
            collapsed[line] = True
    # periodic copies of a collapsed sample point to the collapsed id too
    for _ in range(2):
        idx = np.take(idx.ravel(), idx)
    return idx, collapsed


def _grid_faces(idx: np.ndarray) -> np.ndarray:
    a = idx[:-1, :-1]
    b = idx[1:, :-1]
    c = idx[1:, 1:]
    d = idx[:-1, 1:]
    t1 = np.stack([a, b, c], axis=-1).reshape(-1, 3)
    t2 = np.stack([a, c, d], axis=-1).reshape(-1, 3)
    faces = np.stack([t1, t2], axis=1).reshape(-1, 3)
    ok = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
    return faces[ok]


def _compact(points: np.ndarray, faces: np.ndarray):
    used = np.unique(faces)
    remap = np.full(len(points), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return points[used], remap[faces], used, remap


def sample_patch(p: ParametricPatch) -> IndexedMesh:
    """Triangulate the patch grid, row-major in u then v.

    Periodic seams are welded by index, boundary lines that collapse to a
    single point (poles) become one vertex, and the triangles that collapse
    with them are dropped.
    """
    _, _, pts = p.grid()
    idx, _ = _grid_index(p.nu, p.nv, p.seam, pts)
    faces = _grid_faces(idx)
    verts, faces, _, _ = _compact(pts.reshape(-1, 3), faces)
    return IndexedMesh(verts, faces)


def _grid_normals(p: ParametricPatch, us, vs, collapsed):
    """Unit normals along du x dv from finite differences."""
    hu = 1e-6 * (p.u_range[1] - p.u_range[0])
    hv = 1e-6 * (p.v_range[1] - p.v_range[0])
    U, V = np.meshgrid(us, vs, indexing="ij")
    u_wraps = p.seam in ("u_periodic", "u_periodic_flipped")
    v_wraps = p.seam == "v_periodic"

    def partial(U, V, h, along_u, wraps):
        X = U if along_u else V
        lo, hi = (p.u_range if along_u else p.v_range)
        fwd = X + h
        bwd = X - h
        if not wraps:
            fwd = np.minimum(fwd, hi)
            bwd = np.maximum(bwd, lo)
        if along_u:
            d = p.evaluate(fwd, V) - p.evaluate(bwd, V)
        else:
            d = p.evaluate(U, fwd) - p.evaluate(U, bwd)
        return d / (fwd - bwd)[..., None]

    def normals_at(U, V):
        du = partial(U, V, hu, True, u_wraps)
        dv = partial(U, V, hv, False, v_wraps)
        n = np.cross(du, dv)
        size = np.linalg.norm(n, axis=-1)
        scale = np.linalg.norm(du, axis=-1) * np.linalg.norm(dv, axis=-1)
        good = size > 1e-9 * np.maximum(scale, 1e-300)
        good &= size > 1e-300
        with np.errstate(invalid="ignore", divide="ignore"):
            n = n / size[..., None]
        return n, good

    n, good = normals_at(U, V)
    # on collapsed lines, take the normal a hair inside the domain
    if collapsed.any():
        du = (us[1] - us[0]) * 1e-3
        dv = (vs[1] - vs[0]) * 1e-3
        Ui = U.copy()
        Vi = V.copy()
        Ui[0, :] += du
        Ui[-1, :] -= du
        Vi[:, 0] += dv
        Vi[:, -1] -= dv
        Uc = np.where(collapsed, Ui, U)
        Vc = np.where(collapsed, Vi, V)
        nc, goodc = normals_at(Uc, Vc)
        n = np.where(collapsed[..., None], nc, n)
        good = np.where(collapsed, goodc, good)
    bad = ~good
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ThickenError(f"surface normal vanishes at (u, v) = ({us[i]!r}, {vs[j]!r})")
    return n


def _vertex_normals(idx, sample_normals, n_ids):
    acc = np.zeros((n_ids, 3))
    np.add.at(acc, idx.ravel(), sample_normals.reshape(-1, 3))
    size = np.linalg.norm(acc, axis=1)
    return acc, size


def thicken(p: ParametricPatch, thickness: float) -> IndexedMesh:
    """Closed shell around the patch, ``thickness/2`` to either side.

    Open boundaries are sealed with rim walls.  A ``u_periodic_flipped``
    patch (one-sided surface) is walked twice around in u; the single offset
    sheet over the doubled domain covers both sides and the rim wall joins
    its two boundary curves, giving one closed orientable surface.
    """
    if not thickness > 0:
        raise ThickenError(f"thickness must be positive, got {thickness}")
    half = thickness / 2
    if p.seam == "u_periodic_flipped":
        return _thicken_flipped(p, half)

    us, vs, pts = p.grid()
    idx, collapsed = _grid_index(p.nu, p.nv, p.seam, pts)
    sample_n = _grid_normals(p, us, vs, collapsed)
    acc, size = _vertex_normals(idx, sample_n, p.nu * p.nv)
    faces = _grid_faces(idx)
    base, faces, used, _ = _compact(pts.reshape(-1, 3), faces)
    acc = acc[used]
    size = size[used]
    if (size < 1e-6).any():
        k = used[np.argmin(size)]
        raise ThickenError(f"normals cancel at grid sample {divmod(int(k), p.nv)}")
    normals = acc / size[:, None]

    n = len(base)
    verts = np.concatenate([base + half * normals, base - half * normals])
    parts = [faces, faces[:, ::-1] + n]
    edges, counts, inverse = edge_table(faces)
    half_edges = np.stack([faces, np.roll(faces, -1, axis=1)], axis=2).reshape(-1, 2)
    rim = half_edges[counts[inverse] == 1]
    if len(rim):
        a, b = rim[:, 0], rim[:, 1]
        w1 = np.stack([b, a, a + n], axis=1)
        w2 = np.stack([b, a + n, b + n], axis=1)
        parts.append(np.stack([w1, w2], axis=1).reshape(-1, 3))
    return IndexedMesh(verts, np.concatenate(parts))


def _thicken_flipped(p: ParametricPatch, half: float) -> IndexedMesh:
    u0, u1 = p.u_range
    span = u1 - u0
    doubled = ParametricPatch(p.fn, (u0, u0 + 2 * span), p.v_range, 2 * (p.nu - 1) + 1, p.nv, "u_periodic")
    us, vs, pts = doubled.grid()
    nu, nv = doubled.nu, doubled.nv
    idx, collapsed = _grid_index(nu, nv, "u_periodic", pts)
    if collapsed.any():
        raise ThickenError("flipped-seam patch must not have collapsed boundary lines")
    normals = _grid_normals(doubled, us, vs, collapsed)
    cols = nu - 1
    sheet = (pts + half * normals)[:cols].reshape(-1, 3)
    faces = _grid_faces(idx)
    # rim wall: sample (i, v_min) pairs with (i + half-turn, v_max), the same
    # base point offset to the other side
    turn = p.nu - 1
    i = np.arange(cols)
    a = idx[i, 0]
    b = idx[(i + 1) % cols, 0]
    a2 = idx[(i + turn) % cols, nv - 1]
    b2 = idx[(i + 1 + turn) % cols, nv - 1]
    w1 = np.stack([b, a, a2], axis=1)
    w2 = np.stack([b, a2, b2], axis=1)
    wall = np.stack([w1, w2], axis=1).reshape(-1, 3)
    return IndexedMesh(sheet, np.concatenate([faces, wall]))


# ------------------------------------------------------------------ tubes

@dataclass(frozen=True, eq=False)
class Polyline3:
    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 3)
        if self.closed and len(pts) > 1 and np.linalg.norm(pts[-1] - pts[0]) <= 1e-12:
            pts = pts[:-1]
        if len(pts) < 2 or (self.closed and len(pts) < 3):
            raise PathError(f"path needs at least {3 if self.closed else 2} distinct points")
        if not np.all(np.isfinite(pts)):
            raise PathError("path has non-finite points")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if (seg <= 1e-12).any():
            raise PathError(f"coincident consecutive points at index {int(np.argmax(seg <= 1e-12))}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def segments(self) -> np.ndarray:
        pts = self.points
        if self.closed:
            return np.roll(pts, -1, axis=0) - pts
        return np.diff(pts, axis=0)

    def length(self) -> float:
        return float(np.linalg.norm(self.segments(), axis=1).sum())


def _tangents(path: Polyline3) -> np.ndarray:
    seg = path.segments()
    d = seg / np.linalg.norm(seg, axis=1)[:, None]
    if path.closed:
        t = d + np.roll(d, 1, axis=0)
    else:
        t = np.concatenate([d[:1], d[:-1] + d[1:], d[-1:]])
    size = np.linalg.norm(t, axis=1)
    if (size < 1e-9).any():
        raise PathError(f"path doubles back on itself at index {int(np.argmin(size))}")
    return t / size[:, None]


def rotation_minimizing_frames(path: Polyline3):
    """Tangent and reference normal per point by double reflection.

    Closed paths get the leftover holonomy angle spread over arc length so the
    last frame hands over to the first without a twist jump.
    """
    pts = path.points
    t = _tangents(path)
    n = len(pts)
    e = np.zeros(3)
    e[np.argmin(np.abs(t[0]))] = 1.0
    r0 = e - e.dot(t[0]) * t[0]
    r0 /= np.linalg.norm(r0)

    def reflect_step(x0, x1, t0, t1, r):
        v1 = x1 - x0
        c1 = v1.dot(v1)
        rl = r - (2 / c1) * v1.dot(r) * v1
        tl = t0 - (2 / c1) * v1.dot(t0) * v1
        v2 = t1 - tl
        c2 = v2.dot(v2)
        if c2 > 1e-300:
            rl = rl - (2 / c2) * v2.dot(rl) * v2
        return rl

    r = np.empty((n, 3))
    r[0] = r0
    for i in range(n - 1):
        r[i + 1] = reflect_step(pts[i], pts[i + 1], t[i], t[i + 1], r[i])
    if path.closed:
        r_end = reflect_step(pts[-1], pts[0], t[-1], t[0], r[-1])
        angle = np.arctan2(np.cross(r_end, r0).dot(t[0]), r_end.dot(r0))
        seg = np.linalg.norm(path.segments(), axis=1)
        arc = np.concatenate([[0.0], np.cumsum(seg)[:-1]]) / seg.sum()
        phi = (angle * arc)[:, None]
        r = np.cos(phi) * r + np.sin(phi) * np.cross(t, r)
    r /= np.linalg.norm(r, axis=1)[:, None]
    return t, r


def tube(path: Polyline3, radius: float, sides: int = 16) -> IndexedMesh:
    """Sweep a regular ``sides``-gon of circumradius ``radius`` along a path.

    Closed paths close on themselves; open paths get flat end caps whose
    centre vertices come after the rings.  Vertex count is ``len(path) * sides``
    (+2 when open).
    """
    if not radius > 0:
        raise GenerationError(f"tube radius must be positive, got {radius}")
    if sides < 3:
        raise GenerationError(f"tube needs at least 3 sides, got {sides}")
    if not isinstance(path, Polyline3):
        path = Polyline3(path)
    t, r = rotation_minimizing_frames(path)
    s = np.cross(t, r)
    theta = 2 * np.pi * np.arange(sides) / sides
    ring = np.cos(theta)[None, :, None] * r[:, None, :] + np.sin(theta)[None, :, None] * s[:, None, :]
    verts = (path.points[:, None, :] + radius * ring).reshape(-1, 3)

    n = len(path)
    rows = np.arange(n) if path.closed else np.arange(n - 1)
    nxt = (rows + 1) % n
    k = np.arange(sides)
    k1 = (k + 1) % sides
    A = rows[:, None] * sides + k[None, :]
    B = nxt[:, None] * sides + k[None, :]
    C = nxt[:, None] * sides + k1[None, :]
    D = rows[:, None] * sides + k1[None, :]
    t1 = np.stack([A, C, B], axis=-1).reshape(-1, 3)
    t2 = np.stack([A, D, C], axis=-1).reshape(-1, 3)
    faces = [np.stack([t1, t2], axis=1).reshape(-1, 3)]
    if not path.closed:
        c0 = n * sides
        c1 = c0 + 1
        verts = np.concatenate([verts, path.points[:1], path.points[-1:]])
        last = (n - 1) * sides
        faces.append(np.stack([np.full(sides, c0), k1, k], axis=1))
        faces.append(np.stack([np.full(sides, c1), last + k, last + k1], axis=1))
    return IndexedMesh(verts, np.concatenate(faces))


def cylinder(p0, p1, radius: float, sides: int = 16) -> IndexedMesh:
    """Capped cylinder between two points."""
    return tube(Polyline3([p0, p1]), radius, sides)


# -------------------------------------------------------------- revolution

@dataclass(frozen=True, eq=False)
class Profile2:
    """Curve of (r, z) pairs in the half-plane r >= 0.

    Walk it with the solid on the left (counterclockwise around the region in
    the r-z plane) for outward-facing revolved surfaces.
    """

    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        if len(pts) < 2:
            raise ProfileError("profile needs at least 2 points")
        if (pts[:, 0] < 0).any():
            raise ProfileError(f"negative radius at profile index {int(np.argmax(pts[:, 0] < 0))}")
        if not np.all(np.isfinite(pts)):
            raise ProfileError("profile has non-finite points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


def revolve(profile: Profile2, segments: int = 64) -> IndexedMesh:
    """Rotate a profile about the z-axis in ``segments`` steps.

    Points with r == 0 become a single axis vertex, so a profile that starts
    and ends on the axis gives a closed surface.
    """
    if segments < 3:
        raise GenerationError(f"revolve needs at least 3 segments, got {segments}")
    if not isinstance(profile, Profile2):
        profile = Profile2(profile)
    phi = 2 * np.pi * np.arange(segments) / segments
    cos, sin = np.cos(phi), np.sin(phi)
    verts = []
    rings = []
    count = 0
    for r, z in profile.points:
        if r == 0:
            verts.append([[0.0, 0.0, z]])
            rings.append(np.full(segments, count))
            count += 1
        else:
            verts.append(np.stack([r * cos, r * sin, np.full(segments, z)], axis=1))
            rings.append(count + np.arange(segments))
            count += segments
    k1 = np.roll(np.arange(segments), -1)
    pairs = list(zip(range(len(rings) - 1), range(1, len(rings))))
    if profile.closed:
        pairs.append((len(rings) - 1, 0))
    faces = []
    on_axis = profile.points[:, 0] == 0
    for i, j in pairs:
        a, b = rings[i], rings[j]
        if on_axis[i] and on_axis[j]:
            continue
        if on_axis[i]:
            faces.append(np.stack([a, b[k1], b], axis=1))
        elif on_axis[j]:
            faces.append(np.stack([a, a[k1], b], axis=1))
        else:
            t1 = np.stack([a, a[k1], b[k1]], axis=1)
            t2 = np.stack([a, b[k1], b], axis=1)
            faces.append(np.stack([t1, t2], axis=1).reshape(-1, 3))
    faces = np.concatenate(faces) if faces else np.zeros((0, 3), dtype=np.int64)
    return IndexedMesh(np.concatenate(verts), faces)


def uv_sphere(center=(0.0, 0.0, 0.0), r: float = 1.0, nu: int = 32, nv: int = 16) -> IndexedMesh:
    """Latitude/longitude sphere with single-vertex poles.

    ``nu`` longitude steps, ``nv`` latitude bands; ``2 + (nv-1)*nu`` vertices.
    """
    if nu < 3 or nv < 2:
        raise GenerationError(f"uv_sphere needs nu >= 3 and nv >= 2, got {nu}x{nv}")
    if not r > 0:
        raise GenerationError(f"sphere radius must be positive, got {r}")
    theta = -np.pi / 2 + np.pi * np.arange(nv + 1) / nv
    prof = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    prof[0] = (0.0, -r)
    prof[-1] = (0.0, r)
    mesh = revolve(Profile2(prof), nu)
    return IndexedMesh(mesh.vertices + np.asarray(center, float), mesh.faces)


# ---------------------------------------------------------------- polyhedra

def icosahedron_vertices() -> np.ndarray:
    """Cyclic permutations of (0, +-1, +-phi): an icosahedron of edge 2."""
    out = []
    for n in (-1, 1):
        for m in (-1, 1):
            out.append((0.0, n, m * GOLDEN))
            out.append((m * GOLDEN, 0.0, n))
            out.append((n, m * GOLDEN, 0.0))
    return np.array(out)


def _outward(verts: np.ndarray, faces) -> np.ndarray:
    faces = np.array(faces, dtype=np.int64)
    tri = verts[faces]
    center = verts.mean(axis=0)
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    inward = np.einsum("ij,ij->i", n, tri[:, 0] - center) < 0
    faces[inward] = faces[inward][:, ::-1]
    return faces


def icosahedron() -> IndexedMesh:
    v = icosahedron_vertices()
    faces = [
        f for f in itertools.combinations(range(12), 3)
        if all(abs(np.linalg.norm(v[a] - v[b]) - 2) < 1e-9 for a, b in itertools.combinations(f, 2))
    ]
    return IndexedMesh(v, _outward(v, faces))


def _polygon_fan(verts: np.ndarray, ring: Sequence[int], normal: np.ndarray) -> list:
    """Order a convex face's vertices counterclockwise about ``normal`` and fan it."""
    ring = list(ring)
    c = verts[ring].mean(axis=0)
    e1 = verts[ring[0]] - c
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    ang = [np.arctan2((verts[i] - c).dot(e2), (verts[i] - c).dot(e1)) for i in ring]
    ring = [i for _, i in sorted(zip(ang, ring))]
    return [(ring[0], ring[k], ring[k + 1]) for k in range(1, len(ring) - 1)]


def truncated_octahedron() -> IndexedMesh:
    """Convex hull of the 24 permutations of (0, +-1, +-2); edge sqrt(2), volume 32."""
    pts = set()
    for perm in itertools.permutations((0, 1, 2)):
        for signs in itertools.product((-1, 1), repeat=3):
            pts.add(tuple(float(a * s) for a, s in zip(perm, signs)))
    v = np.array(sorted(pts))
    faces = []
    for axis in range(3):
        for s in (-1, 1):
            normal = np.zeros(3)
            normal[axis] = s
            ring = np.flatnonzero(v[:, axis] == 2 * s)
            faces += _polygon_fan(v, ring, normal)
    for signs in itertools.product((-1, 1), repeat=3):
        normal = np.array(signs, float)
        ring = np.flatnonzero(v @ normal == 3)
        faces += _polygon_fan(v, ring, normal / np.sqrt(3))
    return IndexedMesh(v, np.array(faces, dtype=np.int64))


def honeycomb_offsets() -> list[tuple[float, float, float]]:
    """Lattice offsets (k+l+2m, k-l, 3m/2) for k, l in {-1, 1}, m in {0, 1}."""
    return [(k + l + 2 * m, k - l, 1.5 * m) for k in (-1, 1) for l in (-1, 1) for m in (0, 1)]


def honeycomb(cell: IndexedMesh | None = None) -> IndexedMesh:
    """Eight truncated-octahedron instances at the lattice offsets, unwelded.

    The default cell has unit edge length (the (0, 1, 2) cell scaled by
    1/sqrt(2)).
    """
    if cell is None:
        cell = apply_transform(truncated_octahedron(), Transform(scale=1 / np.sqrt(2)))
    parts = [apply_transform(cell, Transform.translate(o)) for o in honeycomb_offsets()]
    return merge(parts).with_meta(instances=len(parts), instance_faces=cell.n_faces)


# ------------------------------------------------------------------ voxels

@dataclass(frozen=True, eq=False)
class VoxelLayers:
    """0/1 matrices stacked bottom-up; entry [i][j] of layer k is the cell
    with corner (i, j, k) * cell."""

    layers: tuple
    cell: float = 1.0

    def __post_init__(self):
        if not self.cell > 0:
            raise VoxelError(f"cell size must be positive, got {self.cell}")
        mats = [np.atleast_2d(np.asarray(m)) for m in self.layers]
        for k, m in enumerate(mats):
            if m.ndim != 2 or not np.isin(m, (0, 1)).all():
                raise VoxelError(f"layer {k} must be a 0/1 matrix")
        object.__setattr__(self, "layers", tuple(mats))

    def grid(self) -> np.ndarray:
        if not self.layers:
            return np.zeros((0, 0, 0), dtype=bool)
        nx = max(m.shape[0] for m in self.layers)
        ny = max(m.shape[1] for m in self.layers)
        g = np.zeros((nx, ny, len(self.layers)), dtype=bool)
        for k, m in enumerate(self.layers):
            g[: m.shape[0], : m.shape[1], k] = m == 1
        return g


_UNIT_QUAD = np.array([[0, 0], [1, 0], [1, 1], [0, 1]])


def voxel_solid(v: VoxelLayers, origin=(0.0, 0.0, 0.0)) -> IndexedMesh:
    """Brick surface of the 1-cells with faces between filled neighbours removed."""
    g = np.pad(v.grid(), 1)
    quads = []
    for axis in range(3):
        b, c = (axis + 1) % 3, (axis + 2) % 3
        for sign in (1, -1):
            neighbour = np.roll(g, -sign, axis=axis)
            cells = np.argwhere(g & ~neighbour) - 1
            if not len(cells):
                continue
            base = cells.copy()
            if sign > 0:
                base[:, axis] += 1
            corners = np.repeat(base[:, None, :], 4, axis=1)
            order = _UNIT_QUAD if sign > 0 else _UNIT_QUAD[::-1]
            corners[:, :, b] += order[:, 0]
            corners[:, :, c] += order[:, 1]
            quads.append(corners)
    if not quads:
        return IndexedMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    quads = np.concatenate(quads)
    lattice, inverse = np.unique(quads.reshape(-1, 3), axis=0, return_inverse=True)
    q = inverse.reshape(-1, 4)
    faces = np.stack([q[:, [0, 1, 2]], q[:, [0, 2, 3]]], axis=1).reshape(-1, 3)
    verts = lattice * v.cell + np.asarray(origin, float)
    return IndexedMesh(verts, faces)
