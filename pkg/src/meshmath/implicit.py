"""Implicit regions f(p) <= 0: a small field algebra and marching cubes."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .geomcore import IndexedMesh


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class ScalarField:
    """``fn`` maps an ``(N, 3)`` array to ``N`` reals, negative inside.

    ``lo``/``hi`` bound the zero set (entries may be infinite).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    lo: tuple = (-np.inf,) * 3
    hi: tuple = (np.inf,) * 3
    name: str = "field"

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.asarray(self.fn(pts.reshape(-1, 3)), dtype=float).reshape(pts.shape[:-1])

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lo, float), np.asarray(self.hi, float)


@dataclass(frozen=True)
class GridSpec:
    lo: tuple
    hi: tuple
    resolution: tuple  # nodes along x, y, z

    def __post_init__(self):
        lo = np.asarray(self.lo, float)
        hi = np.asarray(self.hi, float)
        if lo.shape != (3,) or hi.shape != (3,) or not np.all(hi > lo):
            raise FieldError("grid bounds need positive extent on every axis")
        res = tuple(int(n) for n in np.broadcast_to(self.resolution, 3))
        if min(res) < 2:
            raise FieldError(f"grid resolution must be >= 2 per axis, got {res}")
        object.__setattr__(self, "resolution", res)

    @classmethod
    def around(cls, field: ScalarField, n: int, pad: float = 0.1) -> "GridSpec":
        """Cube-ish grid over the field's bounding box plus ``pad`` relative margin."""
        lo, hi = field.bounds
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise FieldError(f"{field.name}: bounding box is unbounded; pass a GridSpec")
        margin = pad * (hi - lo).max()
        return cls(tuple(lo - margin), tuple(hi + margin), (n, n, n))

    def axes(self):
        return [np.linspace(a, b, n) for a, b, n in zip(self.lo, self.hi, self.resolution)]


# ----------------------------------------------------------------- fields

def sphere_field(center=(0.0, 0.0, 0.0), r: float = 1.0) -> ScalarField:
    c = np.asarray(center, float)
    return ScalarField(lambda p: np.linalg.norm(p - c, axis=1) - r, tuple(c - r), tuple(c + r), "sphere")


def cylinder_field(axis: int = 2, r: float = 1.0, center=(0.0, 0.0, 0.0)) -> ScalarField:
    """Infinite circular cylinder of radius ``r`` along coordinate ``axis``."""
    c = np.asarray(center, float)
    others = [k for k in range(3) if k != axis]
    lo = c - r
    hi = c + r
    lo[axis], hi[axis] = -np.inf, np.inf
    return ScalarField(
        lambda p: np.hypot(p[:, others[0]] - c[others[0]], p[:, others[1]] - c[others[1]]) - r,
        tuple(lo), tuple(hi), f"cylinder{'xyz'[axis]}",
    )


def halfspace_field(normal, offset: float = 0.0) -> ScalarField:
    """Region n . p <= offset, with n normalized."""
    n = np.asarray(normal, float)
    n = n / np.linalg.norm(n)
    lo = np.full(3, -np.inf)
    hi = np.full(3, np.inf)
    k = np.flatnonzero(n)
    if len(k) == 1:
        if n[k[0]] > 0:
            hi[k[0]] = offset
        else:
            lo[k[0]] = -offset
    return ScalarField(lambda p: p @ n - offset, tuple(lo), tuple(hi), "halfspace")


def field_intersection(fields: Sequence[ScalarField]) -> ScalarField:
    """Pointwise max: the region inside every input."""
    fields = list(fields)
    if not fields:
        raise FieldError("intersection of an empty field list")
    if len(fields) == 1:
        return fields[0]
    lo = np.max([f.bounds[0] for f in fields], axis=0)
    hi = np.min([f.bounds[1] for f in fields], axis=0)

    def fn(p):
        out = fields[0].fn(p)
        for f in fields[1:]:
            out = np.maximum(out, f.fn(p))
        return out

    return ScalarField(fn, tuple(lo), tuple(hi), "&".join(f.name for f in fields))


def field_union(fields: Sequence[ScalarField]) -> ScalarField:
    fields = list(fields)
    if not fields:
        raise FieldError("union of an empty field list")
    lo = np.min([f.bounds[0] for f in fields], axis=0)
    hi = np.max([f.bounds[1] for f in fields], axis=0)

    def fn(p):
        out = fields[0].fn(p)
        for f in fields[1:]:
            out = np.minimum(out, f.fn(p))
        return out

    return ScalarField(fn, tuple(lo), tuple(hi), "|".join(f.name for f in fields))


def field_difference(a: ScalarField, b: ScalarField) -> ScalarField:
    """Inside ``a`` and outside ``b``."""
    return ScalarField(lambda p: np.maximum(a.fn(p), -b.fn(p)), a.lo, a.hi, f"{a.name}-{b.name}")


def tricylinder_field(r: float = 1.0) -> ScalarField:
    """Steinmetz solid of three perpendicular cylinders; volume (16 - 8 sqrt 2) r^3."""
    return field_intersection([cylinder_field(k, r) for k in range(3)])


def bicylinder_field(r: float = 1.0) -> ScalarField:
    """Cylinders along x and y; volume 16 r^3 / 3."""
    return field_intersection([cylinder_field(0, r), cylinder_field(1, r)])


def archimedean_dome_field(r: float = 1.0) -> ScalarField:
    """Upper half of the bicylinder; fills 2/3 of its prism [-r, r]^2 x [0, r]."""
    return field_intersection([bicylinder_field(r), halfspace_field((0, 0, -1), 0.0)])


def cylinder_minus_cone_field(r: float = 1.0, h: float = 1.0) -> ScalarField:
    """Solid cylinder 0 <= z <= h, radius r, minus the cone with apex at the
    origin opening upward to radius r at z = h.  Volume 2 pi r^2 h / 3."""
    slope = r / h

    def fn(p):
        rho = np.hypot(p[:, 0], p[:, 1])
        cyl = np.maximum(rho - r, np.maximum(-p[:, 2], p[:, 2] - h))
        cone = (rho - slope * p[:, 2]) / np.hypot(1.0, slope)
        return np.maximum(cyl, -cone)

    return ScalarField(fn, (-r, -r, 0.0), (r, r, h), "cylinder-cone")


def mandelbulb_field(power: int = 8, max_iter: int = 32, escape_radius: float = 2.0) -> ScalarField:
    """Escape-time indicator: -1 where the orbit of 0 under x -> x^power + c
    stays within ``escape_radius`` for ``max_iter`` steps, +1 otherwise.

    The power map works in spherical coordinates (polar angle from +z):
    radius to the ``power``, both angles times ``power``.
    """
    if power < 2:
        raise FieldError(f"mandelbulb power must be >= 2, got {power}")

    def fn(c):
        c = np.asarray(c, float)
        x = np.zeros_like(c)
        alive = np.ones(len(c), dtype=bool)
        idx = np.arange(len(c))
        for _ in range(max_iter):
            xa = x[idx]
            r = np.linalg.norm(xa, axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                theta = np.where(r > 0, np.arccos(np.clip(xa[:, 2] / r, -1, 1)), 0.0)
            phi = np.arctan2(xa[:, 1], xa[:, 0])
            rn = r ** power
            new = np.stack([
                rn * np.sin(power * theta) * np.cos(power * phi),
                rn * np.sin(power * theta) * np.sin(power * phi),
                rn * np.cos(power * theta),
            ], axis=1) + c[idx]
            x[idx] = new
            out = np.linalg.norm(new, axis=1) > escape_radius
            alive[idx[out]] = False
            idx = idx[~out]
            if not len(idx):
                break
        return np.where(alive, -1.0, 1.0)

    # the set sits inside the ball of radius 2 (|c| > 2 escapes at once)
    b = min(escape_radius, 2.0)
    return ScalarField(fn, (-b,) * 3, (b,) * 3, f"mandelbulb{power}")


# --------------------------------------------------------- marching cubes

# corner c has offsets (c & 1, c >> 1 & 1, c >> 2 & 1) in (x, y, z)
_CORNERS = np.array([[c & 1, (c >> 1) & 1, (c >> 2) & 1] for c in range(8)])


def _cube_edges():
    edges = []
    for axis in range(3):
        for c in range(8):
            if not _CORNERS[c][axis]:
                edges.append((c, c | (1 << axis), axis))
    return edges


_EDGES = _cube_edges()


def _cube_faces():
    """Each cube face as 4 corners counterclockwise seen from outside."""
    faces = []
    quad = [(0, 0), (1, 0), (1, 1), (0, 1)]
    for axis in range(3):
        b, c = (axis + 1) % 3, (axis + 2) % 3
        for side in (0, 1):
            ring = []
            for qb, qc in quad:
                off = [0, 0, 0]
                off[axis], off[b], off[c] = side, qb, qc
                ring.append(off[0] | off[1] << 1 | off[2] << 2)
            faces.append(ring if side else ring[::-1])
    return faces


@lru_cache(maxsize=1)
def triangle_table() -> tuple[np.ndarray, np.ndarray]:
    """256-case table built from one fixed rule.

    On every cube face the crossing points are joined so that inside corners
    are never connected across the face (ambiguous faces separate them).
    Walking each face counterclockwise from outside, a segment runs from an
    outside-to-inside crossing to the next inside-to-outside crossing; chained
    over the six faces these segments form loops that are fan-triangulated.
    With this orientation triangle normals point toward increasing field.
    Two cells sharing a face always pick the same segments, so the surface
    closes up across cells.
    """
    edge_of = {}
    for e, (a, b, _) in enumerate(_EDGES):
        edge_of[(a, b)] = edge_of[(b, a)] = e
    faces = _cube_faces()
    on_face = [set() for _ in _EDGES]
    for fi, ring in enumerate(faces):
        for k in range(4):
            on_face[edge_of[(ring[k], ring[(k + 1) % 4])]].add(fi)

    def flat(tri):
        return bool(on_face[tri[0]] & on_face[tri[1]] & on_face[tri[2]])

    tables = []
    for mask in range(256):
        inside = [(mask >> c) & 1 for c in range(8)]
        nxt = {}
        for ring in faces:
            cross = []
            for k in range(4):
                p, q = ring[k], ring[(k + 1) % 4]
                if inside[p] != inside[q]:
                    cross.append((edge_of[(p, q)], bool(inside[q])))
            n = len(cross)
            for k, (e, entering) in enumerate(cross):
                if entering:
                    for step in range(1, n):
                        e2, entering2 = cross[(k + step) % n]
                        if not entering2:
                            nxt[e] = e2
                            break
        tris = []
        todo = sorted(nxt)
        seen = set()
        for start in todo:
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            e = nxt[start]
            while e != start:
                loop.append(e)
                seen.add(e)
                e = nxt[e]
            # fan from an apex that puts no triangle flat in a cube face; such a
            # triangle would be emitted again, reversed, by the neighbouring cell
            for r in range(len(loop)):
                ring = loop[r:] + loop[:r]
                fan = [(ring[0], ring[k], ring[k + 1]) for k in range(1, len(ring) - 1)]
                if not any(flat(t) for t in fan):
                    break
            else:
                raise AssertionError(f"no clean fan for case {mask}")
            tris.extend(fan)
        tables.append(tris)
    width = max(len(t) for t in tables)
    tri = np.full((256, width, 3), -1, dtype=np.int64)
    count = np.zeros(256, dtype=np.int64)
    for mask, t in enumerate(tables):
        count[mask] = len(t)
        if t:
            tri[mask, : len(t)] = t
    return tri, count


def sample_field(f: ScalarField, g: GridSpec) -> np.ndarray:
    """Field values on grid nodes, array indexed [z, y, x]."""
    xs, ys, zs = g.axes()
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
    vals = f(np.stack([X, Y, Z], axis=-1))
    if not np.all(np.isfinite(vals)):
        raise FieldError(f"{f.name}: field is not finite on the grid")
    return vals


def marching_cubes(f: ScalarField, g: GridSpec, level: float = 0.0) -> IndexedMesh:
    """Triangulate the level set of ``f`` on grid ``g``.

    Triangles face toward larger field values, so solids (negative inside)
    come out with outward normals.  Cells are visited in (z, y, x) order and
    vertices are numbered by grid edge.  ``meta['boundary_touch']`` is set
    when an inside node lies on the grid boundary; the mesh may then be open.
    """
    vals = sample_field(f, g)
    return contour_grid(vals, g, level)


def contour_grid(vals: np.ndarray, g: GridSpec, level: float = 0.0) -> IndexedMesh:
    nx, ny, nz = g.resolution
    if vals.shape != (nz, ny, nx):
        raise FieldError(f"value grid shape {vals.shape} does not match resolution {g.resolution}")
    inside = vals < level
    touch = bool(
        inside[0].any() or inside[-1].any() or inside[:, 0].any() or inside[:, -1].any()
        or inside[:, :, 0].any() or inside[:, :, -1].any()
    )
    mask = np.zeros((nz - 1, ny - 1, nx - 1), dtype=np.int64)
    for c, (dx, dy, dz) in enumerate(_CORNERS):
        mask |= inside[dz: nz - 1 + dz, dy: ny - 1 + dy, dx: nx - 1 + dx].astype(np.int64) << c
    tri, count = triangle_table()
    mask = mask.ravel()
    ntri = count[mask]
    cells = np.repeat(np.arange(len(mask)), ntri)
    if not len(cells):
        return IndexedMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), {"boundary_touch": touch})
    slot = np.arange(len(cells)) - np.repeat(np.cumsum(ntri) - ntri, ntri)
    local = tri[mask[cells], slot]  # (T, 3) cube-edge ids
    k, j, i = np.unravel_index(cells, (nz - 1, ny - 1, nx - 1))

    shapes = [(nz, ny, nx - 1), (nz, ny - 1, nx), (nz - 1, ny, nx)]
    offsets = np.cumsum([0] + [int(np.prod(s)) for s in shapes])
    e_axis = np.array([a for _, _, a in _EDGES])
    e_base = _CORNERS[[a for a, _, _ in _EDGES]]
    ax = e_axis[local]
    bx = i[:, None] + e_base[local, 0]
    by = j[:, None] + e_base[local, 1]
    bz = k[:, None] + e_base[local, 2]
    gid = np.empty(local.shape, dtype=np.int64)
    for a in range(3):
        sel = ax == a
        gid[sel] = offsets[a] + np.ravel_multi_index((bz[sel], by[sel], bx[sel]), shapes[a])

    used, faces = np.unique(gid, return_inverse=True)
    faces = faces.reshape(-1, 3)
    a = np.searchsorted(offsets, used, side="right") - 1
    verts = np.empty((len(used), 3))
    axes = g.axes()
    for axis in range(3):
        sel = a == axis
        z0, y0, x0 = np.unravel_index(used[sel] - offsets[axis], shapes[axis])
        step = np.zeros(3, dtype=np.int64)
        step[axis] = 1
        f0 = vals[z0, y0, x0]
        f1 = vals[z0 + step[2], y0 + step[1], x0 + step[0]]
        t = np.clip((level - f0) / (f1 - f0), 1e-6, 1 - 1e-6)
        p0 = np.stack([axes[0][x0], axes[1][y0], axes[2][z0]], axis=1)
        p1 = np.stack([axes[0][x0 + step[0]], axes[1][y0 + step[1]], axes[2][z0 + step[2]]], axis=1)
        verts[sel] = p0 + t[:, None] * (p1 - p0)
    return IndexedMesh(verts, faces, {"boundary_touch": touch})


def mesh_field(f: ScalarField, n: int, pad: float = 0.1) -> IndexedMesh:
    """Marching cubes on an ``n^3`` grid around the field's bounding box."""
    return marching_cubes(f, GridSpec.around(f, n, pad))
