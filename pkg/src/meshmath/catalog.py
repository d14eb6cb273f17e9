"""Named, parameterized scene builders.

Every scene is a merge of closed parts that share no vertices, so a scene is
closed exactly when all its parts are.  Overlapping parts are left to the
slicer; no mesh booleans happen here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .dynamics import (
    abc_flow, digit_walk, integrate, lorenz, map_attractor, read_digit_file, wrap_torus,
)
from .geomcore import IndexedMesh, ParameterError, Transform, apply_transform, box, merge
from .implicit import (
    GridSpec, archimedean_dome_field, cylinder_minus_cone_field, mandelbulb_field, marching_cubes,
    mesh_field, tricylinder_field,
)
from .tessellate import (
    GOLDEN, ParametricPatch, Polyline3, Profile2, VoxelLayers, cylinder, honeycomb,
    icosahedron_vertices, revolve, thicken, tube, uv_sphere, voxel_solid,
)


class SceneError(LookupError):
    pass


@dataclass(frozen=True)
class SceneSpec:
    name: str
    description: str
    builder: Callable[..., IndexedMesh] = field(repr=False)
    params: dict = field(default_factory=dict)
    ranges: dict = field(default_factory=dict)  # key -> (lo, hi) inclusive, or a frozenset of choices
    closed: bool = True

    def resolve(self, overrides: dict | None = None) -> dict:
        """Defaults updated by ``overrides``; strings are parsed to the default's type."""
        out = dict(self.params)
        for key, value in (overrides or {}).items():
            if key not in self.params:
                raise ParameterError(
                    f"{self.name}: unknown parameter {key!r}; known: {', '.join(sorted(self.params))}")
            out[key] = _coerce(self.name, key, value, self.params[key])
        for key, value in out.items():
            rng = self.ranges.get(key)
            if rng is None:
                continue
            if isinstance(rng, frozenset):
                if value not in rng:
                    raise ParameterError(f"{self.name}: {key}={value!r} not one of {sorted(rng)}")
            elif not rng[0] <= value <= rng[1]:
                raise ParameterError(f"{self.name}: {key}={value} outside [{rng[0]}, {rng[1]}]")
        return out


def _coerce(scene: str, key: str, value, default):
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                if value.lower() not in ("0", "1", "true", "false"):
                    raise ValueError(value)
                return value.lower() in ("1", "true")
            return bool(value)
        if isinstance(default, int):
            f = float(value)
            if f != int(f):
                raise ValueError(value)
            return int(f)
        if isinstance(default, float):
            f = float(value)
            if not math.isfinite(f):
                raise ValueError(value)
            return f
        return str(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{scene}: bad value {value!r} for {key} (expected {type(default).__name__})") from None


# ------------------------------------------------------------------ builders

def _sphere(res: int, radius: float) -> IndexedMesh:
    return uv_sphere(r=radius, nu=res, nv=res)


def kissing_centers() -> np.ndarray:
    """Icosahedron vertices pushed out to norm exactly 2, so each unit sphere
    touches the central one."""
    v = icosahedron_vertices()
    return 2.0 * v / np.linalg.norm(v, axis=1, keepdims=True)


def _kissing12(res: int) -> IndexedMesh:
    centers = kissing_centers()
    parts = [uv_sphere((0.0, 0.0, 0.0), 1.0, res, res // 2)]
    parts += [uv_sphere(c, 1.0, res, res // 2) for c in centers]
    return merge(parts).with_meta(spheres=13, centers=tuple(map(tuple, centers)))


def moebius_patch(nu: int = 96, nv: int = 8) -> ParametricPatch:
    def fn(u, v):
        w = 1 + v / 2 * np.cos(u / 2)
        return w * np.cos(u), w * np.sin(u), v / 2 * np.sin(u / 2)

    return ParametricPatch(fn, (0.0, 2 * np.pi), (-1.0, 1.0), nu, nv, "u_periodic_flipped")


def _moebius(nu: int, nv: int, thickness: float) -> IndexedMesh:
    return thicken(moebius_patch(nu, nv), thickness)


def torus_knot(p: int, q: int, t: np.ndarray) -> np.ndarray:
    r = 2 + np.cos(q * t)
    return np.stack([r * np.cos(p * t), r * np.sin(p * t), np.sin(q * t)], axis=1)


def _knot_sum(samples: int, radius: float, sides: int, p1: int, q1: int, p2: int, q2: int) -> IndexedMesh:
    t = 2 * np.pi * np.arange(samples) / samples
    pts = 3 * torus_knot(p1, q1, t) - 4 * torus_knot(p2, q2, t)
    return tube(Polyline3(pts, closed=True), radius, sides)


def _tricylinder(res: int) -> IndexedMesh:
    return mesh_field(tricylinder_field(1.0), res)


def dome_grid(res: int, r: float = 1.0) -> GridSpec:
    """Grid over the dome whose z-nodes straddle the flat base instead of sitting on it."""
    half = 1.1 * r
    h = 2 * half / (res - 1)
    zlo = -1.5 * h
    nz = int(math.ceil((half - zlo) / h)) + 1
    return GridSpec((-half, -half, zlo), (half, half, zlo + (nz - 1) * h), (res, res, nz))


def _dome(res: int) -> IndexedMesh:
    return marching_cubes(archimedean_dome_field(1.0), dome_grid(res))


def hemisphere(segments: int = 64, arc: int = 32) -> IndexedMesh:
    """Revolved unit half ball, flat side down on z = 0."""
    th = np.linspace(0.0, np.pi / 2, arc + 1)
    prof = np.concatenate([[[0.0, 0.0]], np.stack([np.cos(th), np.sin(th)], axis=1)])
    prof[-1] = (0.0, 1.0)
    return revolve(Profile2(prof), segments)


def cylinder_minus_cone(res: int) -> IndexedMesh:
    return mesh_field(cylinder_minus_cone_field(1.0, 1.0), res)


def _hemisphere_demo(res: int, segments: int) -> IndexedMesh:
    a = hemisphere(segments, max(8, segments // 2))
    b = apply_transform(cylinder_minus_cone(res), Transform.translate((3.0, 0.0, 0.0)))
    return merge([a, b]).with_meta(hemisphere_faces=a.n_faces)


def _honeycomb() -> IndexedMesh:
    return honeycomb()


ESCHER_LAYERS = (
    [[1, 0, 0, 0, 0, 0, 0], [1, 0, 0, 0, 0, 0, 0], [1, 0, 0, 0, 0, 0, 0],
     [1, 0, 0, 0, 0, 0, 0], [1, 0, 0, 0, 0, 0, 0], [1, 1, 1, 1, 1, 0, 0]],
    [[0, 0, 0, 0, 0, 0, 1], [0, 0, 0, 0, 0, 0, 1], [0, 0, 0, 0, 0, 0, 1],
     [1, 0, 0, 0, 0, 0, 1], [1, 0, 0, 0, 0, 0, 1], [1, 1, 1, 1, 1, 1, 1]],
    [[0, 0, 0, 0, 0, 0, 1], [0, 0, 0, 0, 0, 0, 1], [0, 0, 0, 0, 0, 0, 1],
     [0, 0, 0, 0, 0, 0, 1], [0, 0, 0, 0, 0, 0, 1], [0, 0, 0, 0, 1, 1, 1]],
    [[0, 0, 0, 0, 1, 1, 1], [0, 0, 0, 0, 0, 0, 1], [0, 0, 0, 0, 0, 0, 1],
     [0, 0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0, 0]],
)


def _escher(cell: float) -> IndexedMesh:
    # matrix entry [i][j] of layer k (1-based i, j) is the brick at (i, j, k - 1)
    return voxel_solid(VoxelLayers(ESCHER_LAYERS, cell), origin=(cell, cell, -cell))


def _drinkable(segments: int, a: float, b: float, connectors: int) -> IndexedMesh:
    """Cone-in-cylinder vessel below, drained hemispherical bowl above, joined by rods.

    The vessel's cavity is the cylinder r < 1 minus the cone; the space under
    the inner cone is solid.  Both revolves are turned half a segment so no
    rod vertex lands on a vessel vertex.
    """
    R = 1 + a
    b1, b2 = math.sin(b), math.cos(b)
    b1a = math.asin(b1 / R)
    b2a = R * math.cos(b1a)
    turn = Transform.about_axis((0, 0, 1), math.pi / segments)

    z_meet = -1 / R  # where the outer cone meets the inner wall
    vessel = Profile2([(0.0, 0.0), (1.0, z_meet), (1.0, 0.0), (R, 0.0), (R, -1.0), (0.0, -1.0)][::-1])
    arc = 24
    s_in = np.linspace(np.pi / 2, np.pi - b, arc)
    s_out = np.linspace(np.pi - b1a, np.pi / 2, arc)
    inner = np.stack([np.sin(s_in), 2 + np.cos(s_in)], axis=1)
    outer = np.stack([R * np.sin(s_out), 2 + np.cos(s_out) * R], axis=1)
    inner[-1] = (b1, 2 - b2)
    outer[0] = (b1, 2 - b2a)
    bowl = Profile2(np.concatenate([inner, outer]), closed=True)
    parts = [apply_transform(revolve(vessel, segments), turn), apply_transform(revolve(bowl, segments), turn)]
    rc = 1 + a / 2
    for k in range(1, connectors + 1):
        m = 2 * math.pi * k / connectors
        x, y = rc * math.cos(m), rc * math.sin(m)
        parts.append(cylinder((x, y, -1.0), (x, y, 2.0), a / 2, 16))
    return merge(parts).with_meta(connectors=connectors)


def lorenz_orbit(steps: int = 1000, h: float = 0.01) -> np.ndarray:
    return integrate(lorenz(), (0.0, 1.0, 0.0), h, steps).points


def _lorenz(steps: int, radius: float, sides: int) -> IndexedMesh:
    s = lorenz_orbit(steps)
    a, b = 10.0, -7.0
    stand = box((-a, -a, b - 2), (a, a, b))
    # the post stops short of the orbit's first point so its cap centre stays distinct
    post = cylinder(s[0] + (0, 0, -2 * radius), (s[0][0], s[0][1], b), 1.0, 24)
    return merge([tube(Polyline3(s), radius, sides), stand, post])


def _abc(orbits: int, steps: int, h: float, radius: float, sides: int, A: float, B: float, C: float) -> IndexedMesh:
    f = abc_flow(A, B, C)
    parts = []
    for k in range(orbits):
        # starts spread along a golden-ratio diagonal of the torus
        x0 = 2 * np.pi * np.mod((k + 0.5) / orbits * np.array([1.0, GOLDEN, GOLDEN ** 2]), 1.0)
        for piece in wrap_torus(integrate(f, x0, h, steps).points):
            if len(piece) >= 2:
                parts.append(tube(Polyline3(piece), radius, sides))
    return merge(parts).with_meta(orbits=orbits)


def calabi_yau_patch(k1: int, k2: int, n: int = 5, alpha: float = 0.2, nu: int = 20, nv: int = 11) -> ParametricPatch:
    ca, sa = math.cos(alpha), math.sin(alpha)
    e1 = np.exp(2j * np.pi * k1 / n)
    e2 = np.exp(2j * np.pi * k2 / n)

    def fn(u, v):
        z = u + 1j * v
        z1 = e1 * np.cosh(z) ** (2 / n)
        z2 = e2 * np.sinh(z) ** (2 / n)
        return z1.real, z2.real, ca * z1.imag + sa * z2.imag

    return ParametricPatch(fn, (-1.0, 1.0), (0.0, np.pi / 2), nu, nv)


def _calabi_yau(n: int, alpha: float, thickness: float, nu: int, nv: int) -> IndexedMesh:
    """One thickened shell per (k1, k2).

    Neighbouring patches share boundary curves, so shell k gets thickness
    ``t (1 + k / (100 n^2))``: offsets of different length from a common point
    never coincide.  All patches also pass through the branch points
    u = 0, v in {0, pi/2}; an even ``nu`` keeps u = 0 off the grid.
    """
    shells = []
    for k1 in range(n):
        for k2 in range(n):
            t = thickness * (1 + len(shells) / (100 * n * n))
            shells.append(thicken(calabi_yau_patch(k1, k2, n, alpha, nu, nv), t))
    return merge(shells).with_meta(patches=len(shells))


def feigenbaum_points(c_min: float, c_max: float, c_step: float, max_points: int) -> np.ndarray:
    """Attractor samples of x -> c sin(pi x) placed at (c cos 2 pi x, c sin 2 pi x, 5c)."""
    n = int(round((c_max - c_min) / c_step)) + 1
    out = []
    for c in c_min + c_step * np.arange(n):
        xs = map_attractor(float(c)).samples
        if len(xs) > max_points:
            xs = xs[np.linspace(0, len(xs) - 1, max_points).round().astype(int)]
        out.append(np.stack([c * np.cos(2 * np.pi * xs), c * np.sin(2 * np.pi * xs), np.full(len(xs), 5 * c)], 1))
    return np.concatenate(out)


def _feigenbaum(c_min: float, c_max: float, c_step: float, radius: float, max_points: int, res: int) -> IndexedMesh:
    if c_max < c_min:
        raise ParameterError(f"feigenbaum3d: c_max {c_max} below c_min {c_min}")
    pts = feigenbaum_points(c_min, c_max, c_step, max_points)
    ball = uv_sphere((0.0, 0.0, 0.0), radius, res, max(2, res // 2))
    n = len(pts)
    verts = (ball.vertices[None, :, :] + pts[:, None, :]).reshape(-1, 3)
    faces = (ball.faces[None, :, :] + ball.n_vertices * np.arange(n)[:, None, None]).reshape(-1, 3)
    return IndexedMesh(verts, faces, {"spheres": n})


def _mandelbulb(res: int, power: int, max_iter: int) -> IndexedMesh:
    return mesh_field(mandelbulb_field(power, max_iter), res)


def digit_source(source: str, base: int) -> Path:
    if source == "pi":
        return Path(str(resources.files("meshmath") / "data" / f"pi_base{base}.txt"))
    return Path(source)


def _digit_walk(source: str, base: int, count: int, step: float, radius: float, sides: int) -> IndexedMesh:
    """Beads at every visited lattice point joined by rods along every used edge.

    Walks revisit points and reverse on themselves, which a single swept tube
    cannot follow, so each lattice site and each edge is emitted once.
    """
    digits = read_digit_file(digit_source(source, base), base, count)
    pts = digit_walk(digits, base, step).points
    sites, inverse = np.unique(np.round(pts / step).astype(np.int64), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    edges = np.unique(np.sort(np.stack([inverse[:-1], inverse[1:]], 1), axis=1), axis=0)
    bead = 2 * radius
    parts = [uv_sphere(s * step, bead, sides, max(2, sides // 2)) for s in sites]
    # rods end inside the beads, well clear of their surfaces
    inset = bead - 0.5 * radius
    for i, j in edges:
        p, q = sites[i] * step, sites[j] * step
        d = (q - p) / step
        parts.append(cylinder(p + inset * d, q - inset * d, radius, sides))
    return merge(parts).with_meta(digits=len(digits), sites=len(sites), rods=len(edges))


# ------------------------------------------------------------------ registry

_SCENES = [
    SceneSpec("abc_orbits", "six wrapped orbits of the ABC flow on the 3-torus, as tubes",
              _abc, {"orbits": 6, "steps": 2000, "h": 0.02, "radius": 0.05, "sides": 8, "A": 1.0, "B": 1.0, "C": 1.0},
              {"orbits": (1, 64), "steps": (2, 200000), "h": (1e-4, 0.5), "radius": (1e-3, 1.0), "sides": (3, 64),
               "A": (-10.0, 10.0), "B": (-10.0, 10.0), "C": (-10.0, 10.0)}),
    SceneSpec("archimedean_dome", "upper half of the bicylinder by marching cubes",
              _dome, {"res": 96}, {"res": (8, 512)}),
    SceneSpec("calabi_yau", "n^2 thickened patches of the quintic Calabi-Yau slice, projection angle alpha",
              _calabi_yau, {"n": 5, "alpha": 0.2, "thickness": 0.04, "nu": 20, "nv": 11},
              {"n": (2, 12), "alpha": (-math.pi, math.pi), "thickness": (1e-3, 0.5), "nu": (3, 400), "nv": (3, 400)}),
    SceneSpec("digit_walk", "lattice walk along the base-6 (or base-4) digits of pi, beads and rods",
              _digit_walk, {"source": "pi", "base": 6, "count": 300, "step": 1.0, "radius": 0.15, "sides": 8},
              {"base": frozenset({4, 6}), "count": (1, 100000), "step": (1e-3, 1e3), "radius": (1e-3, 0.2), "sides": (3, 64)}),
    SceneSpec("drinkable_proof", "cone-in-cylinder vessel and drained bowl on six rods",
              _drinkable, {"segments": 64, "a": 0.1, "b": 0.06, "connectors": 6},
              {"segments": (8, 1024), "a": (0.01, 0.5), "b": (0.01, 0.5), "connectors": (1, 64)}),
    SceneSpec("feigenbaum3d", "sine-map attractors stacked over c as small spheres",
              _feigenbaum, {"c_min": 0.55, "c_max": 1.0, "c_step": 0.001, "radius": 0.010,
                            "max_points": 32, "res": 6},
              {"c_min": (1e-3, 1.0), "c_max": (1e-3, 1.0), "c_step": (1e-5, 1.0), "radius": (1e-4, 0.1),
               "max_points": (1, 4000), "res": (3, 64)}),
    SceneSpec("hemisphere_demo", "half ball beside the cylinder-minus-cone solid of equal volume",
              _hemisphere_demo, {"res": 96, "segments": 64}, {"res": (8, 512), "segments": (8, 1024)}),
    SceneSpec("honeycomb", "eight truncated octahedra of the space-filling lattice",
              _honeycomb, {}, {}),
    SceneSpec("kissing12", "central unit sphere and twelve touching unit spheres",
              _kissing12, {"res": 24}, {"res": (4, 512)}),
    SceneSpec("knot_sum_tube", "tube around 3u - 4v for torus knots u, v",
              _knot_sum, {"samples": 1500, "radius": 0.3, "sides": 12, "p1": 3, "q1": 5, "p2": 5, "q2": 11},
              {"samples": (16, 100000), "radius": (1e-3, 2.0), "sides": (3, 64),
               "p1": (1, 50), "q1": (1, 50), "p2": (1, 50), "q2": (1, 50)}),
    SceneSpec("lorenz_ribbon", "Lorenz orbit as a tube on a cuboid stand",
              _lorenz, {"steps": 1000, "radius": 0.3, "sides": 12},
              {"steps": (2, 100000), "radius": (1e-2, 1.0), "sides": (3, 64)}),
    SceneSpec("mandelbulb", "power-8 Mandelbulb by marching cubes",
              _mandelbulb, {"res": 64, "power": 8, "max_iter": 32},
              {"res": (8, 512), "power": (2, 16), "max_iter": (1, 256)}),
    SceneSpec("moebius_thick", "half-twist band thickened into a solid ring",
              _moebius, {"nu": 96, "nv": 8, "thickness": 0.1},
              {"nu": (8, 4096), "nv": (2, 512), "thickness": (1e-3, 0.5)}),
    SceneSpec("sphere", "unit sphere, latitude/longitude grid",
              _sphere, {"res": 64, "radius": 1.0}, {"res": (4, 2048), "radius": (1e-6, 1e6)}),
    SceneSpec("tricylinder", "intersection of three perpendicular unit cylinders by marching cubes",
              _tricylinder, {"res": 96}, {"res": (8, 512)}),
    SceneSpec("voxel_escher", "four layers of bricks forming the impossible staircase",
              _escher, {"cell": 1.0}, {"cell": (1e-3, 1e3)}),
]
_REGISTRY = {s.name: s for s in _SCENES}


def list_scenes() -> list[SceneSpec]:
    return [_REGISTRY[k] for k in sorted(_REGISTRY)]


def get_scene(name: str) -> SceneSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise SceneError(f"unknown scene {name!r}; valid: {', '.join(sorted(_REGISTRY))}") from None


def build_scene(name: str, params: dict | None = None) -> IndexedMesh:
    spec = get_scene(name)
    p = spec.resolve(params)
    mesh = spec.builder(**p)
    return mesh.with_meta(scene=name, params=tuple(sorted(p.items())), closed=spec.closed)
