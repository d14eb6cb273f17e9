"""End-to-end acceptance checks, one test per numbered criterion.

Each test prints a single PASS/FAIL line through the ``criterion`` fixture
(collected again in the terminal summary) before asserting.
"""
import io
import math
import re
import time

import numpy as np
import pytest

from meshmath.catalog import cylinder_minus_cone, dome_grid, hemisphere, kissing_centers, list_scenes, build_scene
from meshmath.cli import main
from meshmath.dynamics import detect_period, feigenbaum_delta, integrate, linear_flow, lorenz, period_doublings
from meshmath.geomcore import (
    IndexedMesh, connected_components, euler_characteristic, signed_volume, total_curvature, unit_cube, weld,
)
from meshmath.implicit import archimedean_dome_field, marching_cubes, mesh_field, tricylinder_field
from meshmath.io import (
    heightfield_to_mesh, read_pgm, read_stl, write_obj, write_scad, write_stl_ascii, write_stl_binary,
)
from meshmath.catalog import moebius_patch
from meshmath.tessellate import Polyline3, icosahedron, thicken, tube, uv_sphere
from meshmath.validate import analyze, repair

FEIGENBAUM = 4.669201609


# ------------------------------------------------------------ oracles

def monte_carlo_tricylinder(samples: int = 10_000_000, seed: int = 12345) -> tuple[float, float]:
    """Membership sampling in [-1, 1]^3; returns (volume, standard error)."""
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 1_000_000
    for _ in range(samples // chunk):
        x, y, z = rng.uniform(-1.0, 1.0, (3, chunk))
        x2, y2, z2 = x * x, y * y, z * z
        hits += int(np.count_nonzero((x2 + y2 <= 1) & (y2 + z2 <= 1) & (x2 + z2 <= 1)))
    p = hits / samples
    return 8 * p, 8 * math.sqrt(p * (1 - p) / samples)


def bisection_doublings(count: int = 4, burn_in: int = 100_000, width: float = 1e-9) -> list[float]:
    """Period-doubling parameters located only by detecting the attractor period.

    Scans upward until period 2p is seen, then bisects on "period is 2p".
    """
    out = []
    c = 0.5
    step = 2.5e-3
    for k in range(count):
        p = 2 ** k

        def doubled(c, p=p):
            return detect_period(c, burn_in=burn_in) == 2 * p

        a, b = c, c + step
        while not doubled(b):
            a, b = b, b + step
        while b - a > width:
            m = (a + b) / 2
            if doubled(m):
                b = m
            else:
                a = m
        out.append(b)
        if len(out) > 1:
            step = (out[-1] - out[-2]) / 50
        c = b
    return out


def prism_sum(h: np.ndarray, pitch: float, base: float) -> float:
    cells = (h[:-1, :-1] + h[1:, :-1] + h[:-1, 1:] + h[1:, 1:]) / 4 - base
    return float(cells.sum() * pitch ** 2)


def obj_is_valid(data: bytes, n_vertices: int, n_faces: int) -> bool:
    v = f = 0
    for line in data.decode("ascii").splitlines():
        parts = line.split()
        if parts[0] == "v":
            v += 1
            if len(parts) != 4 or not all(math.isfinite(float(x)) for x in parts[1:]):
                return False
        elif parts[0] == "f":
            f += 1
            idx = [int(x) for x in parts[1:]]
            if len(idx) != 3 or min(idx) < 1 or max(idx) > n_vertices:
                return False
        else:
            return False
    return v == n_vertices and f == n_faces


_NUM = r"-?\d+(?:\.\d*)?(?:e[-+]?\d+)?"
_SCAD = re.compile(
    rf"polyhedron\(points = \[(?:\[{_NUM},{_NUM},{_NUM}\](?:,(?=\[))?)*\], "
    r"faces = \[(?:\[\d+,\d+,\d+\](?:,(?=\[))?)*\]\);\n"
)


def scad_is_valid(data: bytes, n_vertices: int, n_faces: int) -> bool:
    text = data.decode("ascii")
    if not _SCAD.fullmatch(text):
        return False
    faces = text[text.index("faces = "):]
    ids = np.array(re.findall(r"\d+", faces), dtype=np.int64)
    return len(ids) == 3 * n_faces and (ids.max(initial=0) < n_vertices)


# ------------------------------------------------------------ criteria

def test_criterion_01_sphere_volume(criterion, tmp_path):
    out = io.StringIO()
    t0 = time.perf_counter()
    code = main(["gen", "sphere", "-o", str(tmp_path / "s.stl")], out)
    elapsed = time.perf_counter() - t0
    m = read_stl((tmp_path / "s.stl").read_bytes())
    exact = 4 * math.pi / 3
    err = abs(signed_volume(m) - exact) / exact
    ok = code == 0 and err < 0.01 and elapsed < 1.0
    criterion(1, ok, f"sphere 64x64 rel volume error {err:.2e} (< 1e-2), {elapsed:.2f} s (< 1 s)")
    assert ok


def test_criterion_02_archimedes_hemisphere(criterion):
    t0 = time.perf_counter()
    half_ball = hemisphere(64, 32)
    carved = cylinder_minus_cone(96)
    elapsed = time.perf_counter() - t0
    target = 2 * math.pi / 3
    e1 = abs(signed_volume(half_ball) - target) / target
    e2 = abs(signed_volume(carved) - target) / target
    ok = e1 < 0.01 and e2 < 0.01 and elapsed < 10
    criterion(2, ok, f"hemisphere err {e1:.2e}, cylinder-minus-cone (96^3) err {e2:.2e} vs 2pi/3, "
                     f"{elapsed:.2f} s (< 10 s)")
    assert ok


def test_criterion_03_dome_ratio(criterion):
    t0 = time.perf_counter()
    dome = marching_cubes(archimedean_dome_field(), dome_grid(128))
    elapsed = time.perf_counter() - t0
    prism = 2.0 * 2.0 * 1.0
    ratio = signed_volume(dome) / prism
    ok = abs(ratio / (2 / 3) - 1) < 0.02 and elapsed < 30
    criterion(3, ok, f"dome/prism = {ratio:.5f} (2/3 within 2%), {elapsed:.2f} s (< 30 s)")
    assert ok


def test_criterion_04_gauss_bonnet(criterion):
    t = 2 * np.pi * np.arange(96) / 96
    ring = Polyline3(np.stack([3 * np.cos(t), 3 * np.sin(t), 0 * t], 1), closed=True)
    cases = [
        ("cube", unit_cube(), 2),
        ("icosahedron", icosahedron(), 2),
        ("uv-sphere", uv_sphere(r=1, nu=32, nv=16), 2),
        ("torus tube", tube(ring, 0.7, 16), 0),
        ("thick Moebius", thicken(moebius_patch(96, 8), 0.1), 0),
    ]
    worst = 0.0
    ok = True
    for _, m, chi in cases:
        k = total_curvature(m)
        worst = max(worst, abs(k - chi))
        ok &= euler_characteristic(m) == chi and abs(k - chi) < 1e-9
    criterion(4, ok, f"max |K - chi| = {worst:.1e} over cube, icosahedron, sphere, torus, Moebius (< 1e-9)")
    assert ok


def test_criterion_05_kissing(criterion):
    m = weld(build_scene("kissing12"))
    n, _ = connected_components(m.faces, m.n_vertices)
    c = kissing_centers()
    radial = np.abs(np.linalg.norm(c, axis=1) - 2).max()
    d = np.linalg.norm(c[:, None] - c[None], axis=2)[~np.eye(12, dtype=bool)].min()
    ok = n == 13 and radial < 1e-12 and d > 2
    criterion(5, ok, f"{n} components, max |r - 2| = {radial:.1e}, min outer distance {d:.4f} (> 2)")
    assert ok


def test_criterion_06_rk4_order(criterion):
    osc = linear_flow([[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
    errs = []
    for h in (0.1, 0.05, 0.025):
        n = round(10 / h)
        end = integrate(osc, [1.0, 0.0, 0.0], h, n).points[-1]
        errs.append(np.linalg.norm(end - [math.cos(10), -math.sin(10), 0]))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    norm = np.linalg.norm(integrate(lorenz(), [0, 1, 0], 0.01, 1000).points, axis=1).max()
    ok = all(12 <= r <= 20 for r in ratios) and norm < 60
    criterion(6, ok, f"error ratios {ratios[0]:.2f}, {ratios[1]:.2f} (in [12, 20]); Lorenz max norm {norm:.1f} (< 60)")
    assert ok


def test_criterion_07_feigenbaum(criterion):
    bif = period_doublings(4)
    delta = feigenbaum_delta(bif)
    oracle = bisection_doublings(4)
    gaps = np.diff(oracle)
    # the oracle must land well inside each doubling interval
    agree = max(abs(a - b) for a, b in zip(bif, oracle))
    ok = abs(delta / FEIGENBAUM - 1) < 0.10 and agree < 0.05 * gaps.min()
    criterion(7, ok, f"delta = {delta:.4f} ({abs(delta / FEIGENBAUM - 1):.1%} from 4.669); "
                     f"bisection oracle agrees to {agree:.1e}")
    assert ok


def test_criterion_08_tricylinder(criterion):
    ref, se = monte_carlo_tricylinder()
    m = mesh_field(tricylinder_field(), 96)
    v = signed_volume(m)
    err = abs(v - ref) / ref
    ok = err < 0.02 and abs(ref - (16 - 8 * math.sqrt(2))) < 5 * se
    criterion(8, ok, f"mesh {v:.4f} vs Monte Carlo {ref:.4f} +- {se:.4f} (1e7 samples): {err:.2%} (< 2%)")
    assert ok


SAMPLE_FACET = b"""solid  Processed by ADMesh version 0.95
  facet normal  2.45300293E-01 -3.88517678E-02  9.68668342E-01
    outer loop
      vertex  1.64594591E-01  0.00000000E+00  9.86361325E-01
      vertex  1.56538755E-01 -5.08625247E-02  9.86361325E-01
      vertex  3.08807552E-01 -1.00337654E-01  9.45817232E-01
    endloop
  endfacet
"""


def test_criterion_09_codecs(criterion):
    mesh = repair(build_scene("knot_sum_tube", {"samples": 400}))
    first = write_stl_binary(mesh)
    back = read_stl(first)
    binary_ok = write_stl_binary(back) == first and read_stl(write_stl_binary(back)).same_as(
        IndexedMesh(back.vertices, back.faces))
    text_back = read_stl(write_stl_ascii(mesh, "knot"))
    d = np.abs(text_back.vertices[text_back.faces] - mesh.vertices[mesh.faces]).max()
    sample = read_stl(SAMPLE_FACET)
    facet_ok = sample.n_faces == 1 and sample.vertices.tolist() == [
        [1.64594591e-01, 0.0, 9.86361325e-01],
        [1.56538755e-01, -5.08625247e-02, 9.86361325e-01],
        [3.08807552e-01, -1.00337654e-01, 9.45817232e-01],
    ]
    ok = binary_ok and d < 1e-6 and facet_ok
    criterion(9, ok, f"binary byte-exact {binary_ok}, ASCII max deviation {d:.1e} (< 1e-6), sample facet {facet_ok}")
    assert ok


@pytest.fixture(scope="module")
def catalog_runs():
    """Every scene built twice, repaired and analyzed, with wall time."""
    t0 = time.perf_counter()
    runs = {}
    for spec in list_scenes():
        a = build_scene(spec.name)
        b = build_scene(spec.name)
        fixed = repair(a)
        runs[spec.name] = dict(same=a.same_as(b), fixed=fixed, report=analyze(fixed), closed=spec.closed)
    return runs, time.perf_counter() - t0


def test_criterion_10_repair(criterion, catalog_runs):
    cube = unit_cube()
    failures = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        mask = rng.random(12) < 0.5
        f = cube.faces.copy()
        f[mask] = f[mask][:, ::-1]
        r = analyze(repair(IndexedMesh(cube.vertices, f)))
        failures += not (r.orientation_consistent and abs(r.signed_volume - 1) < 1e-12)
    runs, _ = catalog_runs
    not_idem = [k for k, r in runs.items() if not repair(r["fixed"]).same_as(r["fixed"])]
    ok = failures == 0 and not not_idem
    criterion(10, ok, f"random-flip cubes fixed {100 - failures}/100; repair idempotent on "
                      f"{len(runs) - len(not_idem)}/{len(runs)} scenes")
    assert ok


def test_criterion_11_heightfield(criterion):
    n = 16
    vals = np.add.outer(np.arange(n) * 7, np.arange(n) * 9) + 10
    body = "\n".join(" ".join(str(v) for v in row) for row in vals)
    grid = read_pgm(f"P2\n{n} {n}\n255\n{body}\n".encode(), pitch=1.0, z_scale=4.0, base=-1.0)
    m = heightfield_to_mesh(grid)
    r = analyze(m)
    exact = prism_sum(vals / 255 * 4.0, 1.0, -1.0)
    err = abs(signed_volume(m) - exact) / exact
    ok = r.watertight and r.orientation_consistent and err < 1e-6
    criterion(11, ok, f"16x16 ramp watertight {r.watertight}, volume rel error {err:.1e} (< 1e-6)")
    assert ok


def test_criterion_12_catalog_smoke(criterion, catalog_runs):
    runs, build_time = catalog_runs
    t0 = time.perf_counter()
    bad = []
    for name, r in runs.items():
        m, rep = r["fixed"], r["report"]
        good = r["same"] and rep.degenerate_faces == 0
        if r["closed"]:
            good &= rep.ok() and rep.signed_volume > 0
            good &= abs(rep.total_curvature - rep.euler_characteristic) < 1e-9
        stl = write_stl_binary(m)
        good &= len(stl) == 84 + 50 * m.n_faces and read_stl(stl).n_faces == m.n_faces
        good &= obj_is_valid(write_obj(m), m.n_vertices, m.n_faces)
        good &= scad_is_valid(write_scad(m), m.n_vertices, m.n_faces)
        if not good:
            bad.append(name)
    total = build_time + time.perf_counter() - t0
    ok = not bad and total < 180
    criterion(12, ok, f"{len(runs) - len(bad)}/{len(runs)} scenes deterministic, clean and written "
                      f"as STL/OBJ/SCAD in {total:.1f} s (< 180 s)" + (f"; failed: {bad}" if bad else ""))
    assert ok
