import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meshmath.geomcore import (
    IndexedMesh, MeshError, TopologyError, Transform, TransformError, apply_transform, box,
    degenerate_mask, empty_mesh, euler_characteristic, merge, signed_volume, surface_area,
    total_curvature, unit_cube, weld, weld_map, angle_defects,
)
from meshmath.tessellate import icosahedron, tube, uv_sphere, Polyline3


def circle(n=64, R=3.0):
    t = 2 * np.pi * np.arange(n) / n
    return Polyline3(np.stack([R * np.cos(t), R * np.sin(t), 0 * t], 1), closed=True)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def test_mesh_is_immutable():
    c = unit_cube()
    with pytest.raises(ValueError):
        c.vertices[0, 0] = 5.0
    assert c.vertices.dtype == np.float64 and c.faces.dtype == np.int64


def test_merge_empty_and_single():
    m = merge([])
    assert m.n_vertices == 0 and m.n_faces == 0
    c = unit_cube()
    assert merge([c]).same_as(c)


def test_merge_counts_and_offsets():
    c = unit_cube()
    m = merge([c, c])
    assert (m.n_vertices, m.n_faces) == (16, 24)
    assert np.array_equal(m.faces[12:], c.faces + 8)
    assert np.array_equal(m.faces[:12], c.faces)


def test_merge_names_bad_input():
    bad = IndexedMesh(np.zeros((3, 3)), [[0, 1, 5]])
    with pytest.raises(MeshError, match="merge input 1"):
        merge([unit_cube(), bad])


def test_identity_transform_bit_exact():
    c = uv_sphere((0.1, 0.2, 0.3), 1.3, 12, 7)
    assert apply_transform(c, Transform()).same_as(c)


def test_scale_and_translate():
    c = unit_cube()
    assert signed_volume(apply_transform(c, Transform(scale=2.0))) == pytest.approx(8.0, abs=1e-12)
    moved = apply_transform(c, Transform.translate((1, 0, 0)))
    assert np.allclose(moved.vertices.mean(0) - c.vertices.mean(0), (1, 0, 0))
    assert np.array_equal(moved.faces, c.faces)


def test_transform_rejects_bad_inputs():
    with pytest.raises(TransformError):
        Transform(rotation=np.diag([1.0, 1.0, 1.001]))
    with pytest.raises(TransformError):
        Transform(scale=0.0)
    with pytest.raises(TransformError):
        Transform(scale=-1.0)


def test_area_and_volume_of_cube():
    c = unit_cube()
    assert surface_area(c) == pytest.approx(6.0, abs=1e-12)
    assert signed_volume(c) == pytest.approx(1.0, abs=1e-12)
    assert signed_volume(c.flipped()) == pytest.approx(-1.0, abs=1e-12)


def test_collinear_triangle_has_zero_area():
    m = IndexedMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
    assert surface_area(m) == 0.0
    assert degenerate_mask(m).tolist() == [True]


def test_area_rejects_non_finite():
    m = IndexedMesh([[0, 0, 0], [1, 0, 0], [0, np.nan, 0]], [[0, 1, 2]])
    with pytest.raises(MeshError):
        surface_area(m)


def test_sphere_area_and_volume():
    s = uv_sphere(r=1.0, nu=64, nv=64)
    assert abs(surface_area(s) / (4 * np.pi) - 1) < 0.01
    assert abs(signed_volume(s) / (4 * np.pi / 3) - 1) < 0.01
    assert signed_volume(s) < 4 * np.pi / 3  # inscribed


def test_euler_characteristic_examples():
    c = unit_cube()
    assert euler_characteristic(c) == 2
    assert euler_characteristic(tube(circle(), 0.5, 12)) == 0
    two = merge([c, apply_transform(c, Transform.translate((3, 0, 0)))])
    assert euler_characteristic(weld(two)) == 4


def test_euler_characteristic_rejects_open_mesh():
    c = unit_cube()
    open_cube = IndexedMesh(c.vertices, c.faces[1:])
    with pytest.raises(TopologyError, match="bounds 1 faces"):
        euler_characteristic(open_cube)


def test_total_curvature_examples():
    c = unit_cube()
    assert total_curvature(c) == pytest.approx(2.0, abs=1e-12)
    d = angle_defects(c) / (2 * np.pi)
    assert np.allclose(d, 0.25)
    ico = icosahedron()
    assert np.allclose(angle_defects(ico) / (2 * np.pi), 1 / 6, atol=1e-12)
    assert total_curvature(ico) == pytest.approx(2.0, abs=1e-9)
    assert abs(total_curvature(tube(circle(), 0.5, 12))) < 1e-9


def test_weld_merges_seams_first_occurrence():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 0, 0], [-0.0, 1, 0], [0, 1, 0]], float)
    keep, remap = weld_map(pts)
    assert keep.tolist() == [0, 1, 3]
    assert remap.tolist() == [0, 1, 0, 2, 2]


def test_weld_drops_collapsed_faces():
    m = IndexedMesh([[0, 0, 0], [1, 0, 0], [1e-12, 0, 0], [0, 1, 0]], [[0, 1, 3], [0, 2, 3]])
    w = weld(m)
    assert w.n_vertices == 3 and w.n_faces == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.5, 2.0, 3.0]))
def test_measures_under_rigid_motion_and_scale(seed, s):
    rng = np.random.default_rng(seed)
    mesh = uv_sphere((0.2, -0.1, 0.3), 0.8, 10, 6)
    area, vol, chi = surface_area(mesh), signed_volume(mesh), euler_characteristic(mesh)
    rigid = Transform(random_rotation(rng), rng.normal(size=3))
    moved = apply_transform(mesh, rigid)
    assert surface_area(moved) == pytest.approx(area, rel=1e-9)
    assert signed_volume(moved) == pytest.approx(vol, rel=1e-9)
    assert euler_characteristic(moved) == chi
    scaled = apply_transform(mesh, Transform(random_rotation(rng), rng.normal(size=3), s))
    assert surface_area(scaled) == pytest.approx(area * s ** 2, rel=1e-9)
    assert signed_volume(scaled) == pytest.approx(vol * s ** 3, rel=1e-9)


def test_box_and_empty():
    b = box((-1, -2, -3), (1, 2, 3))
    assert signed_volume(b) == pytest.approx(48.0)
    assert euler_characteristic(b) == 2
    e = empty_mesh()
    assert surface_area(e) == 0.0 and signed_volume(e) == 0.0
    assert math.isclose(total_curvature(c := unit_cube()), euler_characteristic(c), abs_tol=1e-12)
