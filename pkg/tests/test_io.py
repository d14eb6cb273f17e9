import re
import struct

import numpy as np
import pytest

from meshmath.geomcore import IndexedMesh, ParameterError, empty_mesh, euler_characteristic, signed_volume, unit_cube
from meshmath.io import (
    BINARY_HEADER, CodecError, HeightGrid, heightfield_to_mesh, read_pgm, read_stl, write_obj,
    write_scad, write_stl_ascii, write_stl_binary,
)
from meshmath.tessellate import icosahedron, uv_sphere
from meshmath.validate import analyze

TRI = IndexedMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])

SAMPLE_FACET = b"""solid  Processed by ADMesh version 0.95
  facet normal  2.45300293E-01 -3.88517678E-02  9.68668342E-01
    outer loop
      vertex  1.64594591E-01  0.00000000E+00  9.86361325E-01
      vertex  1.56538755E-01 -5.08625247E-02  9.86361325E-01
      vertex  3.08807552E-01 -1.00337654E-01  9.45817232E-01
    endloop
  endfacet
"""


def oriented_triangles(m):
    """Face coordinates, each rotated to start at its lexicographically smallest corner."""
    tri = m.vertices[m.faces]
    out = []
    for t in tri:
        k = min(range(3), key=lambda i: tuple(t[i]))
        out.append(np.roll(t, -k, axis=0).ravel())
    out = np.array(out)
    return out[np.lexsort(out.T[::-1])]


# ------------------------------------------------------------------ STL

def test_ascii_single_triangle():
    text = write_stl_ascii(TRI, "tri").decode()
    assert "facet normal 0.0000000E+00 0.0000000E+00 1.0000000E+00" in text
    assert text.startswith("solid tri\n") and text.endswith("endsolid tri\n")


def test_ascii_empty():
    assert write_stl_ascii(empty_mesh(), "e") == b"solid e\nendsolid e\n"


def test_ascii_grammar():
    lines = write_stl_ascii(icosahedron(), "ico").decode().splitlines()
    num = r"-?\d\.\d{7}E[-+]\d\d"
    assert lines[0] == "solid ico" and lines[-1] == "endsolid ico"
    body = lines[1:-1]
    assert len(body) == 7 * 20
    for i in range(0, len(body), 7):
        assert re.fullmatch(rf"  facet normal {num} {num} {num}", body[i])
        assert body[i + 1] == "    outer loop"
        for j in range(3):
            assert re.fullmatch(rf"      vertex {num} {num} {num}", body[i + 2 + j])
        assert body[i + 5:i + 7] == ["    endloop", "  endfacet"]


def test_ascii_round_trip():
    c = unit_cube()
    back = read_stl(write_stl_ascii(c))
    assert back.n_faces == 12 and back.n_vertices == 8
    s = uv_sphere((0.1, -0.2, 0.3), 1.7, 24, 12)
    back = read_stl(write_stl_ascii(s))
    assert back.n_vertices == s.n_vertices
    d = np.linalg.norm(s.vertices[:, None] - back.vertices[None], axis=2)
    near = d.argmin(axis=1)
    assert np.abs(back.vertices[near] - s.vertices).max() < 1e-6
    mapped = IndexedMesh(back.vertices, near[s.faces])
    assert np.array_equal(oriented_triangles(mapped), oriented_triangles(back))


def test_binary_sizes():
    assert len(write_stl_binary(unit_cube())) == 684
    e = write_stl_binary(empty_mesh())
    assert len(e) == 84 and struct.unpack_from("<I", e, 80)[0] == 0
    assert e[:80] == BINARY_HEADER


def test_binary_round_trip_is_identity():
    c = unit_cube()
    back = read_stl(write_stl_binary(c))
    assert back.n_vertices == 8 and back.n_faces == 12
    assert np.array_equal(oriented_triangles(back), oriented_triangles(c))
    assert np.array_equal(np.unique(back.vertices, axis=0), np.unique(c.vertices, axis=0))
    s = uv_sphere((0.1, -0.2, 0.3), 1.7, 24, 12)
    first = write_stl_binary(s)
    m = read_stl(first)
    assert write_stl_binary(m) == first
    again = read_stl(write_stl_binary(m))
    assert again.same_as(IndexedMesh(m.vertices, m.faces))


def test_sample_facet_parses_exactly():
    m = read_stl(SAMPLE_FACET)
    assert m.n_faces == 1
    assert m.vertices[0].tolist() == [1.64594591e-01, 0.0, 9.86361325e-01]
    assert m.vertices[2].tolist() == [3.08807552e-01, -1.00337654e-01, 9.45817232e-01]


def test_truncated_binary_errors():
    data = write_stl_binary(TRI)[:83]
    with pytest.raises(CodecError, match="84 bytes"):
        read_stl(data)
    with pytest.raises(CodecError, match="should be"):
        read_stl(write_stl_binary(unit_cube())[:-1])


def test_bad_ascii_reports_line():
    bad = b"solid x\n  facet normal 0 0 1\n    outer loop\n      vertex 0 0\n"
    with pytest.raises(CodecError, match="line 4"):
        read_stl(bad)


def test_binary_with_solid_header_is_read_as_binary():
    data = bytearray(write_stl_binary(unit_cube()))
    data[:10] = b"solid cube"
    assert read_stl(bytes(data)).n_faces == 12


def test_writers_refuse_degenerate_faces():
    m = IndexedMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
    with pytest.raises(CodecError, match="degenerate"):
        write_stl_binary(m)
    with pytest.raises(CodecError, match="degenerate"):
        write_stl_ascii(m)


# ------------------------------------------------------------------ SCAD

def parse_scad(text: str):
    """Tiny recursive-descent checker for one polyhedron statement."""
    toks = re.findall(r"[A-Za-z_]\w*|-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?|[\[\](),;=]|\S", text)
    pos = 0

    def eat(t=None):
        nonlocal pos
        tok = toks[pos]
        if t is not None and tok != t:
            raise SyntaxError(f"expected {t!r}, got {tok!r} at token {pos}")
        pos += 1
        return tok

    def value():
        if toks[pos] == "[":
            eat("[")
            items = []
            if toks[pos] != "]":
                items.append(value())
                while toks[pos] == ",":
                    eat(",")
                    items.append(value())
            eat("]")
            return items
        return float(eat())

    eat("polyhedron")
    eat("(")
    args = {}
    while True:
        key = eat()
        eat("=")
        args[key] = value()
        if toks[pos] == ")":
            break
        eat(",")
    eat(")")
    eat(";")
    if pos != len(toks):
        raise SyntaxError("trailing tokens")
    return args


def test_scad_cube_and_empty():
    args = parse_scad(write_scad(unit_cube()).decode())
    assert len(args["points"]) == 8 and len(args["faces"]) == 12
    assert write_scad(empty_mesh()) == b"polyhedron(points = [], faces = []);\n"


def test_scad_tetrahedron_parses():
    tet = IndexedMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
                      [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    args = parse_scad(write_scad(tet).decode())
    assert np.array_equal(np.array(args["points"]), tet.vertices)
    # clockwise from outside: each face comes out reversed
    assert np.array_equal(np.array(args["faces"], int), tet.faces[:, ::-1])


# ------------------------------------------------------------------- OBJ

def parse_obj(text: str) -> IndexedMesh:
    v, f = [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            v.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            f.append([int(x.split("/")[0]) - 1 for x in parts[1:]])
    return IndexedMesh(v, f)


def test_obj_triangle_and_cube():
    text = write_obj(TRI).decode()
    assert text.count("\nv ") + text.startswith("v ") == 3
    assert "f 1 2 3\n" in text
    cube = write_obj(unit_cube()).decode().splitlines()
    assert sum(ln.startswith("v ") for ln in cube) == 8
    assert sum(ln.startswith("f ") for ln in cube) == 12


def test_obj_oracle_round_trip():
    s = uv_sphere((0.1, -0.2, 0.3), 1.7, 24, 12)
    back = parse_obj(write_obj(s).decode())
    assert back.same_as(IndexedMesh(s.vertices, s.faces))


def test_text_writers_end_with_one_newline():
    for data in (write_obj(unit_cube()), write_scad(unit_cube()), write_stl_ascii(unit_cube())):
        assert data.endswith(b"\n") and not data.endswith(b"\n\n")
    assert write_obj(unit_cube()) == write_obj(unit_cube())


# ------------------------------------------------------------------- PGM

def test_pgm_p2_constant():
    g = read_pgm(b"P2\n# comment\n2 2\n7\n7 7\n7 7\n")
    assert g.heights.tolist() == [[1.0, 1.0], [1.0, 1.0]]


def test_pgm_p5_scaling():
    data = b"P5 2 2 255\n" + bytes([0, 128, 255, 0])
    g = read_pgm(data, z_scale=2.0)
    assert g.heights[0, 1] == 128 / 255 * 2.0
    wide = b"P5 2 2 1000\n" + b"".join(v.to_bytes(2, "big") for v in (500, 1000, 0, 250))
    assert read_pgm(wide).heights.tolist() == [[0.5, 1.0], [0.0, 0.25]]


def test_pgm_errors():
    with pytest.raises(CodecError, match="payload"):
        read_pgm(b"P5 3 3 255\n" + bytes(5))
    with pytest.raises(CodecError, match="magic"):
        read_pgm(b"P6 1 1 255\n\x00")
    with pytest.raises(CodecError, match="expected 4"):
        read_pgm(b"P2 2 2 9 1 2 3")
    with pytest.raises(CodecError, match="maxval"):
        read_pgm(b"P2 1 1 3 9")


def test_heightfield_unit_cube():
    m = heightfield_to_mesh(HeightGrid(np.ones((2, 2)), 1.0, 0.0))
    assert signed_volume(m) == pytest.approx(1.0, abs=1e-12)
    assert euler_characteristic(m) == 2


def ramp_pgm(n=16, maxval=255):
    vals = np.add.outer(np.arange(n) * 7, np.arange(n) * 9) + 10
    body = "\n".join(" ".join(str(v) for v in row) for row in vals)
    return f"P2\n{n} {n}\n{maxval}\n{body}\n".encode(), vals / maxval


def prism_sum(h, pitch, base):
    cells = (h[:-1, :-1] + h[1:, :-1] + h[:-1, 1:] + h[1:, 1:]) / 4 - base
    return float(cells.sum() * pitch ** 2)


def test_heightfield_ramp_matches_prism_sum():
    data, h = ramp_pgm()
    g = read_pgm(data, pitch=0.5, z_scale=3.0, base=-1.0)
    m = heightfield_to_mesh(g)
    rep = analyze(m)
    assert rep.watertight and rep.orientation_consistent
    exact = prism_sum(h * 3.0, 0.5, -1.0)
    assert abs(signed_volume(m) / exact - 1) < 1e-6


def test_heightfield_random_grids_are_spheres():
    rng = np.random.default_rng(5)
    for shape in [(2, 3), (5, 4), (9, 9)]:
        m = heightfield_to_mesh(HeightGrid(rng.uniform(0, 1, shape), 0.7, -0.5))
        assert euler_characteristic(m) == 2
        assert signed_volume(m) > 0


def test_heightfield_base_must_be_below():
    with pytest.raises(ParameterError, match="base"):
        heightfield_to_mesh(HeightGrid(np.ones((2, 2)), 1.0, 1.0))
    with pytest.raises(ParameterError):
        HeightGrid(np.ones((1, 4)))
