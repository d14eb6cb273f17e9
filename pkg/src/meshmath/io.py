"""Mesh codecs (STL, OBJ, OpenSCAD) and PGM heightfield ingestion.

Every writer is byte-deterministic: the same mesh always gives the same bytes.
"""
from __future__ import annotations

import re
import struct
from dataclasses import dataclass

import numpy as np

from . import __version__
from .geomcore import IndexedMesh, ParameterError, degenerate_mask

BINARY_HEADER = f"meshmath {__version__}".encode("ascii").ljust(80, b" ")
_F32_MAX = float(np.finfo(np.float32).max)
_FACET = np.dtype([("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])


class CodecError(ValueError):
    pass


def _check_writable(mesh: IndexedMesh):
    mesh.check()
    if not np.all(np.isfinite(mesh.vertices)):
        raise CodecError("mesh has non-finite vertex coordinates")
    bad = np.flatnonzero(degenerate_mask(mesh))
    if len(bad):
        raise CodecError(f"face {int(bad[0])} is degenerate ({len(bad)} in total); run repair first")


def _unit_normals(tri: np.ndarray) -> np.ndarray:
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    length = np.linalg.norm(n, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        n = np.where(length > 0, n / length, 0.0)
    return n


def _num(x: float) -> str:
    return f"{x + 0.0:.7E}"  # + 0.0 folds -0.0 into 0.0


def write_stl_ascii(mesh: IndexedMesh, name: str = "mesh") -> bytes:
    _check_writable(mesh)
    if "\n" in name or "\r" in name:
        raise CodecError("solid name must be a single line")
    tri = mesh.triangles()
    normals = _unit_normals(tri)
    lines = [f"solid {name}"]
    for n, t in zip(normals, tri):
        lines.append("  facet normal " + " ".join(_num(x) for x in n))
        lines.append("    outer loop")
        for p in t:
            lines.append("      vertex " + " ".join(_num(x) for x in p))
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {name}")
    return ("\n".join(lines) + "\n").encode("ascii")


def write_stl_binary(mesh: IndexedMesh) -> bytes:
    _check_writable(mesh)
    if mesh.n_faces >= 2 ** 32:
        raise CodecError(f"{mesh.n_faces} faces do not fit a 32-bit facet count")
    if len(mesh.vertices) and np.abs(mesh.vertices).max() > _F32_MAX:
        raise CodecError("vertex coordinate overflows 32-bit float range")
    rec = np.zeros(mesh.n_faces, dtype=_FACET)
    tri = mesh.triangles().astype(np.float32)
    # normals from the stored (rounded) coordinates, so rereading reproduces them
    rec["normal"] = _unit_normals(tri.astype(np.float64)).astype(np.float32)
    rec["v"] = tri
    return BINARY_HEADER + struct.pack("<I", mesh.n_faces) + rec.tobytes()


def _from_triangles(tri: np.ndarray) -> IndexedMesh:
    """Exact-match weld of a triangle soup, vertices in first-occurrence order."""
    pts = tri.reshape(-1, 3).astype(np.float64) + 0.0
    if not len(pts):
        return IndexedMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    _, first, inverse = np.unique(pts, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return IndexedMesh(pts[first[order]], rank[inverse.reshape(-1)].reshape(-1, 3))


def _read_binary(data: bytes) -> IndexedMesh:
    if len(data) < 84:
        raise CodecError(f"binary STL needs at least 84 bytes, got {len(data)}")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) != expected:
        raise CodecError(f"binary STL with {count} facets should be {expected} bytes, got {len(data)}")
    rec = np.frombuffer(data, dtype=_FACET, count=count, offset=84)
    tri = rec["v"].astype(np.float64)
    if not np.all(np.isfinite(tri)):
        raise CodecError("binary STL holds non-finite coordinates")
    return _from_triangles(tri)


_FLOAT = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_VERTEX = re.compile(rf"vertex\s+({_FLOAT})\s+({_FLOAT})\s+({_FLOAT})\Z")
_NORMAL = re.compile(rf"facet\s+normal\s+{_FLOAT}\s+{_FLOAT}\s+{_FLOAT}\Z")


def _read_ascii(text: str) -> IndexedMesh:
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines or not (lines[0][1] == "solid" or lines[0][1].startswith(("solid ", "solid\t"))):
        raise CodecError("line 1: expected 'solid'")
    pos = 1
    tris = []

    def expect(pattern: str):
        nonlocal pos
        if pos >= len(lines):
            raise CodecError(f"line {lines[-1][0] + 1}: unexpected end of file, expected {pattern!r}")
        lineno, ln = lines[pos]
        if " ".join(ln.split()) != pattern:
            raise CodecError(f"line {lineno}: expected {pattern!r}, got {ln!r}")
        pos += 1

    while pos < len(lines):
        lineno, ln = lines[pos]
        if ln == "endsolid" or ln.startswith(("endsolid ", "endsolid\t")):
            pos += 1
            break
        if not _NORMAL.match(ln):
            raise CodecError(f"line {lineno}: expected 'facet normal' or 'endsolid', got {ln!r}")
        pos += 1
        expect("outer loop")
        tri = []
        for _ in range(3):
            if pos >= len(lines):
                raise CodecError(f"line {lines[-1][0] + 1}: unexpected end of file inside facet")
            lineno, ln = lines[pos]
            m = _VERTEX.match(ln)
            if not m:
                raise CodecError(f"line {lineno}: expected 'vertex x y z', got {ln!r}")
            tri.append([float(g) for g in m.groups()])
            pos += 1
        expect("endloop")
        expect("endfacet")
        tris.append(tri)
    # a file cut off right after a complete facet (no endsolid) is accepted
    if pos < len(lines):
        raise CodecError(f"line {lines[pos][0]}: trailing content after endsolid")
    arr = np.array(tris, dtype=np.float64).reshape(-1, 3, 3)
    if not np.all(np.isfinite(arr)):
        raise CodecError("ASCII STL holds non-finite coordinates")
    return _from_triangles(arr)


def read_stl(data: bytes) -> IndexedMesh:
    """Parse ASCII or binary STL; stored normals are ignored."""
    data = bytes(data)
    if data.lstrip()[:5] == b"solid":
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError:
            text = None
        if text is not None:
            try:
                return _read_ascii(text)
            except CodecError:
                if len(data) >= 84 and len(data) == 84 + 50 * struct.unpack_from("<I", data, 80)[0]:
                    return _read_binary(data)
                raise
        return _read_binary(data)
    return _read_binary(data)


def _dec(x: float) -> str:
    return np.format_float_positional(x + 0.0, unique=True, trim="-")


def write_scad(mesh: IndexedMesh) -> bytes:
    """One OpenSCAD ``polyhedron`` statement.

    OpenSCAD wants faces clockwise seen from outside, so windings are reversed.
    """
    mesh.check()
    if not np.all(np.isfinite(mesh.vertices)):
        raise CodecError("mesh has non-finite vertex coordinates")
    pts = ",".join("[" + ",".join(_dec(x) for x in p) + "]" for p in mesh.vertices)
    faces = ",".join("[" + ",".join(str(int(i)) for i in f[::-1]) + "]" for f in mesh.faces)
    return f"polyhedron(points = [{pts}], faces = [{faces}]);\n".encode("ascii")


def write_obj(mesh: IndexedMesh) -> bytes:
    mesh.check()
    if not np.all(np.isfinite(mesh.vertices)):
        raise CodecError("mesh has non-finite vertex coordinates")
    lines = ["v " + " ".join(repr(float(x) + 0.0) for x in p) for p in mesh.vertices]
    lines += ["f " + " ".join(str(int(i) + 1) for i in f) for f in mesh.faces]
    return "".join(ln + "\n" for ln in lines).encode("ascii")


# ------------------------------------------------------------- heightfields

@dataclass(frozen=True, eq=False)
class HeightGrid:
    """Heights in model units; row 0 is the north (max y) edge."""
    heights: np.ndarray
    pitch: float = 1.0
    base: float = -1.0

    def __post_init__(self):
        h = np.array(self.heights, dtype=np.float64)
        if h.ndim != 2 or h.shape[0] < 2 or h.shape[1] < 2:
            raise ParameterError(f"height grid must be at least 2x2, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ParameterError("height grid holds non-finite values")
        if not self.pitch > 0:
            raise ParameterError(f"pitch must be positive, got {self.pitch}")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)

    @property
    def shape(self):
        return self.heights.shape


def _pgm_header(data: bytes):
    """Magic, width, height, maxval and the payload offset."""
    fields = []
    pos = 0
    n = len(data)
    while len(fields) < 4:
        while pos < n and (data[pos:pos + 1].isspace() or data[pos:pos + 1] == b"#"):
            if data[pos:pos + 1] == b"#":
                while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                pos += 1
        if pos >= n:
            raise CodecError(f"byte {pos}: PGM header ends early")
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        fields.append((start, data[start:pos]))
    magic_at, magic = fields[0]
    if magic not in (b"P2", b"P5"):
        raise CodecError(f"byte {magic_at}: bad PGM magic {magic!r}")
    vals = []
    for at, tok in fields[1:]:
        if not tok.isdigit() or int(tok) <= 0:
            raise CodecError(f"byte {at}: expected a positive integer, got {tok!r}")
        vals.append(int(tok))
    width, height, maxval = vals
    if maxval > 65535:
        raise CodecError(f"byte {fields[3][0]}: maxval {maxval} exceeds 65535")
    return magic, width, height, maxval, pos


def read_pgm(data: bytes, pitch: float = 1.0, z_scale: float = 1.0, base: float = -1.0) -> HeightGrid:
    """P2 or P5 graymap to heights ``value / maxval * z_scale``."""
    data = bytes(data)
    magic, width, height, maxval, pos = _pgm_header(data)
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte ends the header
        size = 2 if maxval > 255 else 1
        payload = data[pos:]
        if len(payload) < count * size:
            raise CodecError(
                f"byte {pos}: P5 payload needs {count * size} bytes, got {len(payload)}")
        pix = np.frombuffer(payload, dtype=">u2" if size == 2 else "u1", count=count)
    else:
        pix = []
        for m in re.finditer(rb"#[^\r\n]*|\S+", data[pos:]):
            tok = m.group()
            if tok.startswith(b"#"):
                continue
            if not tok.isdigit():
                raise CodecError(f"byte {pos + m.start()}: bad P2 sample {tok!r}")
            pix.append(int(tok))
        if len(pix) != count:
            raise CodecError(f"byte {len(data)}: P2 payload has {len(pix)} samples, expected {count}")
        pix = np.array(pix)
    if np.any(pix > maxval):
        raise CodecError(f"sample value above maxval {maxval}")
    heights = pix.reshape(height, width).astype(np.float64) / maxval * z_scale
    return HeightGrid(heights, pitch, base)


def heightfield_to_mesh(h: HeightGrid) -> IndexedMesh:
    """Watertight terrain: top grid, four walls and a flat bottom at ``h.base``."""
    H = h.heights
    rows, cols = H.shape
    if not h.base < H.min():
        raise ParameterError(f"base {h.base} must lie below the lowest height {H.min()}")
    p = h.pitch
    rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    top = np.stack([cc * p, (rows - 1 - rr) * p, H], axis=-1).reshape(-1, 3)
    idx = np.arange(rows * cols).reshape(rows, cols)
    a, b = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()   # north-west, north-east
    c, d = idx[1:, 1:].ravel(), idx[1:, :-1].ravel()     # south-east, south-west
    faces = [np.stack([d, c, b], 1), np.stack([d, b, a], 1)]

    # boundary ring counterclockwise seen from above
    ring = np.concatenate([
        idx[-1, :], idx[-2::-1, -1], idx[0, -2::-1], idx[1:-1, 0],
    ])
    bottom = top[ring].copy()
    bottom[:, 2] = h.base
    n_top, n_ring = len(top), len(ring)
    bi = n_top + np.arange(n_ring)
    bj = np.roll(bi, -1)
    ti, tj = ring, np.roll(ring, -1)
    faces += [np.stack([bi, bj, tj], 1), np.stack([bi, tj, ti], 1)]
    centre = n_top + n_ring
    faces.append(np.stack([np.full(n_ring, centre), bj, bi], 1))
    mid = np.array([(cols - 1) * p / 2, (rows - 1) * p / 2, h.base])
    verts = np.concatenate([top, bottom, mid[None]])
    return IndexedMesh(verts, np.concatenate(faces), {"rows": rows, "cols": cols})
