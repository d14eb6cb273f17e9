"""Printability report and a small, deterministic repair pipeline."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .geomcore import (
    WELD_TOL, IndexedMesh, angle_defects, degenerate_mask, edge_table, face_volumes, signed_volume,
    surface_area, weld_map,
)

MAX_HOLE_EDGES = 16


@dataclass(frozen=True)
class MeshReport:
    vertices: int
    edges: int
    faces: int
    welded_vertices: int
    boundary_edges: int
    nonmanifold_edges: int
    degenerate_faces: int
    components: int
    orientation_consistent: bool
    watertight: bool
    euler_characteristic: int | None
    surface_area: float
    signed_volume: float | None
    total_curvature: float | None

    def as_dict(self) -> dict:
        return asdict(self)

    def ok(self) -> bool:
        return self.watertight and self.orientation_consistent and self.degenerate_faces == 0

    def lines(self) -> list[str]:
        def fmt(v):
            if v is None:
                return "undefined"
            if isinstance(v, float):
                return f"{v:.10g}"
            return str(v)
        return [f"{k}: {fmt(v)}" for k, v in self.as_dict().items()]


def _half_edge_parity(faces: np.ndarray):
    """Edge table plus, for every half-edge, +1 if it runs low->high index."""
    edges, counts, inverse = edge_table(faces)
    half = np.stack([faces, np.roll(faces, -1, axis=1)], axis=2).reshape(-1, 2)
    sign = np.where(half[:, 0] < half[:, 1], 1, -1)
    return edges, counts, inverse, sign


def _components(faces: np.ndarray, counts, inverse):
    """Faces joined across manifold edges; returns (n, labels)."""
    from scipy.sparse.csgraph import connected_components

    m = len(faces)
    if m == 0:
        return 0, np.zeros(0, dtype=np.int64)
    he_face = np.repeat(np.arange(m), 3)
    manifold = counts[inverse] == 2
    # pair the two half-edges of each manifold edge
    order = np.argsort(inverse[manifold], kind="stable")
    hf = he_face[manifold][order]
    a, b = hf[0::2], hf[1::2]
    g = coo_matrix((np.ones(len(a)), (a, b)), shape=(m, m))
    return connected_components(g, directed=False)


def analyze(mesh: IndexedMesh, tol: float = WELD_TOL) -> MeshReport:
    mesh.check()
    keep, remap = weld_map(mesh.vertices, tol)
    wf = remap[mesh.faces] if mesh.n_faces else mesh.faces
    welded = IndexedMesh(mesh.vertices[keep], wf)
    finite = bool(np.all(np.isfinite(mesh.vertices)))
    degenerate = degenerate_mask(welded) if finite else np.ones(len(wf), bool)
    proper = wf[(wf[:, 0] != wf[:, 1]) & (wf[:, 1] != wf[:, 2]) & (wf[:, 0] != wf[:, 2])]

    edges, counts, inverse, sign = _half_edge_parity(proper)
    boundary = int(np.sum(counts == 1))
    nonmanifold = int(np.sum(counts > 2))
    # each two-face edge must be used once in each direction
    signed_use = np.bincount(inverse, weights=sign, minlength=len(edges)) if len(edges) else np.zeros(0)
    consistent = bool(np.all(signed_use[counts == 2] == 0)) and bool(np.all(np.abs(signed_use) <= 1))
    watertight = len(proper) > 0 and boundary == 0 and nonmanifold == 0
    n_comp = _components(proper, counts, inverse)[0] if len(proper) else 0

    chi = None
    if nonmanifold == 0 and len(proper):
        chi = int(len(np.unique(proper)) - len(edges) + len(proper))
    area = surface_area(mesh) if finite else float("nan")
    volume = signed_volume(mesh) if watertight and consistent and finite else None
    curvature = None
    if watertight and finite:
        used = np.unique(proper)
        curvature = float(angle_defects(IndexedMesh(welded.vertices, proper))[used].sum() / (2 * np.pi))
    return MeshReport(
        vertices=mesh.n_vertices, edges=len(edges), faces=mesh.n_faces,
        welded_vertices=len(keep), boundary_edges=boundary, nonmanifold_edges=nonmanifold,
        degenerate_faces=int(degenerate.sum()), components=int(n_comp),
        orientation_consistent=consistent, watertight=watertight,
        euler_characteristic=chi, surface_area=area, signed_volume=volume,
        total_curvature=curvature,
    )


# ------------------------------------------------------------------ repair

def _drop_bad_faces(mesh: IndexedMesh) -> np.ndarray:
    faces = mesh.faces[~degenerate_mask(mesh)]
    if not len(faces):
        return faces
    _, first = np.unique(np.sort(faces, axis=1), axis=0, return_index=True)
    return faces[np.sort(first)]


def _orient(faces: np.ndarray):
    """Flood orientation from the lowest face of each manifold-connected component.

    Returns (faces, labels, bad) where ``bad`` lists components whose flood hit
    a contradiction; those keep their input winding.
    """
    m = len(faces)
    edges, counts, inverse, sign = _half_edge_parity(faces)
    n_comp, labels = _components(faces, counts, inverse)
    he_face = np.repeat(np.arange(m), 3)
    manifold = counts[inverse] == 2
    order = np.argsort(inverse[manifold], kind="stable")
    hf = he_face[manifold][order]
    hs = sign[manifold][order]
    a, b = hf[0::2], hf[1::2]
    # same direction on a shared edge means one face must flip relative to the other
    parity = (hs[0::2] == hs[1::2]).astype(np.int8)

    root = m
    roots = np.full(n_comp, m, dtype=np.int64)
    np.minimum.at(roots, labels, np.arange(m))
    rows = np.concatenate([a, b, np.full(n_comp, root)])
    cols = np.concatenate([b, a, roots])
    data = np.concatenate([parity, parity, np.zeros(n_comp, np.int8)]).astype(np.int64) + 1
    g = csr_matrix((data, (rows, cols)), shape=(m + 1, m + 1))
    bfs, pred = breadth_first_order(g, root, directed=True, return_predecessors=True)

    # parity of each tree edge, looked up by (low, high) face pair
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keys = lo * (m + 1) + hi
    srt = np.argsort(keys)
    nodes = bfs[1:]
    parents = pred[nodes]
    tree = np.zeros(len(nodes), dtype=np.int8)
    inner = parents != root
    q = np.minimum(nodes, parents)[inner] * (m + 1) + np.maximum(nodes, parents)[inner]
    tree[inner] = parity[srt[np.searchsorted(keys[srt], q)]]
    flip_l = [0] * (m + 1)
    for node, par, t in zip(nodes.tolist(), parents.tolist(), tree.tolist()):
        flip_l[node] = flip_l[par] ^ t if par != root else 0
    flip = np.array(flip_l[:m], dtype=np.int8)
    clash = (flip[a] ^ flip[b]) != parity
    bad = np.unique(labels[a[clash]])
    flip[np.isin(labels, bad)] = 0
    out = faces.copy()
    out[flip == 1] = out[flip == 1][:, ::-1]
    return out, labels, bad


def _fill_holes(verts: np.ndarray, faces: np.ndarray, max_edges: int):
    """Centroid fans over small boundary loops; returns (verts, faces, filled, skipped)."""
    edges, counts, inverse = edge_table(faces)
    half = np.stack([faces, np.roll(faces, -1, axis=1)], axis=2).reshape(-1, 2)
    border = half[counts[inverse] == 1]
    if not len(border):
        return verts, faces, 0, 0
    # the fill runs each boundary edge backwards
    nxt: dict[int, list[int]] = {}
    for a, b in border:
        nxt.setdefault(int(b), []).append(int(a))
    pinched = {v for v, outs in nxt.items() if len(outs) > 1}
    seen = set()
    new_verts, new_faces = [], []
    filled = skipped = 0
    for start in sorted(nxt):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        ok = start not in pinched
        v = start
        while True:
            outs = nxt.get(v)
            if not outs:
                ok = False
                break
            v = outs[0]
            if v == start:
                break
            if v in seen:
                ok = False
                break
            seen.add(v)
            loop.append(v)
            if v in pinched:
                ok = False
        if not ok or len(loop) > max_edges:
            skipped += 1
            continue
        ring = verts[loop]
        c = ring.mean(axis=0)
        fan = np.cross(ring - c, np.roll(ring, -1, axis=0) - c)
        if np.any(np.linalg.norm(fan, axis=1) <= 1e-12 * np.max(np.sum((ring - c) ** 2, axis=1))):
            skipped += 1
            continue
        ci = len(verts) + len(new_verts)
        new_verts.append(c)
        for i in range(len(loop)):
            new_faces.append([loop[i], loop[(i + 1) % len(loop)], ci])
        filled += 1
    if new_verts:
        verts = np.concatenate([verts, np.array(new_verts)])
        faces = np.concatenate([faces, np.array(new_faces, dtype=np.int64)])
    return verts, faces, filled, skipped


def repair(mesh: IndexedMesh, tol: float = WELD_TOL, max_hole_edges: int = MAX_HOLE_EDGES) -> IndexedMesh:
    """Weld, drop degenerate and duplicate faces, orient, fill small holes, fix signs.

    Deterministic and idempotent.  Components whose orientation flood is
    contradictory (non-orientable) keep their winding and are listed in
    ``meta['non_orientable']``.
    """
    mesh.check()
    if not np.all(np.isfinite(mesh.vertices)):
        raise ValueError("cannot repair a mesh with non-finite vertices")
    keep, remap = weld_map(mesh.vertices, tol)
    verts = mesh.vertices[keep]
    faces = remap[mesh.faces] if mesh.n_faces else mesh.faces
    n_in = len(faces)
    faces = _drop_bad_faces(IndexedMesh(verts, faces))
    dropped = n_in - len(faces)
    bad = np.zeros(0, dtype=np.int64)
    filled = skipped = flipped = 0
    if len(faces):
        faces, labels, bad = _orient(faces)
        verts, faces, filled, skipped = _fill_holes(verts, faces, max_hole_edges)
        # sign fix only where the volume means something: closed, consistently wound parts
        edges, counts, inverse, sign = _half_edge_parity(faces)
        n_comp, labels = _components(faces, counts, inverse)
        he_label = np.repeat(labels, 3)
        open_comp = np.zeros(n_comp, dtype=bool)
        np.logical_or.at(open_comp, he_label, counts[inverse] != 2)
        signed_use = np.bincount(inverse, weights=sign, minlength=len(edges))
        np.logical_or.at(open_comp, he_label, signed_use[inverse] != 0)
        vol = np.bincount(labels, weights=face_volumes(IndexedMesh(verts, faces)), minlength=n_comp)
        flip = ~open_comp & (vol < 0)
        flipped = int(flip.sum())
        sel = flip[labels]
        faces[sel] = faces[sel][:, ::-1]
    # keep only referenced vertices, in their existing order
    used = np.zeros(len(verts), dtype=bool)
    used[faces.ravel()] = True
    renum = np.cumsum(used) - 1
    out = IndexedMesh(verts[used], renum[faces] if len(faces) else faces, dict(mesh.meta))
    return out.with_meta(
        repair_dropped_faces=int(dropped), repair_holes_filled=int(filled),
        repair_holes_skipped=int(skipped), repair_components_flipped=flipped,
        non_orientable=tuple(int(b) for b in bad),
    )
