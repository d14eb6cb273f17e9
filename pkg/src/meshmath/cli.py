"""Command-line front end.

Exit codes: 0 success, 1 input or usage error, 2 validation warning (the
output file is still written).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .catalog import SceneError, build_scene, get_scene, list_scenes
from .geomcore import WELD_TOL, IndexedMesh, MeshError, ParameterError
from .io import CodecError, heightfield_to_mesh, read_pgm, read_stl, write_obj, write_scad, write_stl_ascii, write_stl_binary
from .validate import MAX_HOLE_EDGES, MeshReport, analyze, repair

FORMATS = ("stl-binary", "stl-ascii", "obj", "scad")
_EXT_FORMAT = {".obj": "obj", ".scad": "scad", ".stl": "stl-binary"}


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    resolution: int | None = None
    weld_tol: float = WELD_TOL
    format: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.resolution is not None and self.resolution < 2:
            raise UsageError(f"resolution must be >= 2, got {self.resolution}")
        if not self.weld_tol > 0:
            raise UsageError(f"weld tolerance must be positive, got {self.weld_tol}")
        if self.format is not None and self.format not in FORMATS:
            raise UsageError(f"unknown format {self.format!r}; expected one of {', '.join(FORMATS)}")


def _key_values(lines, where: str) -> dict:
    out = {}
    for n, line in lines:
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise UsageError(f"{where}{n}: expected key=value, got {line.strip()!r}")
        k, v = (s.strip() for s in text.split("=", 1))
        if not k:
            raise UsageError(f"{where}{n}: empty key")
        out[k] = v
    return out


def load_config(path: str | None, overrides: list[str]) -> CliConfig:
    """Config file first, then repeated ``--param`` pairs on top."""
    raw = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
        raw = _key_values(enumerate(text.splitlines(), 1), f"{path}:")
    cfg = CliConfig()
    try:
        if "resolution" in raw:
            cfg.resolution = int(raw.pop("resolution"))
        if "weld_tol" in raw:
            cfg.weld_tol = float(raw.pop("weld_tol"))
    except ValueError as exc:
        raise UsageError(f"config: {exc}") from None
    if "format" in raw:
        cfg.format = raw.pop("format")
    cfg.params = raw
    cfg.params.update(_key_values(((i + 1, s) for i, s in enumerate(overrides)), "--param #"))
    cfg.__post_init__()
    return cfg


def write_atomic(path: str, data: bytes):
    """Write through a temporary file in the target directory, then rename."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent if str(target.parent) else ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def encode(mesh: IndexedMesh, fmt: str, name: str = "mesh") -> bytes:
    if fmt == "stl-binary":
        return write_stl_binary(mesh)
    if fmt == "stl-ascii":
        return write_stl_ascii(mesh, name)
    if fmt == "obj":
        return write_obj(mesh)
    if fmt == "scad":
        return write_scad(mesh)
    raise UsageError(f"unknown format {fmt!r}")


def format_for(path: str, ascii_stl: bool) -> str:
    ext = Path(path).suffix.lower()
    if ext not in _EXT_FORMAT:
        raise UsageError(f"cannot infer format from {path!r}; use .stl, .obj or .scad")
    fmt = _EXT_FORMAT[ext]
    return "stl-ascii" if fmt == "stl-binary" and ascii_stl else fmt


def read_mesh(path: str) -> IndexedMesh:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return read_stl(data)
    except CodecError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _emit_report(rep: MeshReport, as_json: bool, out, extra: dict | None = None):
    if as_json:
        doc = dict(extra or {})
        doc["report"] = rep.as_dict()
        out.write(json.dumps(doc, sort_keys=True) + "\n")
    else:
        for k, v in (extra or {}).items():
            out.write(f"{k}: {v}\n")
        out.write("\n".join(rep.lines()) + "\n")


# ------------------------------------------------------------------ commands

def cmd_list(args, out) -> int:
    scenes = list_scenes()
    if args.json:
        doc = [{"name": s.name, "description": s.description, "closed": s.closed, "params": s.params}
               for s in scenes]
        out.write(json.dumps(doc, sort_keys=True) + "\n")
    else:
        for s in scenes:
            fields = [s.name] + [f"{k}={v}" for k, v in s.params.items()] + [f"# {s.description}"]
            out.write("  ".join(fields) + "\n")
    return 0


def cmd_gen(args, out) -> int:
    cfg = load_config(args.config, args.param)
    spec = get_scene(args.scene)
    params = dict(cfg.params)
    if cfg.resolution is not None and "res" in spec.params and "res" not in params:
        params["res"] = cfg.resolution
    weld_tol = args.weld_tol if args.weld_tol is not None else cfg.weld_tol
    fmt = args.format or cfg.format
    path = args.output or f"{spec.name}.{'scad' if fmt == 'scad' else 'obj' if fmt == 'obj' else 'stl'}"
    if fmt is None:
        fmt = format_for(path, False)
    mesh = repair(build_scene(spec.name, params), weld_tol)
    rep = analyze(mesh, weld_tol)
    write_atomic(path, encode(mesh, fmt, spec.name))
    _emit_report(rep, args.json, out, {"scene": spec.name, "output": path, "format": fmt})
    if not rep.ok():
        sys.stderr.write(f"warning: {spec.name} failed validation; file written anyway\n")
        return 2
    return 0


def cmd_convert(args, out) -> int:
    fmt = format_for(args.output, args.ascii)
    mesh = read_mesh(args.input)
    write_atomic(args.output, encode(mesh, fmt, Path(args.output).stem))
    if args.json:
        out.write(json.dumps({"input": args.input, "output": args.output, "format": fmt,
                              "faces": mesh.n_faces, "vertices": mesh.n_vertices}, sort_keys=True) + "\n")
    else:
        out.write(f"{args.input} -> {args.output} ({fmt}, {mesh.n_faces} faces)\n")
    return 0


def cmd_check(args, out) -> int:
    rep = analyze(read_mesh(args.input), args.weld_tol or WELD_TOL)
    _emit_report(rep, args.json, out, {"input": args.input})
    return 0 if rep.watertight and rep.orientation_consistent else 2


def cmd_repair(args, out) -> int:
    fmt = format_for(args.output, args.ascii)
    tol = args.weld_tol or WELD_TOL
    mesh = read_mesh(args.input)
    before = analyze(mesh, tol)
    fixed = repair(mesh, tol, args.max_hole)
    after = analyze(fixed, tol)
    write_atomic(args.output, encode(fixed, fmt, Path(args.output).stem))
    if args.json:
        out.write(json.dumps({"before": before.as_dict(), "after": after.as_dict(),
                              "non_orientable": list(fixed.meta["non_orientable"])}, sort_keys=True) + "\n")
    else:
        b, a = before.as_dict(), after.as_dict()
        for k in b:
            mark = "" if b[k] == a[k] else "  *"
            out.write(f"{k}: {b[k]} -> {a[k]}{mark}\n")
    return 0 if after.ok() else 2


def cmd_heightfield(args, out) -> int:
    fmt = format_for(args.output, args.ascii)
    try:
        data = Path(args.input).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror}") from None
    try:
        grid = read_pgm(data, args.pitch, args.z_scale, args.base)
    except CodecError as exc:
        raise UsageError(f"{args.input}: {exc}") from None
    mesh = repair(heightfield_to_mesh(grid))
    rep = analyze(mesh)
    write_atomic(args.output, encode(mesh, fmt, Path(args.output).stem))
    _emit_report(rep, args.json, out, {"input": args.input, "output": args.output})
    return 0 if rep.ok() else 2


# -------------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="meshmath", description="Printable meshes for mathematical objects.")
    p.add_argument("--version", action="version", version=f"meshmath {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("list", help="show the scene registry")
    s.add_argument("--json", action="store_true")
    s.set_defaults(run=cmd_list)

    s = sub.add_parser("gen", help="build, repair and write a scene")
    s.add_argument("scene")
    s.add_argument("-o", "--output")
    s.add_argument("--format", choices=FORMATS)
    s.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--config", metavar="FILE")
    s.add_argument("--weld-tol", type=float)
    s.add_argument("--json", action="store_true")
    s.set_defaults(run=cmd_gen)

    s = sub.add_parser("convert", help="re-encode an STL file (format from the output extension)")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--ascii", action="store_true", help="ASCII flavour for .stl output")
    s.add_argument("--json", action="store_true")
    s.set_defaults(run=cmd_convert)

    s = sub.add_parser("check", help="print a printability report")
    s.add_argument("input")
    s.add_argument("--weld-tol", type=float)
    s.add_argument("--json", action="store_true")
    s.set_defaults(run=cmd_check)

    s = sub.add_parser("repair", help="repair an STL file")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--ascii", action="store_true")
    s.add_argument("--weld-tol", type=float)
    s.add_argument("--max-hole", type=int, default=MAX_HOLE_EDGES)
    s.add_argument("--json", action="store_true")
    s.set_defaults(run=cmd_repair)

    s = sub.add_parser("heightfield", help="turn a PGM graymap into a solid terrain")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--pitch", type=float, default=1.0)
    s.add_argument("--z-scale", type=float, default=1.0)
    s.add_argument("--base", type=float, default=-1.0)
    s.add_argument("--ascii", action="store_true")
    s.add_argument("--json", action="store_true")
    s.set_defaults(run=cmd_heightfield)
    return p


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "weld_tol", None) is not None and not args.weld_tol > 0:
            raise UsageError(f"--weld-tol must be positive, got {args.weld_tol}")
        return args.run(args, out)
    except (UsageError, SceneError, ParameterError, CodecError, MeshError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, SceneError) and exc.args else exc
        sys.stderr.write(f"error: {msg}\n")
        return 1


def entry():
    sys.exit(main())
