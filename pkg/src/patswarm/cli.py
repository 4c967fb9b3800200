"""Command-line entry point: ``patswarm {field,solve,simulate,codec,report,rerun}``.

Exit codes are shared by every subcommand: 0 success, 1 verdict failure,
2 configuration error, 3 domain error (geometry, solver, roster, schedule).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import tempfile
from dataclasses import replace
from importlib import resources
from pathlib import Path

from . import __version__
from .acoustics.export import write_csv, write_pgm
from .errors import ConfigError, PatSwarmError
from .plotting import field_figure, scenario_figure
from .protocol import AcousticFrame, CodecError, decode, encode
from .scene import default_center, field_grid, load_scene, parse_plane, parse_targets, solve_scene
from .sim import Simulation, load_scenario

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3


def _digest(texts) -> str:
    h = hashlib.sha256()
    for t in texts:
        h.update(t.encode())
        h.update(b"\0")
    return h.hexdigest()


def _write_manifest(out: Path, subcommand: str, args: dict, configs: dict, seed=None, outputs=()):
    """Everything needed to redo the run: arguments plus the verbatim config text."""
    manifest = {
        "tool": "patswarm",
        "version": __version__,
        "subcommand": subcommand,
        "args": args,
        "seed": seed,
        "out": str(out),
        "config_paths": list(configs),
        "configs": configs,
        "config_digest": _digest(configs[k] for k in sorted(configs)),
        "outputs": sorted(outputs),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(pairs):
    for k, v in pairs:
        print(f"{k}\t{v}")


# ---- field --------------------------------------------------------------------------


def cmd_field(args) -> int:
    scene = load_scene(args.config)
    if args.targets is not None:
        scene = scene.with_targets(parse_targets(args.targets))
    plane = parse_plane(args.plane) if args.plane else scene.plane
    if plane is None:
        raise ConfigError("no sampling plane: pass --plane or set 'plane' in the scene", scene.path)
    res = args.res if args.res is not None else scene.resolution
    extent = args.extent if args.extent is not None else scene.extent
    if not res > 0:
        raise ConfigError("--res must be positive")
    sol = solve_scene(scene, args.method, args.iters)
    grid = field_grid(scene, sol, plane.grid(default_center(scene), extent, res))
    out = _out_dir(args.out)
    files = ["field.csv", "field.png"]
    write_csv(grid, out / "field.csv")
    if args.pgm:
        write_pgm(grid, out / "field.pgm")
        files.append("field.pgm")
    field_figure(grid, out / "field.png", f"|p| on {plane.u}{plane.v}@{plane.offset:g}", scene.targets)
    peak = grid.argmax_point()
    _write_manifest(out, "field", _args_dict(args), {str(args.config): scene.text}, outputs=files)
    _emit([
        ("points", grid.samples.size),
        ("max_abs_pa", f"{float(abs(grid.samples).max()):.6f}"),
        ("argmax", ",".join(f"{c:.6f}" for c in peak)),
    ])
    return EXIT_OK


# ---- solve ----------------------------------------------------------------------------


def cmd_solve(args) -> int:
    scene = load_scene(args.config)
    if args.targets is not None:
        scene = scene.with_targets(parse_targets(args.targets))
    if not scene.targets:
        raise ConfigError("solve needs at least one target (--targets or 'targets' in the scene)", scene.path)
    sol = solve_scene(scene, args.method, args.iters)
    method = args.method or scene.method
    doc = {
        "method": method,
        "iterations": args.iters if args.iters is not None else scene.iterations,
        "targets": [list(t) for t in scene.targets],
        "achieved_pa": [round(p, 6) for p in sol.achieved],
        "residual": sol.residual,
        "boards": [
            {"name": n, "phases": [round(float(v), 9) for v in d.phases], "amplitudes": [round(float(v), 9) for v in d.amplitudes]}
            for n, (_, d) in zip(sol.names, sol.arrays)
        ],
    }
    if args.quantize:
        for entry, (_, d) in zip(doc["boards"], sol.arrays):
            entry["frame_payload_hex"] = encode(AcousticFrame.from_drive(0, d), 0, 0)[10:].hex()
    out = _out_dir(args.out)
    (out / "solve.json").write_text(json.dumps(doc, indent=2) + "\n")
    _write_manifest(out, "solve", _args_dict(args), {str(args.config): scene.text}, outputs=["solve.json"])
    _emit([(f"target{k}_pa", f"{p:.6f}") for k, p in enumerate(sol.achieved)])
    if args.quantize:
        _emit([(f"frame_{b['name']}", b["frame_payload_hex"]) for b in doc["boards"]])
    return EXIT_OK


# ---- simulate ----------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    path = args.scenario or args.config
    if path is None:
        raise ConfigError("simulate needs --scenario (a path or s1/s2/s3)")
    spec = load_scenario(path)
    if args.seed is not None:
        spec = replace(spec, sim=replace(spec.sim, seed=args.seed))
    report = Simulation(spec).run()
    out = _out_dir(args.out)
    (out / "report.json").write_text(report.to_json())
    report.write_csv(out / "ticks.csv")
    scenario_figure(report.summary, report.rows, out / "scenario.png")
    _write_manifest(
        out, "simulate", _args_dict(args), {str(path): spec.source}, seed=spec.sim.seed,
        outputs=["report.json", "ticks.csv", "scenario.png"],
    )
    s = report.summary
    _emit([
        ("scenario", s["scenario"]),
        ("seed", s["seed"]),
        ("t_end", s["t_end"]),
        ("transitions", ";".join(f"{t['t']}:{t['to']}" for t in s["transitions"]) or "-"),
        ("following_max_error_m", s["following"]["max_error"]),
        ("pressure_mean_pa", s["pressure"]["mean"]),
        ("outcome", json.dumps(s["outcome"], sort_keys=True)),
        ("verdict", "success" if report.success else "failure"),
        ("reason", s["verdict"]["reason"]),
        ("digest", report.digest()),
    ])
    return EXIT_OK if report.success else EXIT_VERDICT


# ---- codec --------------------------------------------------------------------------------


def golden_vectors_path():
    return resources.files("patswarm").joinpath("data/golden_vectors.hex")


def cmd_codec(args) -> int:
    if args.file is None:
        text, name = golden_vectors_path().read_text(), "golden_vectors.hex"
    else:
        try:
            text, name = Path(args.file).read_text(), args.file
        except OSError as exc:
            raise ConfigError(exc.strerror or str(exc), args.file) from None
    checked = bad = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        checked += 1
        try:
            data = bytes.fromhex(line)
        except ValueError:
            bad += 1
            print(f"{name}:{lineno}\tBAD_HEX\tnot a hex string")
            continue
        try:
            msg, hdr = decode(data)
        except CodecError as exc:
            bad += 1
            print(f"{name}:{lineno}\t{exc.code.name}\t{exc}")
            continue
        again = encode(msg, hdr.bot_id, hdr.seq)
        if again != data:
            bad += 1
            print(f"{name}:{lineno}\tMISMATCH\tre-encoded {again.hex()}")
    _emit([("frames", checked), ("failures", bad)])
    return EXIT_OK if bad == 0 else EXIT_VERDICT


# ---- report / rerun ------------------------------------------------------------------------


def cmd_report(args) -> int:
    d = Path(args.dir)
    try:
        summary = json.loads((d / "report.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report: {exc}", d / "report.json") from None
    rows = []
    if (d / "ticks.csv").exists():
        with open(d / "ticks.csv", newline="") as fh:
            for r in csv.DictReader(fh):
                num = lambda v: None if v in ("None", "") else float(v)  # noqa: E731
                rows.append((float(r["t"]), int(r["bot_id"]), num(r["err_pos"]), num(r["err_yaw"]), num(r["p_at_target"])))
    scenario_figure(summary, rows, d / "scenario.png")
    _emit([
        ("scenario", summary["scenario"]),
        ("verdict", "success" if summary["verdict"]["success"] else "failure"),
        ("reason", summary["verdict"]["reason"]),
        ("messages_sent", summary["messages"]["sent"]),
        ("messages_lost", summary["messages"]["lost"]),
        ("messages_stale", summary["messages"]["stale"]),
        ("beads", len(summary["beads"])),
    ])
    return EXIT_OK if summary["verdict"]["success"] else EXIT_VERDICT


def cmd_rerun(args) -> int:
    """Repeat a run from its manifest alone, writing into ``--out``."""
    try:
        manifest = json.loads(Path(args.manifest).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest: {exc}", args.manifest) from None
    sub = manifest["subcommand"]
    argv = [sub]
    with tempfile.TemporaryDirectory() as tmp:
        paths = {}
        for k, (orig, text) in enumerate(sorted(manifest["configs"].items())):
            p = Path(tmp) / f"config{k}.json"
            p.write_text(text)
            paths[orig] = str(p)
        for key, value in sorted(manifest["args"].items()):
            if value is None or value is False or key in ("out", "command"):
                continue
            if key in ("config", "scenario", "file") and str(value) in paths:
                value = paths[str(value)]
            flag = f"--{key}"
            if value is True:
                argv.append(flag)
            elif key == "file":
                argv.append(str(value))
            else:
                argv += [flag, str(value)]
        argv += ["--out", args.out] if sub != "codec" else []
        return main(argv)


# ---- parser ----------------------------------------------------------------------------------


def _args_dict(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="patswarm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"patswarm {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("field", help="sample |p| on a plane and write CSV (+PGM, PNG)")
    f.add_argument("--config", default="s1", help="scene JSON path, or s1/s2/s3 (default s1)")
    f.add_argument("--plane", help="sampling plane, e.g. xy@0.05 (default: the scene's)")
    f.add_argument("--res", type=float, help="grid spacing in m")
    f.add_argument("--extent", type=float, help="square grid side in m")
    f.add_argument("--targets", help="override targets: 'x,y,z;x,y,z'")
    f.add_argument("--method", choices=("focus", "gspat", "wgs", "levitation"))
    f.add_argument("--iters", type=int)
    f.add_argument("--pgm", action="store_true", help="also write a 16-bit PGM heatmap")
    f.add_argument("--out", default="out/field")
    f.set_defaults(func=cmd_field)

    s = sub.add_parser("solve", help="compute drives for targets and report achieved |p|")
    s.add_argument("--config", default="s1", help="scene JSON path, or s1/s2/s3 (default s1)")
    s.add_argument("--targets", help="'x,y,z;x,y,z' (default: the scene's)")
    s.add_argument("--method", choices=("focus", "gspat", "wgs", "levitation"))
    s.add_argument("--iters", type=int)
    s.add_argument("--quantize", action="store_true", help="also emit the 130-byte frame payload in hex")
    s.add_argument("--out", default="out/solve")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="run a scenario end to end")
    m.add_argument("--scenario", help="scenario JSON path, or s1/s2/s3")
    m.add_argument("--config", help="alias of --scenario")
    m.add_argument("--seed", type=int)
    m.add_argument("--out", default="out/simulate")
    m.set_defaults(func=cmd_simulate)

    c = sub.add_parser("codec", help="decode and re-encode hex frames, one per line")
    c.add_argument("file", nargs="?", help="hex file (default: the shipped golden vectors)")
    c.set_defaults(func=cmd_codec)

    r = sub.add_parser("report", help="summarize a simulate output directory and redraw its figure")
    r.add_argument("dir")
    r.set_defaults(func=cmd_report)

    rr = sub.add_parser("rerun", help="repeat a run from its manifest.json")
    rr.add_argument("manifest")
    rr.add_argument("--out", required=True)
    rr.set_defaults(func=cmd_rerun)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "iters", None) is not None and args.iters < 1:
        print("error: --iters must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc.diagnostic()}", file=sys.stderr)
        return EXIT_CONFIG
    except PatSwarmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
