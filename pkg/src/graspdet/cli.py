"""Command-line pipeline.

Subcommands: synth (synthetic scene bundle), gt-avh (ground-truth heatmap
from annotations), detect (heatmap + depth -> grasps), eval (AP report),
nms (deduplicate a grasp file), bench (timing report across kernel
backends). Every run writes a manifest JSON recording inputs, resolved
settings, seed, and per-stage wall times.

Exit codes: 0 success, 2 malformed file, 3 dimension mismatch, 1 other
errors. Settings resolve as defaults < --config JSON < explicit flags.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import formats, kernels
from .avh import ground_truth_avh, random_avh, read_avh, write_avh
from .camera import (
    DEFAULT_INTRINSICS,
    GridMap,
    backproject,
    load_depth_pgm,
    save_depth_pgm,
)
from .errors import DimensionMismatch, FormatError
from .fas import (
    FASConfig,
    GripperConfig,
    default_cell_size,
    detect,
    gripper_obj,
)
from .geometry import OrientationTable
from .metrics import DEFAULT_FRICTIONS, compute_ap, label_grasps
from .nms import NMSConfig, gpnms
from .scenegen import (
    oracle_grasps,
    random_scene,
    render_depth,
    sample_surface_cloud,
    save_scene,
)
from .spatial import build_index

_CONFIG_KEYS = (
    "gripper",
    "widths",
    "offsets",
    "threshold",
    "top_k",
    "v_count",
    "a_count",
    "stride",
    "cell_size",
    "threads",
    "nms_trans",
    "nms_rot",
    "frictions",
    "k_max",
    "normals_k",
    "density",
    "objects",
    "grasps_per_object",
)

_DEFAULTS = {
    "threshold": 0.3,
    "top_k": 1024,
    "v_count": 60,
    "a_count": 6,
    "stride": 4,
    "cell_size": None,
    "threads": 1,
    "nms_trans": 0.03,
    "nms_rot": 30.0,  # degrees on the CLI
    "frictions": ",".join(str(m) for m in DEFAULT_FRICTIONS),
    "k_max": 50,
    "normals_k": 10,
    "density": 2e5,
    "objects": 3,
    "grasps_per_object": 8,
    "gripper": None,
    "widths": None,
    "offsets": None,
}


def _parse_csv_floats(text):
    return np.array([float(x) for x in str(text).split(",")])


def _resolve_settings(args):
    """defaults < config file < explicit flags."""
    config = {}
    if getattr(args, "config", None):
        with open(args.config) as f:
            config = json.load(f)
    resolved = {}
    overrides = {}
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
            overrides[key] = flag
        elif key in config:
            resolved[key] = config[key]
            overrides[key] = config[key]
        else:
            resolved[key] = _DEFAULTS[key]
    args.settings = resolved
    args.overrides = overrides
    return resolved


def _gripper_from(settings) -> GripperConfig:
    spec = settings["gripper"]
    if spec is None:
        return GripperConfig()
    vals = [float(x) for x in str(spec).split(",")]
    if len(vals) != 5:
        raise ValueError("--gripper expects h,l,w_max,t_f,b_d in meters")
    return GripperConfig(*vals)


def _fas_cfg_from(settings) -> FASConfig:
    kw = {}
    if settings["widths"] is not None:
        kw["widths"] = _parse_csv_floats(settings["widths"])
    if settings["offsets"] is not None:
        kw["offsets"] = _parse_csv_floats(settings["offsets"])
    return FASConfig(**kw)


class Stages:
    def __init__(self):
        self.timings = {}
        self._t = time.perf_counter()

    def mark(self, name):
        now = time.perf_counter()
        self.timings[name] = round((now - self._t) * 1000.0, 3)
        self._t = now


def _write_manifest(args, inputs, outputs, timings, extra=None):
    manifest = {
        "command": args.command,
        "inputs": inputs,
        "overrides": getattr(args, "overrides", {}),
        "seed": getattr(args, "seed", None),
        "timings_ms": timings,
        "outputs": [str(p) for p in outputs],
    }
    if extra:
        manifest.update(extra)
    path = args.manifest
    if path is None:
        base = Path(outputs[0]) if outputs else Path("run")
        path = base.parent / (base.stem + ".manifest.json") if base.suffix else base / "manifest.json"
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")


def _load_avh_source(spec, settings, intr, table, grid):
    """file:PATH | random:SEED:DENSITY | oracle:ANNOTATIONS_PATH"""
    kind, _, rest = str(spec).partition(":")
    if kind == "file":
        return read_avh(rest)
    if kind == "random":
        seed_s, _, dens_s = rest.partition(":")
        return random_avh(
            table.v_count, table.a_count, grid.g_h, grid.g_w, int(seed_s), float(dens_s)
        )
    if kind == "oracle":
        anns = formats.read_annotations(rest)
        return ground_truth_avh(anns, intr, table, grid)
    raise ValueError(f"bad --avh-source {spec!r}; expected file:|random:|oracle:")


# ---------------------------------------------------------------------------


def cmd_synth(args):
    settings = _resolve_settings(args)
    if int(settings["objects"]) < 0:
        raise ValueError(f"--objects must be >= 0, got {settings['objects']}")
    gripper = _gripper_from(settings)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    intr = formats.load_intrinsics(args.intrinsics) if args.intrinsics else DEFAULT_INTRINSICS

    stages = Stages()
    table_z = None if args.no_table else args.table_z
    scene = random_scene(args.seed, int(settings["objects"]), intr, table_z)
    stages.mark("scene")
    depth = render_depth(scene, intr)
    stages.mark("render")
    cloud = sample_surface_cloud(scene, float(settings["density"]), args.seed)
    stages.mark("cloud")
    anns = oracle_grasps(scene, gripper, int(settings["grasps_per_object"]), args.seed)
    stages.mark("grasps")

    save_scene(scene, out / "scene.json")
    save_depth_pgm(depth, out / "depth.pgm")
    np.save(out / "cloud.npy", cloud)
    formats.write_annotations(out / "annotations.jsonl", anns)
    formats.save_intrinsics(intr, out / "intrinsics.json")
    stages.mark("write")

    outputs = [out / n for n in ("scene.json", "depth.pgm", "cloud.npy", "annotations.jsonl", "intrinsics.json")]
    if args.manifest is None:
        args.manifest = out / "manifest.json"
    _write_manifest(
        args,
        {"intrinsics": args.intrinsics},
        outputs,
        stages.timings,
        {"n_primitives": len(scene.primitives), "n_annotations": len(anns)},
    )
    print(f"synth: {len(scene.primitives)} primitives, {len(anns)} oracle grasps -> {out}")
    return 0


def cmd_gt_avh(args):
    settings = _resolve_settings(args)
    intr = formats.load_intrinsics(args.intrinsics)
    grid = GridMap.for_image(intr.width, intr.height, int(settings["stride"]))
    table = OrientationTable.build(int(settings["v_count"]), int(settings["a_count"]))

    stages = Stages()
    anns = formats.read_annotations(args.annotations)
    stages.mark("load")
    avh = ground_truth_avh(anns, intr, table, grid)
    stages.mark("label")
    write_avh(avh, args.out)
    stages.mark("write")

    _write_manifest(
        args,
        {"annotations": args.annotations, "intrinsics": args.intrinsics},
        [args.out],
        stages.timings,
        {"positive_bins": int((avh.data > 0).sum())},
    )
    print(f"gt-avh: {len(anns)} annotations -> {int((avh.data > 0).sum())} positive bins")
    return 0


def cmd_detect(args):
    settings = _resolve_settings(args)
    gripper = _gripper_from(settings)
    fas_cfg = _fas_cfg_from(settings)
    intr = formats.load_intrinsics(args.intrinsics)
    grid = GridMap.for_image(intr.width, intr.height, int(settings["stride"]))
    table = OrientationTable.build(int(settings["v_count"]), int(settings["a_count"]))

    stages = Stages()
    depth = load_depth_pgm(args.depth)
    avh = _load_avh_source(args.avh_source, settings, intr, table, grid)
    stages.mark("load")

    timings = {}
    grasps = detect(
        avh,
        depth,
        intr,
        grid,
        table,
        fas_cfg,
        gripper,
        threshold=float(settings["threshold"]),
        top_k=int(settings["top_k"]),
        cell_size=settings["cell_size"],
        backend=args.backend,
        threads=int(settings["threads"]),
        use_index=not args.brute,
        timings=timings,
    )
    for name, secs in timings.items():
        stages.timings[name] = round(secs * 1000.0, 3)

    if args.nms:
        cfg = NMSConfig(float(settings["nms_trans"]), np.deg2rad(float(settings["nms_rot"])))
        grasps = gpnms(grasps, cfg)
        stages.mark("nms")

    formats.write_grasps(args.out, grasps)
    outputs = [args.out]
    if args.export_obj:
        with open(args.export_obj, "w") as f:
            f.write(gripper_obj([p for p, _ in grasps[:16]], gripper))
        outputs.append(args.export_obj)
    stages.mark("write")

    _write_manifest(
        args,
        {"depth": args.depth, "intrinsics": args.intrinsics, "avh_source": args.avh_source},
        outputs,
        stages.timings,
        {"n_grasps": len(grasps), "backend": args.backend or kernels.DEFAULT_BACKEND},
    )
    print(f"detect: {len(grasps)} grasps -> {args.out}")
    return 0


def cmd_eval(args):
    settings = _resolve_settings(args)
    gripper = _gripper_from(settings)
    frictions = _parse_csv_floats(settings["frictions"])

    stages = Stages()
    grasps = formats.read_grasps(args.grasps)
    grasps = sorted(grasps, key=lambda gc: -gc[1])
    if args.cloud:
        cloud = np.load(args.cloud)
    else:
        if not (args.depth and args.intrinsics):
            raise ValueError("eval needs --cloud or both --depth and --intrinsics")
        intr = formats.load_intrinsics(args.intrinsics)
        cloud = backproject(load_depth_pgm(args.depth), intr)
    stages.mark("load")

    fas_cfg = _fas_cfg_from(settings)
    index = build_index(cloud, settings["cell_size"] or default_cell_size(gripper, fas_cfg))
    labels = label_grasps(
        grasps, cloud, index, gripper, frictions, normals_k=int(settings["normals_k"])
    )
    stages.mark("label")
    report = compute_ap(labels, frictions, int(settings["k_max"]))
    formats.save_report(report, args.out)
    stages.mark("score")

    _write_manifest(
        args,
        {"grasps": args.grasps, "depth": args.depth, "cloud": args.cloud},
        [args.out],
        stages.timings,
        {"n_grasps": len(grasps), "ap": report.ap},
    )
    print(f"eval: ap={report.ap:.4f} over {len(grasps)} grasps -> {args.out}")
    return 0


def cmd_nms(args):
    settings = _resolve_settings(args)
    stages = Stages()
    grasps = formats.read_grasps(args.grasps)
    cfg = NMSConfig(float(settings["nms_trans"]), np.deg2rad(float(settings["nms_rot"])))
    kept = gpnms(grasps, cfg)
    stages.mark("nms")
    formats.write_grasps(args.out, kept)
    stages.mark("write")
    _write_manifest(args, {"grasps": args.grasps}, [args.out], stages.timings,
                    {"n_in": len(grasps), "n_out": len(kept)})
    print(f"nms: {len(grasps)} -> {len(kept)} grasps")
    return 0


def cmd_bench(args):
    settings = _resolve_settings(args)
    gripper = _gripper_from(settings)
    fas_cfg = _fas_cfg_from(settings)
    intr_d = DEFAULT_INTRINSICS.to_dict()
    intr_d.update(width=args.width, height=args.height,
                  cx=args.width / 2.0, cy=args.height / 2.0)
    from .camera import Intrinsics

    intr = Intrinsics.from_dict(intr_d)
    grid = GridMap.for_image(intr.width, intr.height, int(settings["stride"]))
    table = OrientationTable.build(int(settings["v_count"]), int(settings["a_count"]))

    scene = random_scene(args.seed, int(settings["objects"]), intr, table_z=0.6)
    depth = render_depth(scene, intr)
    n_points = int((depth.data > 0).sum())
    n_bins = table.n_classes * grid.g_h * grid.g_w
    density = min(4.0 * args.candidates / n_bins, 1.0)
    avh = random_avh(table.v_count, table.a_count, grid.g_h, grid.g_w, args.seed, density)

    modes = args.modes.split(",") if args.modes else [
        f"{b}+{p}" for b in kernels.available_backends() for p in ("index", "brute")
    ]
    results = {}
    reference = None
    for mode in modes:
        backend, _, path = mode.partition("+")
        runs = []
        stage_runs = []
        grasp_sig = None
        for _ in range(args.reps):
            timings = {}
            t0 = time.perf_counter()
            grasps = detect(
                avh, depth, intr, grid, table, fas_cfg, gripper,
                threshold=1e-6, top_k=args.candidates,
                backend=backend, threads=int(settings["threads"]),
                use_index=(path != "brute"), timings=timings,
            )
            runs.append((time.perf_counter() - t0) * 1000.0)
            stage_runs.append(timings)
            sig = [(round(float(p.translation[0]), 9), round(p.width, 6)) for p, _ in grasps]
            if grasp_sig is None:
                grasp_sig = sig
            elif grasp_sig != sig:
                raise RuntimeError(f"nondeterministic output in mode {mode}")
        if reference is None:
            reference = grasp_sig
        elif grasp_sig != reference:
            raise RuntimeError(f"mode {mode} disagrees with {modes[0]}")
        med_stages = {
            k: round(statistics.median(r[k] for r in stage_runs) * 1000.0, 3)
            for k in stage_runs[0]
        }
        results[mode] = {
            "detect_ms_median": round(statistics.median(runs), 3),
            "stages_ms_median": med_stages,
            "n_grasps": len(reference),
        }
        print(f"bench {mode:>16}: detect median {results[mode]['detect_ms_median']:9.2f} ms")

    report = {
        "scene_points": n_points,
        "candidates": args.candidates,
        "reps": args.reps,
        "image": [intr.width, intr.height],
        "modes": results,
    }
    if args.out:
        with open(args.out, "w") as f:
            json.dump(report, f, indent=2)
            f.write("\n")
    _write_manifest(
        args, {"seed": args.seed}, [args.out] if args.out else [], {}, {"bench": report}
    )
    print(f"bench: {n_points} cloud points, {args.candidates} candidates, reps={args.reps}")
    return 0


# ---------------------------------------------------------------------------


def _add_common(p, seed_default=0):
    p.add_argument("--config", help="JSON file with default settings")
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--manifest", help="manifest path (default: alongside --out)")
    p.add_argument("--gripper", help="h,l,w_max,t_f,b_d in meters")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graspdet", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene bundle")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--objects", type=int, default=None)
    p.add_argument("--intrinsics", help="intrinsics JSON (default: built-in camera)")
    p.add_argument("--density", type=float, default=None, help="cloud points per m^2")
    p.add_argument("--grasps-per-object", dest="grasps_per_object", type=int, default=None)
    p.add_argument("--table-z", type=float, default=0.6)
    p.add_argument("--no-table", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gt-avh", help="ground-truth heatmap from annotations")
    _add_common(p)
    p.add_argument("--annotations", required=True)
    p.add_argument("--intrinsics", required=True)
    p.add_argument("--out", required=True)
    for name in ("--v-count", "--a-count", "--stride"):
        p.add_argument(name, dest=name[2:].replace("-", "_"), type=int, default=None)
    p.set_defaults(func=cmd_gt_avh)

    p = sub.add_parser("detect", help="grasps from a heatmap and a depth image")
    _add_common(p)
    p.add_argument("--depth", required=True)
    p.add_argument("--intrinsics", required=True)
    p.add_argument("--avh-source", required=True,
                   help="file:PATH | random:SEED:DENSITY | oracle:ANNOTATIONS")
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--top-k", dest="top_k", type=int, default=None)
    p.add_argument("--widths", help="comma-separated meters")
    p.add_argument("--offsets", help="comma-separated meters")
    p.add_argument("--cell-size", dest="cell_size", type=float, default=None)
    for name in ("--v-count", "--a-count", "--stride"):
        p.add_argument(name, dest=name[2:].replace("-", "_"), type=int, default=None)
    p.add_argument("--backend", choices=("compiled", "python"))
    p.add_argument("--brute", action="store_true", help="skip the spatial index")
    p.add_argument("--nms", action="store_true", help="apply pose NMS to the output")
    p.add_argument("--nms-trans", dest="nms_trans", type=float, default=None)
    p.add_argument("--nms-rot", dest="nms_rot", type=float, default=None, help="degrees")
    p.add_argument("--export-obj", help="write gripper meshes of the top grasps")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="force-closure AP report for a grasp file")
    _add_common(p)
    p.add_argument("--grasps", required=True)
    p.add_argument("--depth")
    p.add_argument("--intrinsics")
    p.add_argument("--cloud", help="cloud .npy instead of depth+intrinsics")
    p.add_argument("--out", required=True)
    p.add_argument("--frictions", help="comma-separated coefficients")
    p.add_argument("--k-max", dest="k_max", type=int, default=None)
    p.add_argument("--normals-k", dest="normals_k", type=int, default=None)
    p.add_argument("--cell-size", dest="cell_size", type=float, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("nms", help="pose NMS over a grasp file")
    _add_common(p)
    p.add_argument("--grasps", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--nms-trans", dest="nms_trans", type=float, default=None)
    p.add_argument("--nms-rot", dest="nms_rot", type=float, default=None, help="degrees")
    p.set_defaults(func=cmd_nms)

    p = sub.add_parser("bench", help="timing report across kernel backends")
    _add_common(p)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=192)
    p.add_argument("--candidates", type=int, default=1024)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--objects", type=int, default=None)
    p.add_argument("--modes", help="comma list like compiled+index,python+brute")
    p.add_argument("--out")
    p.add_argument("--widths", help="comma-separated meters")
    p.add_argument("--offsets", help="comma-separated meters")
    p.add_argument("--cell-size", dest="cell_size", type=float, default=None)
    p.set_defaults(func=cmd_bench)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DimensionMismatch as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (OSError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
