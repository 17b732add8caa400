"""Command-line interface: scene generation, single-frame fusion, sweeps.

Conventions: angles are degrees on the command line (flag names carry the
unit) and radians inside; every command takes ``--seed`` (default from the
COOPFUSE_SEED environment variable) and is bit-reproducible for a fixed
seed; values resolve as command-line flag > config file > built-in default,
and the effective configuration is echoed into each output document.

Exit codes: 0 success, 2 usage or bad arguments, 3 scene placement failure,
4 malformed input file.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from typing import Any, Callable, Mapping

from .association import AssociationConfig
from .experiment import (
    AXES,
    METHODS,
    GridMismatchError,
    SweepConfig,
    compare_methods,
    format_comparison,
    records_to_dicts,
    run_sweep,
    write_records_csv,
)
from .fusion import PipelineConfig, fuse_frame
from .geometry import relative_transform
from .metrics import TransformError, rre, rte
from .registration import RansacConfig
from .rng import stream, substream_seed
from .scenario import (
    LAYOUTS,
    NoiseSpec,
    PlacementError,
    SensorSpec,
    generate_scene,
    observe,
    perturb_pose,
)
from .serialization import (
    MalformedDocumentError,
    fusion_report_dict,
    load_scene,
    records_document,
    save_document,
    save_scene,
)

__all__ = ["main"]

SEED_ENV_VAR = "COOPFUSE_SEED"

log = logging.getLogger("coopfuse")


def _env_seed(parser: argparse.ArgumentParser) -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        parser.error(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")


def _positive(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _nonnegative(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return value


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(item) for item in text.split(",") if item.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


_SENSOR_DEFAULTS: dict[str, Any] = {
    "range_m": 50.0,
    "fov_deg": 360.0,
    "miss_rate": 0.05,
    "center_jitter_m": 0.05,
    "yaw_jitter_deg": 0.5,
    "fp_rate": 0.5,
}

_PIPELINE_DEFAULTS: dict[str, Any] = {
    "nms_iou_threshold": 0.15,
    "min_pairs": 3,
    "dustbin_cost_m": AssociationConfig().dustbin_cost,
    "ot_epsilon": AssociationConfig().epsilon,
    "sinkhorn_iterations": AssociationConfig().iterations,
    "ransac_rounds": RansacConfig().rounds,
    "inlier_threshold_m": RansacConfig().inlier_threshold,
}


def _add_sensor_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("sensor model")
    group.add_argument("--range-m", type=_positive, help="detector range in meters")
    group.add_argument("--fov-deg", type=_positive, help="full field-of-view width in degrees")
    group.add_argument("--miss-rate", type=_nonnegative, help="per-object miss probability")
    group.add_argument(
        "--center-jitter-m", type=_nonnegative, help="detection center noise std, meters"
    )
    group.add_argument(
        "--yaw-jitter-deg", type=_nonnegative, help="detection yaw noise std, degrees"
    )
    group.add_argument(
        "--fp-rate", type=_nonnegative, help="expected false positives per frame (Poisson mean)"
    )


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("fusion pipeline")
    group.add_argument("--nms-iou-threshold", type=float, help="NMS suppression IoU in (0,1)")
    group.add_argument(
        "--min-pairs", type=int, help="matched pairs needed before correction is attempted"
    )
    group.add_argument("--dustbin-cost-m", type=_positive, help="unmatched-box cost, meters")
    group.add_argument("--ot-epsilon", type=_positive, help="entropic regularization, meters")
    group.add_argument("--sinkhorn-iterations", type=int, help="Sinkhorn sweep budget")
    group.add_argument("--ransac-rounds", type=int, help="random sampling rounds")
    group.add_argument(
        "--inlier-threshold-m", type=_positive, help="registration inlier residual bound, meters"
    )


def _sensor_from(effective: Mapping[str, Any]) -> SensorSpec:
    return SensorSpec(
        range_m=effective["range_m"],
        fov=math.radians(effective["fov_deg"]),
        miss_rate=effective["miss_rate"],
        center_jitter=effective["center_jitter_m"],
        yaw_jitter=math.radians(effective["yaw_jitter_deg"]),
        false_positive_rate=effective["fp_rate"],
    )


def _pipeline_from(effective: Mapping[str, Any], registration_seed: int) -> PipelineConfig:
    return PipelineConfig(
        nms_iou_threshold=effective["nms_iou_threshold"],
        min_pairs_for_correction=effective["min_pairs"],
        enable_correction=not effective.get("no_correction", False),
        association=AssociationConfig(
            dustbin_cost=effective["dustbin_cost_m"],
            epsilon=effective["ot_epsilon"],
            iterations=effective["sinkhorn_iterations"],
        ),
        registration=RansacConfig(
            rounds=effective["ransac_rounds"],
            inlier_threshold=effective["inlier_threshold_m"],
            seed=registration_seed,
        ),
    )


def _resolve(
    args: argparse.Namespace,
    parser: argparse.ArgumentParser,
    defaults: Mapping[str, Any],
) -> dict[str, Any]:
    """Apply the flag > config file > default precedence for one command."""
    effective = dict(defaults)
    if getattr(args, "config", None) is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as handle:
                file_values = json.load(handle)
        except OSError as exc:
            parser.error(f"cannot read config file: {exc}")
        except json.JSONDecodeError as exc:
            parser.error(f"config file is not valid JSON: {exc}")
        if not isinstance(file_values, dict):
            parser.error("config file must hold a JSON object")
        unknown = set(file_values) - set(defaults)
        if unknown:
            parser.error(
                f"unknown config keys for this command: {', '.join(sorted(unknown))}"
            )
        effective.update(file_values)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            effective[key] = value
    return effective


def _cmd_generate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    defaults = {
        "objects": 20,
        "layout": "lane",
        "seed": _env_seed(parser),
        "out": "scene.json",
        "bounds": (0.0, -12.0, 60.0, 12.0),
    }
    effective = _resolve(args, parser, defaults)
    if effective["objects"] < 0:
        parser.error("--objects must be nonnegative")
    if effective["layout"] not in LAYOUTS:
        parser.error(f"--layout must be one of {', '.join(LAYOUTS)}")
    xmin, ymin, xmax, ymax = effective["bounds"]
    scene = generate_scene(
        n_objects=int(effective["objects"]),
        layout=effective["layout"],
        seed=int(effective["seed"]),
        bounds=((xmin, ymin), (xmax, ymax)),
    )
    save_scene(scene, effective["out"], config={"command": "generate", **effective})
    print(f"wrote {effective['out']}: {len(scene.objects)} objects")
    return 0


def _cmd_fuse(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    defaults = {
        "scene": None,
        "out": "fusion-report.json",
        "seed": _env_seed(parser),
        "sigma_p_m": 0.0,
        "sigma_phi_deg": 0.0,
        "no_correction": False,
        **_SENSOR_DEFAULTS,
        **_PIPELINE_DEFAULTS,
    }
    effective = _resolve(args, parser, defaults)
    scene_path = effective["scene"]
    if scene_path is None:
        parser.error("--scene is required")
    if not os.path.exists(scene_path):
        parser.error(f"scene file not found: {scene_path}")
    scene = load_scene(scene_path)

    seed = int(effective["seed"])
    sensor = _sensor_from(effective)
    pipeline = _pipeline_from(effective, substream_seed(seed, "fuse", "registration"))
    noise = NoiseSpec(
        sigma_p=effective["sigma_p_m"],
        sigma_phi=math.radians(effective["sigma_phi_deg"]),
        seed=seed,
    )

    ego_dets = observe(scene, scene.ego_pose, sensor, stream(seed, "fuse", "ego-observe"))
    cav_dets = observe(scene, scene.cav_pose, sensor, stream(seed, "fuse", "cav-observe"))
    cav_pose_noisy = perturb_pose(scene.cav_pose, noise, stream(seed, "fuse", "pose-noise"))
    log.info(
        "fusing %d ego and %d cav detections (sigma_p=%.3g m, sigma_phi=%.3g deg)",
        len(ego_dets),
        len(cav_dets),
        effective["sigma_p_m"],
        effective["sigma_phi_deg"],
    )
    output = fuse_frame(scene.ego_pose, cav_pose_noisy, ego_dets, cav_dets, pipeline)

    true_rel = relative_transform(scene.ego_pose, scene.cav_pose)
    error = TransformError(
        rre=rre(true_rel.rotation, output.applied_transform.rotation),
        rte=rte(true_rel.translation, output.applied_transform.translation),
    )
    report = fusion_report_dict(output, error, config={"command": "fuse", **effective})
    save_document(report, effective["out"])
    print(f"wrote {effective['out']}")
    print(
        f"mode={output.mode.value} pairs={len(output.association.pairs)} "
        f"inlier_ratio={report['inlier_ratio']:.3f} "
        f"rre_deg={report['rre_deg']:.4g} rte_m={report['rte_m']:.4g} "
        f"objects={len(output.objects)}"
    )
    return 0


def _cmd_sweep(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    defaults = {
        "out": "sweep.csv",
        "json_out": None,
        "axis": "both",
        "trials": 50,
        "methods": ",".join(METHODS),
        "objects": 20,
        "layout": "lane",
        "iou_min": 0.7,
        "sigma_p_grid_m": (0.0, 0.2, 0.4, 0.6, 0.8, 1.0),
        "sigma_phi_grid_deg": (0.0, 0.5, 1.0, 1.5, 2.0, 2.5),
        "seed": _env_seed(parser),
        "workers": os.cpu_count() or 1,
        **_SENSOR_DEFAULTS,
        **_PIPELINE_DEFAULTS,
    }
    effective = _resolve(args, parser, defaults)
    methods = effective["methods"]
    if isinstance(methods, str):
        methods = tuple(m.strip() for m in methods.split(",") if m.strip())
    unknown = set(methods) - set(METHODS)
    if unknown:
        parser.error(f"unknown methods: {', '.join(sorted(unknown))}")
    if effective["axis"] not in AXES:
        parser.error(f"--axis must be one of {', '.join(AXES)}")

    seed = int(effective["seed"])
    config = SweepConfig(
        sigma_p_grid_m=tuple(effective["sigma_p_grid_m"]),
        sigma_phi_grid_deg=tuple(effective["sigma_phi_grid_deg"]),
        trials_per_cell=int(effective["trials"]),
        methods=methods,
        n_objects=int(effective["objects"]),
        layout=effective["layout"],
        iou_min=effective["iou_min"],
        master_seed=seed,
        sensor=_sensor_from(effective),
        pipeline=_pipeline_from(effective, seed),
        workers=int(effective["workers"]),
    )
    log.info("sweep: axis=%s, %d trials/cell", effective["axis"], config.trials_per_cell)
    records = run_sweep(config, axis=effective["axis"])
    write_records_csv(records, effective["out"])
    json_out = effective["json_out"] or effective["out"] + ".json"
    save_document(
        records_document(records_to_dicts(records), config={"command": "sweep", **effective}),
        json_out,
    )
    print(f"wrote {effective['out']} and {json_out}")
    try:
        print(format_comparison(compare_methods(records)))
    except GridMismatchError as exc:
        print(f"(no comparison table: {exc})")
    return 0


def _cmd_bandwidth(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    from .metrics import BandwidthSpec, bandwidth

    defaults = {
        "frame_rate_hz": 10.0,
        "boxes_per_frame": 20.0,
        "dims_per_box": 8.0,
        "bits_per_dim": 32.0,
    }
    effective = _resolve(args, parser, defaults)
    try:
        spec = BandwidthSpec(
            frame_rate_hz=effective["frame_rate_hz"],
            items_per_frame=effective["boxes_per_frame"],
            dims_per_item=effective["dims_per_box"],
            bits_per_dim=effective["bits_per_dim"],
        )
    except ValueError as exc:
        parser.error(str(exc))
    bps = bandwidth(spec)
    print(f"bandwidth: {bps:g} bps = {bps / 1e3:g} Kbps = {bps / 1e6:g} Mbps")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopfuse",
        description="Object-level cooperative perception on synthetic scenes: "
        "generate ground truth, fuse frames with pose-error correction, "
        "and sweep noise robustness.",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="log progress to stderr (-vv for debug)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help=f"master seed (default ${SEED_ENV_VAR} or 0)")
    common.add_argument("--config", help="JSON file of defaults; flags still win")

    p_gen = sub.add_parser(
        "generate", parents=[common], help="write a synthetic ground-truth scene"
    )
    p_gen.add_argument("--objects", type=int, help="number of ground-truth boxes (default 20)")
    p_gen.add_argument("--layout", choices=LAYOUTS, help="object placement (default lane)")
    p_gen.add_argument("--out", help="output scene path (default scene.json)")
    p_gen.add_argument(
        "--bounds",
        type=float,
        nargs=4,
        metavar=("XMIN", "YMIN", "XMAX", "YMAX"),
        help="scene extent in meters (default 0 -12 60 12)",
    )
    p_gen.set_defaults(func=_cmd_generate)

    p_fuse = sub.add_parser(
        "fuse", parents=[common], help="fuse one frame from a scene file"
    )
    p_fuse.add_argument("--scene", help="input scene document (required)")
    p_fuse.add_argument("--out", help="output report path (default fusion-report.json)")
    p_fuse.add_argument("--sigma-p-m", type=_nonnegative, help="CAV position noise std, meters")
    p_fuse.add_argument(
        "--sigma-phi-deg", type=_nonnegative, help="CAV heading noise std, degrees"
    )
    p_fuse.add_argument(
        "--no-correction",
        action="store_true",
        default=None,
        help="merge under the raw pose transform (late-fusion baseline)",
    )
    _add_sensor_flags(p_fuse)
    _add_pipeline_flags(p_fuse)
    p_fuse.set_defaults(func=_cmd_fuse)

    p_sweep = sub.add_parser(
        "sweep", parents=[common], help="run the Monte Carlo noise-robustness sweep"
    )
    p_sweep.add_argument("--out", help="output CSV path (default sweep.csv)")
    p_sweep.add_argument("--json-out", help="JSON mirror path (default <out>.json)")
    p_sweep.add_argument("--axis", choices=AXES, help="which noise axis to sweep (default both)")
    p_sweep.add_argument("--trials", type=int, help="trials per noise cell (default 50)")
    p_sweep.add_argument(
        "--methods", help=f"comma-separated subset of {','.join(METHODS)} (default all)"
    )
    p_sweep.add_argument("--objects", type=int, help="ground-truth boxes per scene (default 20)")
    p_sweep.add_argument("--layout", choices=LAYOUTS, help="scene layout (default lane)")
    p_sweep.add_argument("--iou-min", type=float, help="AP matching IoU (default 0.7)")
    p_sweep.add_argument(
        "--sigma-p-grid-m", type=_float_list, help="comma-separated position noise grid"
    )
    p_sweep.add_argument(
        "--sigma-phi-grid-deg", type=_float_list, help="comma-separated heading noise grid"
    )
    p_sweep.add_argument("--workers", type=int, help="parallelism hint (default CPU count)")
    _add_sensor_flags(p_sweep)
    _add_pipeline_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_bw = sub.add_parser(
        "bandwidth", parents=[common], help="communication budget for box sharing"
    )
    p_bw.add_argument("--frame-rate-hz", type=_positive, help="frames per second (default 10)")
    p_bw.add_argument("--boxes-per-frame", type=_positive, help="shared boxes (default 20)")
    p_bw.add_argument("--dims-per-box", type=_positive, help="numbers per box (default 8)")
    p_bw.add_argument("--bits-per-dim", type=_positive, help="bits per number (default 32)")
    p_bw.set_defaults(func=_cmd_bandwidth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handler: Callable[[argparse.Namespace, argparse.ArgumentParser], int] = args.func
    try:
        return handler(args, parser)
    except PlacementError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except MalformedDocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
