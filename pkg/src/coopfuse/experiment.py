"""Monte Carlo robustness sweeps over pose-noise levels.

Each trial is an independent synthetic frame: a fresh scene, two simulated
detectors, and a noisy CAV pose.  The same trials (identical scenes,
detections, and noise draws up to scaling) are replayed for every method and
noise cell, so comparisons are paired and the no-fusion baseline is exactly
constant across cells.  AP is computed once per cell from the detections of
all its trials pooled together, because single frames hold too few objects
for a stable curve.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .fusion import Detection, FusionOutput, PipelineConfig, fuse_frame, nms
from .geometry import (
    OrientedBox,
    Pose,
    apply_transform,
    invert_transform,
    pose_transform,
    relative_transform,
)
from .metrics import average_precision, rre, rte
from .rng import stream, substream_seed
from .scenario import (
    PlacementError,
    Scene,
    SensorSpec,
    generate_scene,
    observe,
    visible_indices,
)

__all__ = [
    "METHODS",
    "AXES",
    "SweepConfig",
    "ExperimentRecord",
    "ComparisonRow",
    "GridMismatchError",
    "run_sweep",
    "compare_methods",
    "format_comparison",
    "write_records_csv",
    "records_to_dicts",
]

METHODS = ("no-fusion", "late-fusion", "corrected")
AXES = ("position", "heading", "both", "joint")

CSV_COLUMNS = (
    "method",
    "sigma_p_m",
    "sigma_phi_deg",
    "ap",
    "mean_rre_deg",
    "mean_rte_m",
    "mean_inlier_ratio",
    "trials",
)


class GridMismatchError(ValueError):
    """Methods in a record set do not cover identical noise grids."""


@dataclass(frozen=True)
class SweepConfig:
    sigma_p_grid_m: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    sigma_phi_grid_deg: tuple[float, ...] = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5)
    trials_per_cell: int = 50
    methods: tuple[str, ...] = METHODS
    n_objects: int = 20
    layout: str = "lane"
    iou_min: float = 0.7
    master_seed: int = 0
    sensor: SensorSpec = field(default_factory=SensorSpec)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.sigma_p_grid_m or not self.sigma_phi_grid_deg:
            raise ValueError("noise grids must be nonempty")
        if self.trials_per_cell < 1:
            raise ValueError(f"trials_per_cell must be >= 1, got {self.trials_per_cell}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")


@dataclass(frozen=True)
class ExperimentRecord:
    """One (method, noise cell) row.  Angles are radians; CSV output converts."""

    method: str
    sigma_p: float
    sigma_phi: float
    ap: float
    mean_rre: float
    mean_rte: float
    mean_inlier_ratio: float
    trials: int


@dataclass(frozen=True)
class _TrialBase:
    """Everything about one trial that does not depend on the noise cell."""

    scene: Scene
    ego_detections: tuple[Detection, ...]
    cav_detections: tuple[Detection, ...]
    ground_truth_ego_frame: tuple[OrientedBox, ...]
    true_transform_rotation: np.ndarray
    true_transform_translation: np.ndarray
    position_normals: np.ndarray
    yaw_normal: float


def _trial_base(config: SweepConfig, trial: int) -> _TrialBase:
    seed = config.master_seed
    try:
        scene = generate_scene(
            config.n_objects, config.layout, seed=substream_seed(seed, "scene", trial)
        )
    except PlacementError as exc:
        raise PlacementError(f"trial {trial}: {exc}") from exc
    ego_dets = tuple(
        observe(scene, scene.ego_pose, config.sensor, stream(seed, "trial", trial, "ego-observe"))
    )
    cav_dets = tuple(
        observe(scene, scene.cav_pose, config.sensor, stream(seed, "trial", trial, "cav-observe"))
    )
    covisible = visible_indices(scene, scene.ego_pose, config.sensor) | visible_indices(
        scene, scene.cav_pose, config.sensor
    )
    world_to_ego = invert_transform(pose_transform(scene.ego_pose))
    ground_truth = tuple(
        apply_transform(world_to_ego, scene.objects[idx]) for idx in sorted(covisible)
    )
    true_rel = relative_transform(scene.ego_pose, scene.cav_pose)
    noise_rng = stream(seed, "trial", trial, "pose-noise")
    return _TrialBase(
        scene=scene,
        ego_detections=ego_dets,
        cav_detections=cav_dets,
        ground_truth_ego_frame=ground_truth,
        true_transform_rotation=true_rel.rotation,
        true_transform_translation=true_rel.translation,
        position_normals=noise_rng.standard_normal(3),
        yaw_normal=float(noise_rng.standard_normal()),
    )


def _noisy_cav_pose(base: _TrialBase, sigma_p: float, sigma_phi: float) -> Pose:
    pose = base.scene.cav_pose
    position = pose.position + sigma_p * base.position_normals
    angles = np.array(
        [pose.angles[0], pose.angles[1], pose.angles[2] + sigma_phi * base.yaw_normal]
    )
    return Pose(position, angles)


def _run_method_trial(
    method: str,
    trial: int,
    base: _TrialBase,
    sigma_p: float,
    sigma_phi: float,
    config: SweepConfig,
) -> tuple[tuple[Detection, ...], float, float, float]:
    """Fused detections plus (rre, rte, inlier_ratio) for one trial."""
    if method == "no-fusion":
        fused = nms(base.ego_detections, config.pipeline.nms_iou_threshold)
        return fused, 0.0, 0.0, 0.0

    cav_pose_noisy = _noisy_cav_pose(base, sigma_p, sigma_phi)
    if method == "late-fusion":
        pipeline = replace(config.pipeline, enable_correction=False)
    else:
        # per-trial sampling streams; the configured registration seed is a base
        registration = replace(
            config.pipeline.registration,
            seed=substream_seed(config.master_seed, "trial", trial, "registration"),
        )
        pipeline = replace(config.pipeline, registration=registration)
    output: FusionOutput = fuse_frame(
        base.scene.ego_pose,
        cav_pose_noisy,
        list(base.ego_detections),
        list(base.cav_detections),
        pipeline,
    )
    rotation_error = rre(base.true_transform_rotation, output.applied_transform.rotation)
    translation_error = rte(
        base.true_transform_translation, output.applied_transform.translation
    )
    inlier = output.registration.inlier_ratio if output.registration is not None else 0.0
    return output.objects, rotation_error, translation_error, inlier


def _cells(config: SweepConfig, axis: str) -> list[tuple[float, float]]:
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    phi_rad = tuple(math.radians(deg) for deg in config.sigma_phi_grid_deg)
    if axis == "position":
        return [(sp, 0.0) for sp in config.sigma_p_grid_m]
    if axis == "heading":
        return [(0.0, sphi) for sphi in phi_rad]
    if axis == "joint":
        return [(sp, sphi) for sp in config.sigma_p_grid_m for sphi in phi_rad]
    cells = [(sp, 0.0) for sp in config.sigma_p_grid_m]
    cells += [(0.0, sphi) for sphi in phi_rad if (0.0, sphi) not in cells]
    return cells


def run_sweep(config: SweepConfig, axis: str = "both") -> list[ExperimentRecord]:
    """All (method, noise cell) records for one sweep; deterministic per seed.

    ``axis`` picks the grid: "position" varies sigma_p at zero heading noise,
    "heading" the reverse, "both" concatenates the two single-axis sweeps,
    and "joint" runs the full cross product.  ``config.workers`` is a
    parallelism hint; trials are independent with derived streams, but the
    current implementation evaluates them serially.
    """
    cells = _cells(config, axis)
    bases = [_trial_base(config, t) for t in range(config.trials_per_cell)]
    records: list[ExperimentRecord] = []
    for method in config.methods:
        for sigma_p, sigma_phi in cells:
            pooled_dets: list[tuple[int, Detection]] = []
            pooled_gts: list[tuple[int, OrientedBox]] = []
            rre_values: list[float] = []
            rte_values: list[float] = []
            inlier_values: list[float] = []
            for trial, base in enumerate(bases):
                fused, rot_err, trans_err, inlier = _run_method_trial(
                    method, trial, base, sigma_p, sigma_phi, config
                )
                pooled_dets.extend((trial, det) for det in fused)
                pooled_gts.extend((trial, box) for box in base.ground_truth_ego_frame)
                rre_values.append(rot_err)
                rte_values.append(trans_err)
                inlier_values.append(inlier)
            curve = average_precision(pooled_dets, pooled_gts, config.iou_min)
            records.append(
                ExperimentRecord(
                    method=method,
                    sigma_p=sigma_p,
                    sigma_phi=sigma_phi,
                    ap=curve.ap,
                    mean_rre=float(np.mean(rre_values)),
                    mean_rte=float(np.mean(rte_values)),
                    mean_inlier_ratio=float(np.mean(inlier_values)),
                    trials=config.trials_per_cell,
                )
            )
    return records


@dataclass(frozen=True)
class ComparisonRow:
    method: str
    sigma_p: float
    sigma_phi: float
    ap: float
    degradation_pct: float


def compare_methods(records: Sequence[ExperimentRecord]) -> list[ComparisonRow]:
    """Per-cell AP with degradation relative to each method's noiseless cell.

    All methods must cover the same noise grid; the grid must include the
    noiseless (0, 0) cell.
    """
    grids: dict[str, list[tuple[float, float]]] = {}
    for record in records:
        grids.setdefault(record.method, []).append((record.sigma_p, record.sigma_phi))
    grid_values = [tuple(sorted(cells)) for cells in grids.values()]
    if len(set(grid_values)) > 1:
        raise GridMismatchError(
            f"methods cover different grids: { {m: sorted(c) for m, c in grids.items()} }"
        )
    baselines = {
        record.method: record.ap
        for record in records
        if record.sigma_p == 0.0 and record.sigma_phi == 0.0
    }
    if set(baselines) != set(grids):
        raise GridMismatchError("every method needs a noiseless (0, 0) baseline cell")
    rows = []
    for record in records:
        base_ap = baselines[record.method]
        degradation = 0.0 if base_ap == 0.0 else 100.0 * (base_ap - record.ap) / base_ap
        rows.append(
            ComparisonRow(
                method=record.method,
                sigma_p=record.sigma_p,
                sigma_phi=record.sigma_phi,
                ap=record.ap,
                degradation_pct=degradation,
            )
        )
    return rows


def format_comparison(rows: Sequence[ComparisonRow]) -> str:
    """Fixed-width text table of compare_methods output."""
    header = f"{'method':<12} {'sigma_p_m':>9} {'sigma_phi_deg':>13} {'ap':>7} {'degr_%':>7}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.method:<12} {row.sigma_p:>9.2f} {math.degrees(row.sigma_phi):>13.2f} "
            f"{row.ap:>7.4f} {row.degradation_pct:>7.2f}"
        )
    return "\n".join(lines)


def records_to_dicts(records: Iterable[ExperimentRecord]) -> list[dict[str, object]]:
    """Records as plain dicts in CSV column order (angles converted to degrees)."""
    return [
        {
            "method": record.method,
            "sigma_p_m": record.sigma_p,
            "sigma_phi_deg": math.degrees(record.sigma_phi),
            "ap": record.ap,
            "mean_rre_deg": math.degrees(record.mean_rre),
            "mean_rte_m": record.mean_rte,
            "mean_inlier_ratio": record.mean_inlier_ratio,
            "trials": record.trials,
        }
        for record in records
    ]


def write_records_csv(records: Iterable[ExperimentRecord], path: str) -> None:
    """Write records as UTF-8 CSV with a fixed header and full-precision floats."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in records_to_dicts(records):
            writer.writerow({key: repr(val) if isinstance(val, float) else val for key, val in row.items()})
