"""Synthetic scenes, simulated detectors, and the pose noise model.

Stands in for a real perception stack: ground-truth vehicle boxes are laid
out on a road segment (or uniformly), each observer reports the objects
inside its range and field of view with jitter, misses and false positives,
and the cooperating vehicle's pose is perturbed with the noise the pipeline
is meant to survive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .fusion import Detection
from .geometry import (
    OrientedBox,
    Pose,
    apply_transform,
    invert_transform,
    pose_transform,
    wrap_angle,
)
from .rng import stream

__all__ = [
    "Scene",
    "NoiseSpec",
    "SensorSpec",
    "PlacementError",
    "LAYOUTS",
    "generate_scene",
    "perturb_pose",
    "observe",
    "visible_indices",
    "covisible_count",
]

#: Minimum planar distance between generated object centers, meters.
MIN_SEPARATION = 6.0

#: Rejection-sampling budget across the whole scene.
MAX_PLACEMENT_ATTEMPTS = 10_000

LAYOUTS = ("lane", "uniform")

_LENGTH_RANGE = (3.5, 5.5)
_WIDTH_RANGE = (1.6, 2.2)
_HEIGHT_RANGE = (1.4, 1.9)


class PlacementError(RuntimeError):
    """Rejection sampling could not fit the requested objects."""


@dataclass(frozen=True)
class Scene:
    """Ground truth: world-frame object boxes plus the two observer poses."""

    objects: tuple[OrientedBox, ...]
    ego_pose: Pose
    cav_pose: Pose
    bounds: NDArray[np.float64]

    def __post_init__(self) -> None:
        bounds = np.asarray(self.bounds, dtype=float)
        if bounds.shape != (2, 2):
            raise ValueError(
                f"bounds must be ((xmin, ymin), (xmax, ymax)), got shape {bounds.shape}"
            )
        for idx, box in enumerate(self.objects):
            planar = box.center[:2]
            if np.any(planar < bounds[0]) or np.any(planar > bounds[1]):
                raise ValueError(
                    f"object {idx} center {planar.tolist()} outside bounds "
                    f"{bounds.tolist()}"
                )
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "bounds", bounds)


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian pose noise: std sigma_p on x, y, z and sigma_phi on yaw.

    Pitch and roll are untouched (their noise covariance is zero).
    """

    sigma_p: float = 0.0
    sigma_phi: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma_p < 0.0 or self.sigma_phi < 0.0:
            raise ValueError("noise standard deviations must be nonnegative")


@dataclass(frozen=True)
class SensorSpec:
    """Detector model for one observer.

    ``fov`` is the full angular width centered on the observer's heading;
    ``false_positive_rate`` is the expected count of spurious boxes per frame
    (Poisson mean), not a probability.
    """

    range_m: float = 50.0
    fov: float = math.tau
    miss_rate: float = 0.05
    center_jitter: float = 0.05
    yaw_jitter: float = math.radians(0.5)
    false_positive_rate: float = 0.5

    def __post_init__(self) -> None:
        if self.range_m <= 0.0:
            raise ValueError(f"range must be positive, got {self.range_m}")
        if not 0.0 < self.fov <= math.tau:
            raise ValueError(f"fov must be in (0, 2*pi], got {self.fov}")
        if not 0.0 <= self.miss_rate < 1.0:
            raise ValueError(f"miss_rate must be in [0, 1), got {self.miss_rate}")
        if self.center_jitter < 0.0 or self.yaw_jitter < 0.0:
            raise ValueError("jitter standard deviations must be nonnegative")
        if self.false_positive_rate < 0.0:
            raise ValueError(
                f"false_positive_rate must be nonnegative, got {self.false_positive_rate}"
            )


def _sample_extent(rng: np.random.Generator) -> NDArray[np.float64]:
    return np.array(
        [
            rng.uniform(*_LENGTH_RANGE),
            rng.uniform(*_WIDTH_RANGE),
            rng.uniform(*_HEIGHT_RANGE),
        ]
    )


def generate_scene(
    n_objects: int,
    layout: str = "lane",
    seed: int = 0,
    bounds: Sequence[Sequence[float]] = ((0.0, -12.0), (60.0, 12.0)),
) -> Scene:
    """Deterministic scene for a seed: separated vehicle boxes plus poses.

    The lane layout snaps objects to four lanes with headings along the road;
    the uniform layout scatters positions and yaws freely.  Objects keep at
    least MIN_SEPARATION meters of planar distance, enforced by rejection
    sampling.  The observers sit just outside the two x ends of the bounds,
    facing each other, so mid-scene objects are co-visible.
    """
    if n_objects < 0:
        raise ValueError(f"n_objects must be nonnegative, got {n_objects}")
    if layout not in LAYOUTS:
        raise ValueError(f"layout must be one of {LAYOUTS}, got {layout!r}")
    low, high = np.asarray(bounds[0], dtype=float), np.asarray(bounds[1], dtype=float)
    if not np.all(high > low):
        raise ValueError(f"empty bounds: {bounds}")
    rng = stream(seed, "scene-generation")
    lane_count = 4
    lane_ys = low[1] + (high[1] - low[1]) * (np.arange(lane_count) + 0.5) / lane_count

    centers: list[NDArray[np.float64]] = []
    boxes: list[OrientedBox] = []
    attempts = 0
    while len(boxes) < n_objects:
        if attempts >= MAX_PLACEMENT_ATTEMPTS:
            raise PlacementError(
                f"placed {len(boxes)} of {n_objects} objects in "
                f"{MAX_PLACEMENT_ATTEMPTS} attempts; bounds too tight for "
                f"{MIN_SEPARATION} m separation"
            )
        attempts += 1
        if layout == "lane":
            lane_y = float(lane_ys[rng.integers(lane_count)])
            x = rng.uniform(low[0], high[0])
            y = lane_y + rng.uniform(-0.3, 0.3)
            yaw = 0.0 if lane_y < 0.5 * (low[1] + high[1]) else math.pi
        else:
            x = rng.uniform(low[0], high[0])
            y = rng.uniform(low[1], high[1])
            yaw = wrap_angle(rng.uniform(-math.pi, math.pi))
        planar = np.array([x, y])
        if any(np.linalg.norm(planar - c) < MIN_SEPARATION for c in centers):
            continue
        extent = _sample_extent(rng)
        centers.append(planar)
        boxes.append(OrientedBox(np.array([x, y, 0.5 * extent[2]]), yaw, extent))

    mid_y = 0.5 * (low[1] + high[1])
    ego_pose = Pose(np.array([low[0] - 5.0, mid_y, 0.0]), np.zeros(3))
    cav_pose = Pose(np.array([high[0] + 5.0, mid_y, 0.0]), np.array([0.0, 0.0, math.pi]))
    return Scene(tuple(boxes), ego_pose, cav_pose, np.array([low, high]))


def perturb_pose(
    pose: Pose, spec: NoiseSpec, rng: np.random.Generator | None = None
) -> Pose:
    """Add zero-mean Gaussian noise to position (sigma_p) and yaw (sigma_phi).

    Standard normals are always drawn and then scaled, so the stream advances
    identically across noise levels; that keeps trials paired when sweeping
    sigma.
    """
    if rng is None:
        rng = stream(spec.seed, "pose-noise")
    position = pose.position + spec.sigma_p * rng.standard_normal(3)
    yaw = wrap_angle(pose.angles[2] + spec.sigma_phi * rng.standard_normal())
    return Pose(position, np.array([pose.angles[0], pose.angles[1], yaw]))


def _visible(
    box: OrientedBox, observer: Pose, sensor: SensorSpec, local_center: NDArray[np.float64]
) -> bool:
    if float(np.linalg.norm(box.center - observer.position)) > sensor.range_m:
        return False
    bearing = math.atan2(local_center[1], local_center[0])
    return abs(bearing) <= 0.5 * sensor.fov


def observe(
    scene: Scene, observer: Pose, sensor: SensorSpec, rng: np.random.Generator
) -> list[Detection]:
    """Detections of one observer, in its local frame.

    In-range, in-FOV objects survive a Bernoulli miss draw and come back with
    Gaussian center/yaw jitter and confidence in [0.5, 1.0]; Poisson-many
    false positives are scattered inside the field of view with confidence in
    [0.3, 0.7].
    """
    world_to_local = invert_transform(pose_transform(observer))
    detections: list[Detection] = []
    for obj in scene.objects:
        local = apply_transform(world_to_local, obj)
        if not _visible(obj, observer, sensor, local.center):
            continue
        if rng.uniform() < sensor.miss_rate:
            continue
        center = local.center + sensor.center_jitter * rng.standard_normal(3)
        yaw = wrap_angle(local.yaw + sensor.yaw_jitter * rng.standard_normal())
        confidence = rng.uniform(0.5, 1.0)
        detections.append(Detection(OrientedBox(center, yaw, local.extent), confidence))
    for _ in range(rng.poisson(sensor.false_positive_rate)):
        bearing = rng.uniform(-0.5 * sensor.fov, 0.5 * sensor.fov)
        distance = rng.uniform(min(3.0, sensor.range_m), sensor.range_m)
        extent = _sample_extent(rng)
        center = np.array(
            [distance * math.cos(bearing), distance * math.sin(bearing), 0.5 * extent[2]]
        )
        yaw = wrap_angle(rng.uniform(-math.pi, math.pi))
        confidence = rng.uniform(0.3, 0.7)
        detections.append(Detection(OrientedBox(center, yaw, extent), confidence))
    return detections


def visible_indices(scene: Scene, observer: Pose, sensor: SensorSpec) -> set[int]:
    """Ground-truth objects inside one observer's range and FOV (no miss draws)."""
    world_to_local = invert_transform(pose_transform(observer))
    return {
        idx
        for idx, obj in enumerate(scene.objects)
        if _visible(obj, observer, sensor, apply_transform(world_to_local, obj).center)
    }


def covisible_count(scene: Scene, sensor: SensorSpec) -> int:
    """How many ground-truth objects both observers can see."""
    return len(
        visible_indices(scene, scene.ego_pose, sensor)
        & visible_indices(scene, scene.cav_pose, sensor)
    )
