"""Single-frame fusion pipeline: transform, associate, correct, merge.

Order of operations for one frame: the noisy poses give a first guess at the
CAV-to-Ego transform; CAV detections are brought into the Ego frame with it;
co-visible pairs are found by transport association; if enough pairs exist a
correction transform is estimated from them and applied on top; finally both
detection sets are merged with confidence-ordered NMS.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .association import (
    AssignmentResult,
    AssociationConfig,
    ConvergenceError,
    associate,
    empty_assignment,
)
from .geometry import OrientedBox, Pose, RigidTransform, apply_transform, box_iou_3d, relative_transform
from .registration import (
    EstimationFailedError,
    InsufficientPairsError,
    RansacConfig,
    RegistrationResult,
    compose_final,
    estimate_correction,
)

__all__ = [
    "Detection",
    "CooperativeMode",
    "PipelineConfig",
    "FusionOutput",
    "nms",
    "cooperative_mode",
    "fuse_frame",
]


@dataclass(frozen=True)
class Detection:
    """An oriented box with a classification confidence."""

    box: OrientedBox
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


class CooperativeMode(enum.Enum):
    """Driving mode decided per frame from the association outcome."""

    SINGLE_VEHICLE = "single-vehicle"
    UNCORRECTED_COOPERATIVE = "uncorrected-cooperative"
    CORRECTED_COOPERATIVE = "corrected-cooperative"


@dataclass(frozen=True)
class PipelineConfig:
    """Frame-pipeline tunables.

    ``enable_correction`` exists for the uncorrected late-fusion baseline:
    with it off, CAV detections are merged under the pose-derived transform
    alone and no association or correction is attempted.
    """

    nms_iou_threshold: float = 0.15
    min_pairs_for_correction: int = 3
    enable_correction: bool = True
    association: AssociationConfig = field(default_factory=AssociationConfig)
    registration: RansacConfig = field(default_factory=RansacConfig)

    def __post_init__(self) -> None:
        if not 0.0 < self.nms_iou_threshold < 1.0:
            raise ValueError(
                f"nms_iou_threshold must be in (0, 1), got {self.nms_iou_threshold}"
            )


@dataclass(frozen=True)
class FusionOutput:
    """Fused detections plus every intermediate the metrics need."""

    objects: tuple[Detection, ...]
    applied_transform: RigidTransform
    correction_applied: bool
    mode: CooperativeMode
    association: AssignmentResult
    registration: RegistrationResult | None


def nms(detections: Sequence[Detection], iou_threshold: float) -> tuple[Detection, ...]:
    """Greedy non-maximum suppression by descending confidence.

    Ties in confidence keep the earlier input; survivors come back in
    (confidence desc, input index asc) order.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    order = sorted(range(len(detections)), key=lambda i: (-detections[i].confidence, i))
    kept: list[Detection] = []
    for idx in order:
        candidate = detections[idx]
        if all(box_iou_3d(candidate.box, k.box) < iou_threshold for k in kept):
            kept.append(candidate)
    return tuple(kept)


def cooperative_mode(association: AssignmentResult, min_pairs: int) -> CooperativeMode:
    """Mode from the estimated co-visible set size.

    No pairs means no common field of view, so the frame stays single-vehicle;
    too few pairs to determine a rigid transform merges without correction.
    """
    n_pairs = len(association.pairs)
    if n_pairs == 0:
        return CooperativeMode.SINGLE_VEHICLE
    if n_pairs < min_pairs:
        return CooperativeMode.UNCORRECTED_COOPERATIVE
    return CooperativeMode.CORRECTED_COOPERATIVE


def fuse_frame(
    ego_pose_noisy: Pose,
    cav_pose_noisy: Pose,
    ego_detections: Sequence[Detection],
    cav_detections: Sequence[Detection],
    config: PipelineConfig = PipelineConfig(),
) -> FusionOutput:
    """Run the full pipeline for one frame; never raises on degraded input.

    CAV detections come in the CAV local frame.  Association failure
    (non-convergence) degrades to an uncorrected merge; registration failure
    degrades to ``correction_applied=False``; the frame always produces
    output.
    """
    pose_guess = relative_transform(ego_pose_noisy, cav_pose_noisy)
    cav_in_ego = [
        Detection(apply_transform(pose_guess, det.box), det.confidence)
        for det in cav_detections
    ]
    ego_boxes = [det.box for det in ego_detections]
    n_ego, n_cav = len(ego_detections), len(cav_detections)

    association = empty_assignment(n_ego, n_cav)
    registration: RegistrationResult | None = None
    applied = pose_guess
    correction_applied = False

    if not config.enable_correction:
        mode = (
            CooperativeMode.UNCORRECTED_COOPERATIVE
            if cav_in_ego
            else CooperativeMode.SINGLE_VEHICLE
        )
    else:
        try:
            association = associate(
                ego_boxes, [det.box for det in cav_in_ego], config.association
            )
            mode_bound = max(
                config.min_pairs_for_correction, config.registration.sample_size
            )
            mode = cooperative_mode(association, mode_bound)
        except ConvergenceError:
            mode = (
                CooperativeMode.UNCORRECTED_COOPERATIVE
                if cav_in_ego
                else CooperativeMode.SINGLE_VEHICLE
            )

    if mode is CooperativeMode.CORRECTED_COOPERATIVE:
        ego_centers = np.array([ego_boxes[i].center for i, _ in association.pairs])
        cav_centers = np.array(
            [cav_in_ego[j].box.center for _, j in association.pairs]
        )
        try:
            registration = estimate_correction(
                ego_centers, cav_centers, config.registration
            )
        except (InsufficientPairsError, EstimationFailedError):
            registration = None
        if registration is not None:
            correction = registration.correction
            cav_in_ego = [
                Detection(apply_transform(correction, det.box), det.confidence)
                for det in cav_in_ego
            ]
            applied = compose_final(pose_guess, correction)
            correction_applied = True

    if mode is CooperativeMode.SINGLE_VEHICLE:
        fused = nms(list(ego_detections), config.nms_iou_threshold)
    else:
        fused = nms(list(ego_detections) + cav_in_ego, config.nms_iou_threshold)

    return FusionOutput(
        objects=fused,
        applied_transform=applied,
        correction_applied=correction_applied,
        mode=mode,
        association=association,
        registration=registration,
    )
