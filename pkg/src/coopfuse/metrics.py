"""Scoring: average precision, transform errors, and bandwidth arithmetic."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .fusion import Detection
from .geometry import OrientedBox, box_iou_3d, log_rotation

__all__ = [
    "PrecisionRecallCurve",
    "TransformError",
    "BandwidthSpec",
    "EmptyGroundTruthError",
    "rre",
    "rte",
    "average_precision",
    "bandwidth",
]


class EmptyGroundTruthError(ValueError):
    """Average precision is undefined without ground truth."""


@dataclass(frozen=True)
class PrecisionRecallCurve:
    """Running (recall, precision) points and the exact area under the envelope."""

    points: tuple[tuple[float, float], ...]
    ap: float


@dataclass(frozen=True)
class TransformError:
    """Rotation error in radians and translation error in meters."""

    rre: float
    rte: float


@dataclass(frozen=True)
class BandwidthSpec:
    """Link budget factors: rate x items x dims x bits."""

    frame_rate_hz: float
    items_per_frame: float
    dims_per_item: float
    bits_per_dim: float

    def __post_init__(self) -> None:
        for name in ("frame_rate_hz", "items_per_frame", "dims_per_item", "bits_per_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


def rre(rotation_true: NDArray[np.float64], rotation_est: NDArray[np.float64]) -> float:
    """Relative rotation error: angle of the rotation separating the two, radians."""
    return log_rotation(np.asarray(rotation_true).T @ np.asarray(rotation_est))


def rte(translation_true: ArrayLike, translation_est: ArrayLike) -> float:
    """Relative translation error: Euclidean distance, meters."""
    diff = np.asarray(translation_true, dtype=float) - np.asarray(translation_est, dtype=float)
    return float(np.linalg.norm(diff))


def average_precision(
    detections: Sequence[tuple[Hashable, Detection]],
    ground_truths: Sequence[tuple[Hashable, OrientedBox]],
    iou_min: float,
) -> PrecisionRecallCurve:
    """AP at a fixed IoU threshold over frame-tagged detections.

    Detections are ranked by confidence (ties keep input order) and each one
    greedily claims the highest-IoU unclaimed ground truth of its own frame;
    a claim at IoU >= iou_min is a true positive, anything else a false
    positive.  The returned ap is the exact area under the precision
    envelope as a function of recall (all-point interpolation).
    """
    if not 0.0 < iou_min < 1.0:
        raise ValueError(f"iou_min must be in (0, 1), got {iou_min}")
    if len(ground_truths) == 0:
        raise EmptyGroundTruthError("no ground-truth boxes; AP undefined")
    gt_by_frame: dict[Hashable, list[OrientedBox]] = {}
    for frame, box in ground_truths:
        gt_by_frame.setdefault(frame, []).append(box)
    claimed: dict[Hashable, list[bool]] = {
        frame: [False] * len(boxes) for frame, boxes in gt_by_frame.items()
    }

    order = sorted(range(len(detections)), key=lambda i: (-detections[i][1].confidence, i))
    tp = np.zeros(len(detections), dtype=bool)
    for rank, det_index in enumerate(order):
        frame, det = detections[det_index]
        candidates = gt_by_frame.get(frame, [])
        best_iou, best_gt = 0.0, -1
        for gt_index, box in enumerate(candidates):
            if claimed[frame][gt_index]:
                continue
            iou = box_iou_3d(det.box, box)
            if iou > best_iou:
                best_iou, best_gt = iou, gt_index
        if best_gt >= 0 and best_iou >= iou_min:
            claimed[frame][best_gt] = True
            tp[rank] = True

    n_gt = len(ground_truths)
    if len(detections) == 0:
        return PrecisionRecallCurve(points=(), ap=0.0)
    tp_cum = np.cumsum(tp)
    ranks = np.arange(1, len(detections) + 1)
    recall = tp_cum / n_gt
    precision = tp_cum / ranks
    # precision envelope: best precision achievable at or beyond each recall
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    recall_steps = np.diff(np.concatenate(([0.0], recall)))
    ap = float(np.sum(recall_steps * envelope))
    points = tuple((float(r), float(p)) for r, p in zip(recall, precision))
    return PrecisionRecallCurve(points=points, ap=ap)


def bandwidth(spec: BandwidthSpec) -> float:
    """Required link bandwidth in bits per second."""
    return (
        spec.frame_rate_hz * spec.items_per_frame * spec.dims_per_item * spec.bits_per_dim
    )
