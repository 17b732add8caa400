"""SE(3) poses, Euler rotations, oriented boxes, and rotated-box IoU.

Conventions used throughout the package:

* Euler angles are ``(pitch, roll, yaw)`` in radians and compose as
  ``Rx(pitch) @ Ry(roll) @ Rz(yaw)`` (intrinsic X-Y-Z).
* Angles are kept in ``(-pi, pi]``.
* Boxes are gravity aligned: the only free rotation is yaw, and the extent
  is ``(length, width, height)`` along the box axes.
* IoU is bird's-eye-view polygon intersection times vertical overlap,
  divided by the union volume, which is exact for yaw-only boxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "Pose",
    "RigidTransform",
    "OrientedBox",
    "wrap_angle",
    "rotation_about_x",
    "rotation_about_y",
    "rotation_about_z",
    "rotation_from_euler",
    "yaw_of_rotation",
    "relative_transform",
    "pose_transform",
    "invert_transform",
    "compose",
    "identity_transform",
    "transform_points",
    "apply_transform",
    "log_rotation",
    "box_corners_bev",
    "box_iou_3d",
]

_ORTHO_TOL = 1e-9


def wrap_angle(angle: float) -> float:
    """Wrap an angle in radians to the half-open interval (-pi, pi]."""
    return math.pi - (math.pi - angle) % math.tau


def _as_vec3(value: ArrayLike, name: str) -> NDArray[np.float64]:
    vec = np.asarray(value, dtype=float)
    if vec.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{name} must be finite, got {vec}")
    return vec


@dataclass(frozen=True)
class Pose:
    """6-DoF vehicle state: world position plus (pitch, roll, yaw) angles."""

    position: NDArray[np.float64]
    angles: NDArray[np.float64]

    def __post_init__(self) -> None:
        position = _as_vec3(self.position, "position")
        angles = _as_vec3(self.angles, "angles")
        angles = np.array([wrap_angle(a) for a in angles])
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "angles", angles)

    @property
    def yaw(self) -> float:
        return float(self.angles[2])


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) element: ``x -> rotation @ x + translation``."""

    rotation: NDArray[np.float64]
    translation: NDArray[np.float64]

    def __post_init__(self) -> None:
        rotation = np.asarray(self.rotation, dtype=float)
        translation = _as_vec3(self.translation, "translation")
        if rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got shape {rotation.shape}")
        if not np.allclose(rotation.T @ rotation, np.eye(3), atol=1e-8):
            raise ValueError("rotation is not orthonormal")
        if not math.isclose(float(np.linalg.det(rotation)), 1.0, abs_tol=1e-8):
            raise ValueError("rotation must be proper (det +1)")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)


@dataclass(frozen=True)
class OrientedBox:
    """Yaw-rotated 3D box: center, yaw, and (length, width, height) extent."""

    center: NDArray[np.float64]
    yaw: float
    extent: NDArray[np.float64]

    def __post_init__(self) -> None:
        center = _as_vec3(self.center, "center")
        extent = _as_vec3(self.extent, "extent")
        if not np.all(extent > 0):
            raise ValueError(f"extent must be strictly positive, got {extent}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))
        object.__setattr__(self, "extent", extent)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))


def rotation_about_x(angle: float) -> NDArray[np.float64]:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_about_y(angle: float) -> NDArray[np.float64]:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_about_z(angle: float) -> NDArray[np.float64]:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_euler(angles: ArrayLike) -> NDArray[np.float64]:
    """Rotation matrix for (pitch, roll, yaw): ``Rx(pitch) @ Ry(roll) @ Rz(yaw)``."""
    pitch, roll, yaw = np.asarray(angles, dtype=float)
    return rotation_about_x(pitch) @ rotation_about_y(roll) @ rotation_about_z(yaw)


def yaw_of_rotation(rotation: NDArray[np.float64]) -> float:
    """Heading component of a rotation: angle of the rotated x axis in the ground plane."""
    return math.atan2(rotation[1, 0], rotation[0, 0])


def identity_transform() -> RigidTransform:
    return RigidTransform(np.eye(3), np.zeros(3))


def pose_transform(pose: Pose) -> RigidTransform:
    """Local-to-world transform of an observer at the given pose."""
    return RigidTransform(rotation_from_euler(pose.angles), pose.position)


def invert_transform(transform: RigidTransform) -> RigidTransform:
    rot_inv = transform.rotation.T
    return RigidTransform(rot_inv, -rot_inv @ transform.translation)


def compose(outer: RigidTransform, inner: RigidTransform) -> RigidTransform:
    """Transform applying ``inner`` first, then ``outer``."""
    return RigidTransform(
        outer.rotation @ inner.rotation,
        outer.rotation @ inner.translation + outer.translation,
    )


def relative_transform(ego: Pose, cav: Pose) -> RigidTransform:
    """Transform mapping CAV-frame coordinates into the Ego frame.

    Rotation comes from the angle differences; the world-frame offset between
    the vehicles is rotated into the Ego frame so that transformed boxes land
    in Ego coordinates regardless of the Ego heading.
    """
    rotation = rotation_from_euler(cav.angles - ego.angles)
    ego_rotation = rotation_from_euler(ego.angles)
    translation = ego_rotation.T @ (cav.position - ego.position)
    return RigidTransform(rotation, translation)


def transform_points(transform: RigidTransform, points: ArrayLike) -> NDArray[np.float64]:
    pts = np.asarray(points, dtype=float)
    return pts @ transform.rotation.T + transform.translation


def apply_transform(transform: RigidTransform, box: OrientedBox) -> OrientedBox:
    """Re-express a box under a rigid transform; extent is carried over."""
    center = transform.rotation @ box.center + transform.translation
    yaw = wrap_angle(box.yaw + yaw_of_rotation(transform.rotation))
    return OrientedBox(center, yaw, box.extent)


def log_rotation(rotation: NDArray[np.float64]) -> float:
    """Rotation angle ``|r|`` of the axis-angle vector, via the trace formula."""
    cos_angle = 0.5 * float(np.trace(rotation)) - 0.5
    return math.acos(min(1.0, max(-1.0, cos_angle)))


# ---------------------------------------------------------------------------
# Rotated-box IoU: convex polygon clipping in the ground plane.

def box_corners_bev(box: OrientedBox) -> NDArray[np.float64]:
    """Footprint corners (4, 2) in counterclockwise order."""
    half_l, half_w = 0.5 * box.extent[0], 0.5 * box.extent[1]
    corners = np.array(
        [[half_l, half_w], [-half_l, half_w], [-half_l, -half_w], [half_l, -half_w]]
    )
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    rot = np.array([[c, -s], [s, c]])
    return corners @ rot.T + box.center[:2]


def _clip_polygon(subject: NDArray[np.float64], clip: NDArray[np.float64]) -> NDArray[np.float64]:
    """Sutherland-Hodgman clipping of a convex subject by a convex CCW clip polygon."""
    output = subject
    n_clip = len(clip)
    for i in range(n_clip):
        if len(output) == 0:
            break
        a = clip[i]
        b = clip[(i + 1) % n_clip]
        edge = b - a
        # signed area test: inside means left of (or on) the directed edge a->b
        offsets = output - a
        side = edge[0] * offsets[:, 1] - edge[1] * offsets[:, 0]
        clipped: list[NDArray[np.float64]] = []
        n_out = len(output)
        for j in range(n_out):
            current, nxt = output[j], output[(j + 1) % n_out]
            cur_in, nxt_in = side[j] >= 0.0, side[(j + 1) % n_out] >= 0.0
            if cur_in:
                clipped.append(current)
            if cur_in != nxt_in:
                denom = side[j] - side[(j + 1) % n_out]
                t = side[j] / denom
                clipped.append(current + t * (nxt - current))
        output = np.asarray(clipped).reshape(-1, 2)
    return output


def _polygon_area(vertices: NDArray[np.float64]) -> float:
    if len(vertices) < 3:
        return 0.0
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def box_iou_3d(a: OrientedBox, b: OrientedBox) -> float:
    """Intersection-over-union of two yaw-rotated boxes, in [0, 1]."""
    # cheap reject: centers farther apart than the footprint circumradii
    reach = 0.5 * (math.hypot(a.extent[0], a.extent[1]) + math.hypot(b.extent[0], b.extent[1]))
    if np.linalg.norm(a.center[:2] - b.center[:2]) > reach:
        return 0.0
    z_overlap = min(
        a.center[2] + 0.5 * a.extent[2], b.center[2] + 0.5 * b.extent[2]
    ) - max(a.center[2] - 0.5 * a.extent[2], b.center[2] - 0.5 * b.extent[2])
    if z_overlap <= 0.0:
        return 0.0
    bev_area = _polygon_area(_clip_polygon(box_corners_bev(a), box_corners_bev(b)))
    if bev_area <= 0.0:
        return 0.0
    intersection = bev_area * z_overlap
    union = a.volume + b.volume - intersection
    return min(1.0, max(0.0, intersection / union))
