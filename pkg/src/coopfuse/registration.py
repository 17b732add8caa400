"""Correction-transform estimation from matched box centers.

The pose-derived transform between the vehicles is noisy; the residual rigid
motion that still separates matched Ego / transformed-CAV centers is
recovered here.  A closed-form SVD alignment (Kabsch) fits a candidate on a
small random sample of pairs, an inlier ratio scores it against all pairs,
and the best of many rounds wins.  Matched pairs can be wrong, so the
sampling loop is what makes the estimate robust to outliers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .geometry import RigidTransform, compose
from .rng import stream

__all__ = [
    "RansacConfig",
    "RegistrationResult",
    "DegenerateGeometryError",
    "InsufficientPairsError",
    "EstimationFailedError",
    "kabsch",
    "inlier_ratio",
    "estimate_correction",
    "compose_final",
]

#: Second singular value of the cross-covariance below which the rotation is
#: underdetermined (collinear or coincident sample points).
DEGENERACY_TOL = 1e-9


class DegenerateGeometryError(ValueError):
    """Sample points leave the rotation underdetermined (collinear)."""


class InsufficientPairsError(ValueError):
    """Fewer matched pairs than the sample size; no estimate possible."""


class EstimationFailedError(RuntimeError):
    """Every sampling round hit degenerate geometry."""


@dataclass(frozen=True)
class RansacConfig:
    """Random-sampling parameters for the correction estimate."""

    rounds: int = 50
    sample_size: int = 3
    inlier_threshold: float = 0.25
    seed: int = 0
    refit: bool = True
    max_redraws: int = 10

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.sample_size < 3:
            raise ValueError(f"sample_size must be >= 3, got {self.sample_size}")
        if self.inlier_threshold <= 0.0:
            raise ValueError(
                f"inlier_threshold must be positive, got {self.inlier_threshold}"
            )


@dataclass(frozen=True)
class RegistrationResult:
    correction: RigidTransform
    inlier_ratio: float
    inliers: tuple[int, ...]
    rounds_run: int


def _as_points(points: ArrayLike, name: str) -> NDArray[np.float64]:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"{name} must have shape (k, 3), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return pts


def kabsch(ego_points: ArrayLike, cav_points: ArrayLike) -> RigidTransform:
    """Least-squares rigid transform T with ego ~= T(cav).

    Minimizes the summed squared residuals ``|x_i - (R y_i + t)|^2`` over
    proper rotations; the reflection case is folded back into SO(3) by the
    determinant sign correction.
    """
    ego = _as_points(ego_points, "ego_points")
    cav = _as_points(cav_points, "cav_points")
    if len(ego) != len(cav):
        raise ValueError(f"point counts differ: {len(ego)} vs {len(cav)}")
    if len(ego) < 3:
        raise ValueError(f"need at least 3 point pairs, got {len(ego)}")
    ego_mean = ego.mean(axis=0)
    cav_mean = cav.mean(axis=0)
    cross = (ego - ego_mean).T @ (cav - cav_mean)
    left, singular, right_t = np.linalg.svd(cross)
    if singular[1] < DEGENERACY_TOL:
        raise DegenerateGeometryError(
            f"second singular value {singular[1]:.3e} below {DEGENERACY_TOL:.0e}; "
            "points are (near-)collinear"
        )
    sign = float(np.sign(np.linalg.det(left @ right_t)))
    rotation = left @ np.diag([1.0, 1.0, sign]) @ right_t
    translation = ego_mean - rotation @ cav_mean
    return RigidTransform(rotation, translation)


def inlier_ratio(
    ego_points: ArrayLike,
    cav_points: ArrayLike,
    transform: RigidTransform,
    threshold: float,
) -> tuple[float, tuple[int, ...]]:
    """Fraction (and indices) of pairs aligned within ``threshold`` meters.

    The boundary counts: a residual exactly equal to the threshold is an
    inlier.
    """
    ego = _as_points(ego_points, "ego_points")
    cav = _as_points(cav_points, "cav_points")
    if len(ego) == 0:
        raise ValueError("inlier_ratio needs at least one pair")
    residuals = np.linalg.norm(
        ego - (cav @ transform.rotation.T + transform.translation), axis=1
    )
    inliers = tuple(int(i) for i in np.flatnonzero(residuals <= threshold))
    return len(inliers) / len(ego), inliers


def estimate_correction(
    ego_points: ArrayLike,
    cav_points: ArrayLike,
    config: RansacConfig = RansacConfig(),
) -> RegistrationResult:
    """Robust correction transform from matched (possibly wrong) pairs.

    Each round draws ``sample_size`` distinct pairs from a per-round stream,
    fits a candidate with kabsch (redrawing a bounded number of times if the
    sample is collinear), and scores it by inlier ratio; the round with the
    highest ratio wins, earliest round on ties.  A winning ratio of 1.0 ends
    the search early.  With ``refit`` on, the winner is re-fit on all of its
    inliers; the polish is kept only if it does not lose inliers.

    Pairs are put in a canonical coordinate order before sampling, so the
    result is invariant to the order the caller lists them in.
    """
    ego = _as_points(ego_points, "ego_points")
    cav = _as_points(cav_points, "cav_points")
    if len(ego) != len(cav):
        raise ValueError(f"point counts differ: {len(ego)} vs {len(cav)}")
    count = len(ego)
    if count < config.sample_size:
        raise InsufficientPairsError(
            f"{count} matched pairs but sample_size={config.sample_size}"
        )
    order = np.lexsort((cav[:, 2], cav[:, 1], cav[:, 0], ego[:, 2], ego[:, 1], ego[:, 0]))
    ego_sorted = ego[order]
    cav_sorted = cav[order]

    best_ratio = -1.0
    best_transform: RigidTransform | None = None
    best_inliers: tuple[int, ...] = ()
    rounds_run = 0
    for round_index in range(config.rounds):
        rounds_run = round_index + 1
        rng = stream(config.seed, "registration-round", round_index)
        candidate: RigidTransform | None = None
        for _ in range(config.max_redraws + 1):
            picks = rng.choice(count, size=config.sample_size, replace=False)
            try:
                candidate = kabsch(ego_sorted[picks], cav_sorted[picks])
            except DegenerateGeometryError:
                continue
            break
        if candidate is None:
            continue
        ratio, inliers = inlier_ratio(ego, cav, candidate, config.inlier_threshold)
        if ratio > best_ratio:
            best_ratio = ratio
            best_transform = candidate
            best_inliers = inliers
        if best_ratio == 1.0:
            break
    if best_transform is None:
        raise EstimationFailedError(
            f"all {rounds_run} rounds drew degenerate samples"
        )

    if config.refit and len(best_inliers) >= config.sample_size:
        subset = list(best_inliers)
        try:
            polished = kabsch(ego[subset], cav[subset])
        except DegenerateGeometryError:
            polished = None
        if polished is not None:
            ratio, inliers = inlier_ratio(ego, cav, polished, config.inlier_threshold)
            if ratio >= best_ratio:
                best_transform = polished
                best_ratio = ratio
                best_inliers = inliers

    return RegistrationResult(
        correction=best_transform,
        inlier_ratio=best_ratio,
        inliers=best_inliers,
        rounds_run=rounds_run,
    )


def compose_final(first: RigidTransform, second: RigidTransform) -> RigidTransform:
    """Overall transform applying ``first`` and then ``second``."""
    return compose(second, first)
