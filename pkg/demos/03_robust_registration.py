"""Correcting a rigid transform from noisy correspondences.

A handful of matched center pairs, nearly a third of them wrong, still
pin down the residual transform between two frames: random 3-point
samples, SVD alignment, and an inlier vote do the work.
"""

import math

import numpy as np

from coopfuse import (
    RansacConfig,
    compose_final,
    estimate_correction,
    inlier_ratio,
    kabsch,
    rotation_about_z,
    rre,
    rte,
    RigidTransform,
)

rng = np.random.default_rng(9)

# the unknown residual error between the pose guess and the truth:
# 2 degrees of yaw and almost a meter of offset
residual = RigidTransform(
    rotation=rotation_about_z(math.radians(2.0)),
    translation=np.array([0.8, -0.4, 0.1]),
)

cav_pts = rng.uniform([-5.0, -8.0, 0.0], [35.0, 8.0, 1.5], (12, 3))
ego_pts = cav_pts @ residual.rotation.T + residual.translation
ego_pts += rng.normal(0.0, 0.05, ego_pts.shape)  # detector jitter

# corrupt four correspondences: wrong-object matches meters away
for idx in (2, 5, 7, 10):
    cav_pts[idx] += rng.uniform(4.0, 9.0, 3) * rng.choice([-1.0, 1.0], 3)

before = np.linalg.norm(ego_pts - cav_pts, axis=1)
print("residual per pair before correction (m):\n", np.round(before, 2))

# plain SVD alignment is poisoned by the outliers
naive = kabsch(ego_pts, cav_pts)
print("\nnaive fit rotation error: ", round(math.degrees(rre(residual.rotation, naive.rotation)), 2), "deg")
print("naive fit translation err:", round(rte(residual.translation, naive.translation), 2), "m")

result = estimate_correction(ego_pts, cav_pts, RansacConfig(seed=1))
print("\nrandom-sampling estimate after", result.rounds_run, "rounds:")
print("  inlier ratio:", result.inlier_ratio, " inliers:", result.inliers)
print("  rotation error:   ", f"{math.degrees(rre(residual.rotation, result.correction.rotation)):.4f}", "deg")
print("  translation error:", f"{rte(residual.translation, result.correction.translation):.4f}", "m")

ratio, _ = inlier_ratio(ego_pts, cav_pts, result.correction, 0.25)
print("  re-scored ratio:  ", ratio)

# composing the correction onto a pose guess fixes the overall transform
guess = RigidTransform(rotation=np.eye(3), translation=np.zeros(3))
overall = compose_final(guess, result.correction)
applied = cav_pts[result.inliers, :] @ overall.rotation.T + overall.translation
after = np.linalg.norm(ego_pts[result.inliers, :] - applied, axis=1)
print("\ninlier residual after correction (m):\n", np.round(after, 3))
