"""Shared test oracles: independent routes to the answers the package computes.

Everything here is deliberately naive — enumeration, Monte Carlo sampling,
and small LAP re-solves — so a bug in the package's fast path cannot hide in
its test.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linear_sum_assignment

from coopfuse.geometry import OrientedBox, box_corners_bev

FORBIDDEN = 1e9


def mc_box_iou(
    a: OrientedBox, b: OrientedBox, rng: np.random.Generator, samples: int = 100_000
) -> float:
    """Monte Carlo IoU: uniform points in the joint bounding box, membership counts."""
    corners = np.vstack([box_corners_bev(a), box_corners_bev(b)])
    lo = np.array(
        [corners[:, 0].min(), corners[:, 1].min(), min(_z_lo(a), _z_lo(b))]
    )
    hi = np.array(
        [corners[:, 0].max(), corners[:, 1].max(), max(_z_hi(a), _z_hi(b))]
    )
    points = rng.uniform(lo, hi, size=(samples, 3))
    in_a = _points_in_box(points, a)
    in_b = _points_in_box(points, b)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union


def _z_lo(box: OrientedBox) -> float:
    return float(box.center[2]) - 0.5 * float(box.extent[2])


def _z_hi(box: OrientedBox) -> float:
    return float(box.center[2]) + 0.5 * float(box.extent[2])


def _points_in_box(points: np.ndarray, box: OrientedBox) -> np.ndarray:
    offsets = points - box.center
    c, s = np.cos(box.yaw), np.sin(box.yaw)
    local_x = c * offsets[:, 0] + s * offsets[:, 1]
    local_y = -s * offsets[:, 0] + c * offsets[:, 1]
    half = 0.5 * box.extent
    return (
        (np.abs(local_x) <= half[0])
        & (np.abs(local_y) <= half[1])
        & (np.abs(offsets[:, 2]) <= half[2])
    )


def matching_cost(cost: np.ndarray, dustbin_cost: float, pairs) -> float:
    """Total cost of a partial matching: matched entries plus dustbin fees."""
    m, n = cost.shape
    return float(
        sum(cost[i, j] for i, j in pairs) + dustbin_cost * (m + n - len(pairs))
    )


def brute_force_matching(
    cost: np.ndarray, dustbin_cost: float
) -> tuple[float, set[tuple[int, int]]]:
    """Exhaustive minimum over every partial matching; m, n <= 6 only."""
    m, n = cost.shape
    assert m <= 6 and n <= 6, "enumeration blows up beyond 6x6"
    best_cost = np.inf
    best_pairs: set[tuple[int, int]] = set()
    for k in range(min(m, n) + 1):
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.permutations(range(n), k):
                pairs = set(zip(rows, cols))
                total = matching_cost(cost, dustbin_cost, pairs)
                if total < best_cost - 1e-12:
                    best_cost = total
                    best_pairs = pairs
    return best_cost, best_pairs


def second_best_gap(cost: np.ndarray, dustbin_cost: float) -> float:
    """Cost gap between the optimal matching and the best different matching.

    Every matching other than the optimum either misses one of its pairs or
    contains a pair between indices the optimum leaves unmatched, so re-solving
    with each optimal pair forbidden and each unmatched-unmatched pair forced
    covers all alternatives.
    """
    m, n = cost.shape
    size = m + n
    square = np.full((size, size), dustbin_cost)
    square[:m, :n] = cost
    rows, cols = linear_sum_assignment(square)
    best = float(square[rows, cols].sum())
    optimal = {(int(i), int(j)) for i, j in zip(rows, cols) if i < m and j < n}
    alternatives = []
    for i, j in optimal:
        forbidden = square.copy()
        forbidden[i, j] = FORBIDDEN
        r, c = linear_sum_assignment(forbidden)
        alternatives.append(float(forbidden[r, c].sum()))
    matched_rows = {i for i, _ in optimal}
    matched_cols = {j for _, j in optimal}
    for i in range(m):
        if i in matched_rows:
            continue
        for j in range(n):
            if j in matched_cols:
                continue
            keep_r = [r for r in range(size) if r != i]
            keep_c = [c for c in range(size) if c != j]
            reduced = square[np.ix_(keep_r, keep_c)]
            r, c = linear_sum_assignment(reduced)
            alternatives.append(float(reduced[r, c].sum() + square[i, j]))
    if not alternatives:
        return np.inf
    return min(alternatives) - best


def place_separated(rng, count, lo, hi, min_sep, existing=None):
    """Rejection-sample up to ``count`` points at pairwise distance >= min_sep."""
    anchor = [] if existing is None else list(existing)
    placed = []
    for _ in range(10_000):
        if len(placed) == count:
            break
        candidate = rng.uniform(lo, hi)
        if all(np.linalg.norm(candidate - p) >= min_sep for p in anchor):
            anchor.append(candidate)
            placed.append(candidate)
    return placed


def scene_instance(
    rng: np.random.Generator, sigma: float = 0.8
) -> tuple[np.ndarray, np.ndarray]:
    """Association workload: separated ego centers, noisy shared subset + clutter.

    Mirrors what the pipeline actually feeds the matcher: both views share a
    random number of objects (center noise ``sigma``), and each has clutter
    the other cannot see.  Sizes are 1..8 per side.
    """
    m = int(rng.integers(1, 9))
    n = int(rng.integers(1, 9))
    lo = np.array([0.0, -8.0, 0.0])
    hi = np.array([40.0, 8.0, 2.0])
    ego = place_separated(rng, m, lo, hi, 6.0)
    m = len(ego)
    shared = int(rng.integers(0, min(m, n) + 1))
    picks = rng.choice(m, size=shared, replace=False)
    cav = [ego[i] + rng.normal(0.0, sigma, 3) for i in picks]
    cav += place_separated(rng, n - shared, lo, hi, 6.0, existing=cav)
    return np.asarray(ego).reshape(m, 3), np.asarray(cav).reshape(len(cav), 3)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation matrix (QR of a Gaussian matrix, sign-fixed)."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_vehicle_box(
    rng: np.random.Generator, center_scale: float = 2.0
) -> OrientedBox:
    """Vehicle-sized box near the origin with random yaw, for IoU fuzzing."""
    center = np.array(
        [
            rng.uniform(-center_scale, center_scale),
            rng.uniform(-center_scale, center_scale),
            rng.uniform(0.6, 1.2),
        ]
    )
    extent = np.array(
        [rng.uniform(3.5, 5.5), rng.uniform(1.6, 2.2), rng.uniform(1.4, 1.9)]
    )
    return OrientedBox(center, rng.uniform(-np.pi, np.pi), extent)
