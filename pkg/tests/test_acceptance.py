"""End-to-end acceptance checks with pinned tolerances and time budgets.

Each test covers one advertised guarantee (A1 through A8), prints a single
PASS/FAIL verdict line, and then asserts; run with ``-s`` to see the verdict
lines for passing criteria too.
"""

import dataclasses
import math
import time

import numpy as np

from coopfuse.association import (
    AssociationConfig,
    augment,
    extract_pairs,
    hungarian_oracle,
    sinkhorn_solve,
)
from coopfuse.experiment import SweepConfig, compare_methods, run_sweep
from coopfuse.fusion import PipelineConfig, fuse_frame
from coopfuse.geometry import (
    OrientedBox,
    box_iou_3d,
    relative_transform,
    rotation_about_z,
)
from coopfuse.metrics import BandwidthSpec, bandwidth, rre, rte
from coopfuse.registration import RansacConfig, estimate_correction, kabsch
from coopfuse.rng import stream, substream_seed
from coopfuse.scenario import covisible_count, generate_scene, observe, perturb_pose

from helpers import mc_box_iou, random_rotation, random_vehicle_box, scene_instance, second_best_gap


def _verdict(tag: str, ok: bool, detail: str) -> None:
    print(f"{tag} {'PASS' if ok else 'FAIL'}: {detail}")


def test_a1_transform_error_identities():
    budget_s = 1.0
    start = time.perf_counter()
    rotation_error = rre(np.eye(3), rotation_about_z(0.5))
    translation_error = rte((0.0, 0.0, 0.0), (3.0, 4.0, 0.0))
    elapsed = time.perf_counter() - start

    rre_ok = abs(rotation_error - 0.5) <= 1e-9
    rte_ok = abs(translation_error - 5.0) <= 1e-12
    time_ok = elapsed < budget_s
    _verdict(
        "A1",
        rre_ok and rte_ok and time_ok,
        f"rre={rotation_error!r} (want 0.5 +/- 1e-9), "
        f"rte={translation_error!r} (want 5.0 +/- 1e-12), {elapsed:.3f}s < {budget_s}s",
    )
    assert rre_ok
    assert rte_ok
    assert time_ok


def test_a2_transport_matches_exact_assignment():
    budget_s = 30.0
    n_instances = 500
    config = AssociationConfig()  # dustbin 10 m, epsilon 0.1, pinned defaults
    gap_threshold = 10.0 * config.epsilon
    rng = np.random.default_rng(7)

    start = time.perf_counter()
    big_gap_mismatches = 0
    big_gap_total = 0
    total_mismatches = 0
    for _ in range(n_instances):
        ego, cav = scene_instance(rng)
        cost = np.linalg.norm(ego[:, None, :] - cav[None, :, :], axis=2)
        cost_aug = augment(cost, config.dustbin_cost)
        plan = sinkhorn_solve(cost_aug, config.epsilon, config.iterations)
        pairs = set(extract_pairs(plan).pairs)
        oracle = set(hungarian_oracle(cost_aug))
        gap = second_best_gap(cost, config.dustbin_cost)
        if gap > gap_threshold:
            big_gap_total += 1
            if pairs != oracle:
                big_gap_mismatches += 1
        if pairs != oracle:
            total_mismatches += 1
    elapsed = time.perf_counter() - start

    mismatch_rate = total_mismatches / n_instances
    big_gap_ok = big_gap_mismatches == 0
    rate_ok = mismatch_rate < 0.02
    time_ok = elapsed < budget_s
    _verdict(
        "A2",
        big_gap_ok and rate_ok and time_ok,
        f"gap>{gap_threshold:g}: {big_gap_mismatches}/{big_gap_total} mismatched "
        f"(want 0), overall {total_mismatches}/{n_instances} = "
        f"{100 * mismatch_rate:.1f}% (want < 2%), {elapsed:.1f}s < {budget_s:g}s",
    )
    assert big_gap_ok
    assert rate_ok
    assert time_ok


def _sweep_degradations(axis: str):
    config = SweepConfig(
        trials_per_cell=50,
        methods=("late-fusion", "corrected"),
        master_seed=0,
    )
    records = run_sweep(config, axis=axis)
    rows = compare_methods(records)
    corrected = [r for r in rows if r.method == "corrected"]
    late = [r for r in rows if r.method == "late-fusion"]
    worst_corrected = max(r.degradation_pct for r in corrected)
    key = (lambda r: r.sigma_p) if axis == "position" else (lambda r: r.sigma_phi)
    late_at_max = max(late, key=key).degradation_pct
    return worst_corrected, late_at_max


def test_a3_position_noise_robustness():
    budget_s = 300.0
    start = time.perf_counter()
    worst_corrected, late_at_max = _sweep_degradations("position")
    elapsed = time.perf_counter() - start

    corrected_ok = worst_corrected <= 10.0
    late_ok = late_at_max >= 40.0
    time_ok = elapsed < budget_s
    _verdict(
        "A3",
        corrected_ok and late_ok and time_ok,
        f"corrected worst degradation {worst_corrected:.2f}% (want <= 10%), "
        f"late-fusion at sigma_p=1.0m {late_at_max:.2f}% (want >= 40%), "
        f"{elapsed:.0f}s < {budget_s:g}s",
    )
    assert corrected_ok
    assert late_ok
    assert time_ok


def test_a4_heading_noise_robustness():
    budget_s = 300.0
    start = time.perf_counter()
    worst_corrected, late_at_max = _sweep_degradations("heading")
    elapsed = time.perf_counter() - start

    corrected_ok = worst_corrected <= 10.0
    late_ok = late_at_max >= 40.0
    time_ok = elapsed < budget_s
    _verdict(
        "A4",
        corrected_ok and late_ok and time_ok,
        f"corrected worst degradation {worst_corrected:.2f}% (want <= 10%), "
        f"late-fusion at sigma_phi=2.5deg {late_at_max:.2f}% (want >= 40%), "
        f"{elapsed:.0f}s < {budget_s:g}s",
    )
    assert corrected_ok
    assert late_ok
    assert time_ok


def test_a5_correction_accuracy_at_one_meter_noise():
    budget_s = 120.0
    required_frames = 100
    min_covisible = 5
    master = 2025
    from coopfuse.scenario import NoiseSpec, SensorSpec

    sensor = SensorSpec()
    start = time.perf_counter()
    rte_values = []
    rre_values = []
    seed = 0
    while len(rte_values) < required_frames:
        scene = generate_scene(n_objects=20, seed=seed)
        seed += 1
        if covisible_count(scene, sensor) < min_covisible:
            continue
        k = len(rte_values)
        ego_dets = observe(scene, scene.ego_pose, sensor, stream(master, "a5", k, "ego"))
        cav_dets = observe(scene, scene.cav_pose, sensor, stream(master, "a5", k, "cav"))
        cav_noisy = perturb_pose(
            scene.cav_pose, NoiseSpec(sigma_p=1.0), stream(master, "a5", k, "noise")
        )
        pipeline = PipelineConfig(
            registration=RansacConfig(seed=substream_seed(master, "a5-registration", k))
        )
        output = fuse_frame(scene.ego_pose, cav_noisy, ego_dets, cav_dets, pipeline)
        truth = relative_transform(scene.ego_pose, scene.cav_pose)
        rre_values.append(rre(truth.rotation, output.applied_transform.rotation))
        rte_values.append(rte(truth.translation, output.applied_transform.translation))
    elapsed = time.perf_counter() - start

    mean_rte = float(np.mean(rte_values))
    within_1deg = float(np.mean(np.degrees(rre_values) <= 1.0))
    rte_ok = mean_rte < 0.25
    rre_ok = within_1deg >= 0.95
    time_ok = elapsed < budget_s
    _verdict(
        "A5",
        rte_ok and rre_ok and time_ok,
        f"mean rte {mean_rte:.3f}m over {len(rte_values)} frames (want < 0.25m), "
        f"rre <= 1deg in {100 * within_1deg:.0f}% (want >= 95%), "
        f"{elapsed:.0f}s < {budget_s:g}s",
    )
    assert rte_ok
    assert rre_ok
    assert time_ok


def test_a6_registration_recovery_and_outlier_rejection():
    budget_s = 10.0
    start = time.perf_counter()

    # exact recovery from three non-collinear points
    rotation = rotation_about_z(0.3)
    translation = np.array([1.0, -2.0, 0.5])
    cav = np.array([[0.0, 0.0, 0.0], [4.0, 0.0, 0.0], [0.0, 3.0, 1.0]])
    ego = cav @ rotation.T + translation
    recovered = kabsch(ego, cav)
    clean_rre = rre(rotation, recovered.rotation)
    clean_rte = rte(translation, recovered.translation)
    clean_ok = clean_rre <= 1e-6 and clean_rte <= 1e-6

    # 100 seeded trials at 30 percent outliers: every true pair ends up an
    # inlier of the estimate, every corrupted pair is rejected
    n_pairs, n_outliers, rounds = 20, 6, 200
    trials_with_wrong_inliers = 0
    for trial in range(100):
        rng = np.random.default_rng(trial)
        true_rotation = random_rotation(rng)
        true_translation = rng.uniform(-10.0, 10.0, 3)
        cav_pts = rng.uniform(-20.0, 20.0, (n_pairs, 3))
        ego_pts = cav_pts @ true_rotation.T + true_translation
        outlier_idx = rng.choice(n_pairs, size=n_outliers, replace=False)
        for idx in outlier_idx:
            cav_pts[idx] += rng.uniform(5.0, 15.0, 3) * rng.choice([-1.0, 1.0], 3)
        result = estimate_correction(
            ego_pts, cav_pts, RansacConfig(rounds=rounds, seed=trial)
        )
        if set(result.inliers) != set(range(n_pairs)) - set(outlier_idx):
            trials_with_wrong_inliers += 1
    elapsed = time.perf_counter() - start

    outlier_ok = trials_with_wrong_inliers == 0
    time_ok = elapsed < budget_s
    _verdict(
        "A6",
        clean_ok and outlier_ok and time_ok,
        f"clean recovery rre={clean_rre:.2e} rte={clean_rte:.2e} (want <= 1e-6), "
        f"inlier sets wrong in {trials_with_wrong_inliers}/100 trials (want 0), "
        f"{elapsed:.1f}s < {budget_s:g}s",
    )
    assert clean_ok
    assert outlier_ok
    assert time_ok


def test_a7_iou_against_monte_carlo():
    budget_s = 30.0
    n_pairs = 200
    samples = 100_000
    rng = np.random.default_rng(11)

    start = time.perf_counter()
    worst = 0.0
    for _ in range(n_pairs):
        a = random_vehicle_box(rng)
        b = random_vehicle_box(rng)
        analytic = box_iou_3d(a, b)
        estimate = mc_box_iou(a, b, rng, samples=samples)
        worst = max(worst, abs(analytic - estimate))

    cube = np.array([1.0, 1.0, 1.0])
    upright = OrientedBox(np.zeros(3), 0.0, cube)
    tilted = OrientedBox(np.zeros(3), math.pi / 4, cube)
    diagonal_iou = box_iou_3d(upright, tilted)
    diagonal_err = abs(diagonal_iou - 1.0 / math.sqrt(2.0))
    elapsed = time.perf_counter() - start

    mc_ok = worst <= 0.01
    diagonal_ok = diagonal_err <= 1e-6
    time_ok = elapsed < budget_s
    _verdict(
        "A7",
        mc_ok and diagonal_ok and time_ok,
        f"max |analytic - MC({samples})| = {worst:.4f} over {n_pairs} pairs "
        f"(want <= 0.01), 45deg cube iou {diagonal_iou:.10f} within {diagonal_err:.1e} "
        f"of 1/sqrt(2) (want <= 1e-6), {elapsed:.1f}s < {budget_s:g}s",
    )
    assert mc_ok
    assert diagonal_ok
    assert time_ok


def test_a8_bandwidth_budget():
    bps = bandwidth(
        BandwidthSpec(
            frame_rate_hz=10.0, items_per_frame=20.0, dims_per_item=8.0, bits_per_dim=32.0
        )
    )
    bps_ok = bps == 51200.0
    kbps_ok = bps / 1000.0 == 51.2
    _verdict(
        "A8",
        bps_ok and kbps_ok,
        f"10Hz x 20 boxes x 8 dims x 32 bits = {bps!r} bps "
        f"(want exactly 51200.0) = {bps / 1000.0!r} Kbps (want exactly 51.2)",
    )
    assert bps_ok
    assert kbps_ok
