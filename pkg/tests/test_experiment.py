"""Noise sweeps: paired trials, aggregation, and the records pipeline."""

import csv
import math

import pytest

from coopfuse.experiment import (
    AXES,
    CSV_COLUMNS,
    METHODS,
    ComparisonRow,
    ExperimentRecord,
    GridMismatchError,
    SweepConfig,
    compare_methods,
    format_comparison,
    records_to_dicts,
    run_sweep,
    write_records_csv,
)
from coopfuse.scenario import PlacementError, SensorSpec

CLEAN_SENSOR = SensorSpec(
    range_m=50.0,
    fov=math.tau,
    miss_rate=0.0,
    center_jitter=0.0,
    yaw_jitter=0.0,
    false_positive_rate=0.0,
)


def tiny_config(**overrides):
    defaults = dict(
        sigma_p_grid_m=(0.0, 1.0),
        sigma_phi_grid_deg=(0.0,),
        trials_per_cell=2,
        methods=("no-fusion",),
        n_objects=8,
        sensor=CLEAN_SENSOR,
        master_seed=7,
    )
    defaults.update(overrides)
    return SweepConfig(**defaults)


def record(method, sigma_p, sigma_phi, ap, trials=10):
    return ExperimentRecord(
        method=method,
        sigma_p=sigma_p,
        sigma_phi=sigma_phi,
        ap=ap,
        mean_rre=0.0,
        mean_rte=0.0,
        mean_inlier_ratio=0.0,
        trials=trials,
    )


class TestSweepConfig:
    def test_rejects_empty_grids(self):
        with pytest.raises(ValueError):
            SweepConfig(sigma_p_grid_m=())
        with pytest.raises(ValueError):
            SweepConfig(sigma_phi_grid_deg=())

    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            SweepConfig(trials_per_cell=0)

    def test_rejects_unknown_methods(self):
        with pytest.raises(ValueError, match="early-fusion"):
            SweepConfig(methods=("no-fusion", "early-fusion"))

    def test_default_methods_are_the_known_three(self):
        assert SweepConfig().methods == METHODS == (
            "no-fusion",
            "late-fusion",
            "corrected",
        )


class TestRunSweep:
    def test_axis_cell_counts(self):
        config = tiny_config(
            sigma_p_grid_m=(0.0, 0.5, 1.0), sigma_phi_grid_deg=(0.0, 1.0)
        )
        assert len(run_sweep(config, axis="position")) == 3
        assert len(run_sweep(config, axis="heading")) == 2
        # "both" concatenates the single-axis sweeps, sharing the (0, 0) cell
        assert len(run_sweep(config, axis="both")) == 3 + 2 - 1
        assert len(run_sweep(config, axis="joint")) == 3 * 2

    def test_axis_validation(self):
        with pytest.raises(ValueError, match=str(AXES)):
            run_sweep(tiny_config(), axis="diagonal")

    def test_deterministic_per_seed(self):
        config = tiny_config(methods=("no-fusion", "corrected"))
        assert run_sweep(config, axis="position") == run_sweep(config, axis="position")

    def test_different_seeds_differ(self):
        a = run_sweep(tiny_config(master_seed=1), axis="position")
        b = run_sweep(tiny_config(master_seed=2), axis="position")
        assert a != b

    def test_no_fusion_is_constant_across_cells(self):
        # the baseline ignores the CAV entirely, so identical trials give
        # bit-equal AP in every noise cell
        config = tiny_config(sigma_p_grid_m=(0.0, 0.5, 1.0), trials_per_cell=3)
        records = run_sweep(config, axis="position")
        aps = {r.ap for r in records}
        assert len(aps) == 1
        for r in records:
            assert r.mean_rre == 0.0
            assert r.mean_rte == 0.0
            assert r.mean_inlier_ratio == 0.0
            assert r.trials == 3

    def test_noiseless_corrected_is_error_free(self):
        config = tiny_config(
            sigma_p_grid_m=(0.0,),
            methods=("corrected",),
            n_objects=12,
            trials_per_cell=2,
        )
        (rec,) = run_sweep(config, axis="position")
        assert rec.ap == pytest.approx(1.0, abs=1e-9)
        assert rec.mean_rre < 1e-6
        assert rec.mean_rte < 1e-6
        assert rec.mean_inlier_ratio == pytest.approx(1.0)

    def test_correction_beats_late_fusion_under_position_noise(self):
        # at sigma_p = 1 m the raw pose error has mean ~1.6 m; the corrected
        # transform should cut the mean translation error well below it
        config = tiny_config(
            sigma_p_grid_m=(0.0, 1.0),
            methods=("late-fusion", "corrected"),
            n_objects=14,
            trials_per_cell=30,
        )
        records = run_sweep(config, axis="position")
        by_key = {(r.method, r.sigma_p): r for r in records}
        late = by_key[("late-fusion", 1.0)]
        corrected = by_key[("corrected", 1.0)]
        assert late.mean_rte > 1.0
        assert corrected.mean_rte < 0.5 * late.mean_rte
        assert corrected.ap >= late.ap
        assert corrected.mean_inlier_ratio > 0.5

    def test_placement_failure_names_the_trial(self):
        config = tiny_config(n_objects=500, trials_per_cell=1)
        with pytest.raises(PlacementError, match="trial 0"):
            run_sweep(config, axis="position")


class TestCompareMethods:
    def test_degradation_is_relative_to_noiseless_cell(self):
        records = [
            record("no-fusion", 0.0, 0.0, 0.8),
            record("no-fusion", 1.0, 0.0, 0.8),
            record("late-fusion", 0.0, 0.0, 0.9),
            record("late-fusion", 1.0, 0.0, 0.45),
        ]
        rows = compare_methods(records)
        by_key = {(r.method, r.sigma_p): r for r in rows}
        assert by_key[("no-fusion", 1.0)].degradation_pct == pytest.approx(0.0)
        assert by_key[("late-fusion", 1.0)].degradation_pct == pytest.approx(50.0)
        assert by_key[("late-fusion", 0.0)].degradation_pct == pytest.approx(0.0)

    def test_grid_mismatch_raises(self):
        records = [
            record("no-fusion", 0.0, 0.0, 0.8),
            record("late-fusion", 0.0, 0.0, 0.9),
            record("late-fusion", 1.0, 0.0, 0.5),
        ]
        with pytest.raises(GridMismatchError):
            compare_methods(records)

    def test_missing_noiseless_baseline_raises(self):
        records = [
            record("no-fusion", 0.5, 0.0, 0.8),
            record("no-fusion", 1.0, 0.0, 0.7),
        ]
        with pytest.raises(GridMismatchError, match="baseline"):
            compare_methods(records)

    def test_zero_baseline_reports_zero_degradation(self):
        records = [record("no-fusion", 0.0, 0.0, 0.0), record("no-fusion", 1.0, 0.0, 0.0)]
        rows = compare_methods(records)
        assert all(r.degradation_pct == 0.0 for r in rows)


class TestFormatting:
    ROWS = [
        ComparisonRow("corrected", 1.0, 0.0, 0.875, 3.25),
        ComparisonRow("late-fusion", 1.0, math.radians(2.5), 0.5, 44.0),
    ]

    def test_format_comparison_layout(self):
        text = format_comparison(self.ROWS)
        lines = text.splitlines()
        assert len(lines) == 2 + len(self.ROWS)
        assert lines[0].split() == ["method", "sigma_p_m", "sigma_phi_deg", "ap", "degr_%"]
        assert "corrected" in lines[2]
        assert "2.50" in lines[3]  # radians shown as degrees
        assert "44.00" in lines[3]

    def test_records_to_dicts_converts_angles(self):
        rec = ExperimentRecord(
            method="corrected",
            sigma_p=0.5,
            sigma_phi=math.pi,
            ap=0.9,
            mean_rre=math.pi / 2,
            mean_rte=0.1,
            mean_inlier_ratio=0.8,
            trials=50,
        )
        (row,) = records_to_dicts([rec])
        assert tuple(row.keys()) == CSV_COLUMNS
        assert row["sigma_phi_deg"] == pytest.approx(180.0)
        assert row["mean_rre_deg"] == pytest.approx(90.0)
        assert row["trials"] == 50

    def test_csv_round_trip(self, tmp_path):
        records = [
            ExperimentRecord(
                method="corrected",
                sigma_p=1.0 / 3.0,
                sigma_phi=0.1234567890123456,
                ap=0.7071067811865476,
                mean_rre=1e-9,
                mean_rte=2.5,
                mean_inlier_ratio=0.975,
                trials=50,
            )
        ]
        path = tmp_path / "records.csv"
        write_records_csv(records, str(path))
        with open(path, newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert list(rows[0].keys()) == list(CSV_COLUMNS)
        # repr-formatted floats survive the trip bit-exactly
        assert float(rows[0]["sigma_p_m"]) == 1.0 / 3.0
        assert float(rows[0]["sigma_phi_deg"]) == math.degrees(0.1234567890123456)
        assert float(rows[0]["ap"]) == 0.7071067811865476
        assert int(rows[0]["trials"]) == 50
        assert rows[0]["method"] == "corrected"
