from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from stepped_wedge_gee.core.specs import DiscreteUniformSizes, SimConfig
from stepped_wedge_gee.models.correlation import CorrelationParams
from stepped_wedge_gee.models.results import AdjustmentSummary, ExperimentReport, ReplicateRecord
from stepped_wedge_gee.models.shared import Adjustment, Correction
from stepped_wedge_gee.simulation.experiment import records_frame, run_experiment, run_sweep, truth_values
from stepped_wedge_gee.simulation.presets import preset, preset_names

SMALL = SimConfig(
    clusters=8,
    periods=5,
    truth=CorrelationParams.nested_exchangeable(0.05, 0.025),
    sizes=DiscreteUniformSizes(30, 60),
    replicates=6,
    seed=1,
    corrections=(Correction.BC0, Correction.BC1, Correction.BC2),
)


def test_truth_values_follow_fit_names() -> None:
    truth = truth_values(SMALL)
    assert list(truth) == ["beta_1", "beta_2", "beta_3", "beta_4", "beta_5", "delta", "alpha0", "alpha1"]
    assert truth["delta"] == pytest.approx(math.log(0.5))
    assert truth["beta_1"] == pytest.approx(math.log(0.35 / 0.65))
    assert truth["beta_2"] == pytest.approx(truth["beta_1"] - 0.05)


def test_more_than_five_percent_failures_is_unreliable() -> None:
    assert AdjustmentSummary(Adjustment.MAEE, (), converged=18, nonconverged=2).unreliable
    assert not AdjustmentSummary(Adjustment.MAEE, (), converged=19, nonconverged=1).unreliable
    assert not AdjustmentSummary(Adjustment.MAEE, (), converged=0, nonconverged=0).unreliable


def test_records_frame_columns() -> None:
    records = (
        ReplicateRecord(0, Adjustment.UEE, True, {"delta": -0.6}, {"delta": {Correction.BC1: True}}),
        ReplicateRecord(0, Adjustment.MAEE, False, {}, {}, 2, "not converged"),
    )
    report = ExperimentReport(clusters=8, replicates=1, truth={"delta": -0.7}, summaries=(), records=records)
    frame = records_frame(report)
    assert frame["adjustment"].tolist() == ["uee", "maee"]
    assert frame.loc[0, "est_delta"] == -0.6
    assert np.isnan(frame.loc[1, "est_delta"])
    assert bool(frame.loc[0, "cover_delta_bc1"])
    assert frame.loc[1, "error"] == "not converged"


def test_presets_apply_overrides() -> None:
    config = preset("table2-ne-large", replicates=3, seed=None)
    assert config.replicates == 3
    assert config.seed == 0
    assert config.truth == CorrelationParams.nested_exchangeable(0.1, 0.05)
    assert preset("ne-large", replicates=3) == config
    assert {"table2-ne-small", "table2-ed-large", "coverage-sweep"} <= set(preset_names())
    with pytest.raises(ValueError, match="unknown preset"):
        preset("no-such-preset")


@pytest.mark.slow
def test_small_experiment_summaries() -> None:
    report = run_experiment(SMALL)
    assert report.replicates == 6
    assert len(report.records) == 12
    for adjustment in SMALL.adjustments:
        summary = report.summary(adjustment)
        assert summary.converged + summary.nonconverged == 6
        if summary.converged:
            delta = summary.parameter("delta")
            assert set(delta.coverage) == set(SMALL.corrections)
            assert all(0.0 <= value <= 1.0 for value in delta.coverage.values())
    payload = report.as_dict()
    assert [entry["adjustment"] for entry in payload["adjustments"]] == ["uee", "maee"]


@pytest.mark.slow
def test_experiment_is_independent_of_thread_count() -> None:
    serial = run_experiment(SMALL, threads=1)
    threaded = run_experiment(SMALL, threads=2)
    assert serial.records == threaded.records
    assert serial.as_dict() == threaded.as_dict()


@pytest.mark.slow
def test_sweep_runs_each_cluster_count() -> None:
    reports = run_sweep(replace(SMALL, replicates=2), [4, 8])
    assert [report.clusters for report in reports] == [4, 8]


@pytest.mark.slow
def test_bias_adjustment_removes_within_period_icc_bias() -> None:
    config = SimConfig(
        clusters=12,
        periods=5,
        truth=CorrelationParams.nested_exchangeable(0.03, 0.015),
        sizes=DiscreteUniformSizes(50, 150),
        replicates=500,
        seed=0,
        corrections=(Correction.BC1,),
    )
    report = run_experiment(config, threads=4)
    uee, maee = report.summary(Adjustment.UEE), report.summary(Adjustment.MAEE)
    assert not report.unreliable
    assert abs(maee.parameter("alpha0").relative_bias) <= 5.0
    assert uee.parameter("alpha0").relative_bias <= -8.0
    for summary in (uee, maee):
        assert abs(summary.parameter("delta").relative_bias) <= 2.0


@pytest.mark.slow
def test_decay_estimates_are_nearly_unbiased_with_adjustment() -> None:
    config = SimConfig(
        clusters=24,
        periods=5,
        truth=CorrelationParams.exponential_decay(0.1, 0.5),
        sizes=DiscreteUniformSizes(50, 150),
        replicates=500,
        seed=0,
        adjustments=(Adjustment.MAEE,),
        corrections=(Correction.BC1,),
    )
    maee = run_experiment(config, threads=4).summary(Adjustment.MAEE)
    assert not maee.unreliable
    assert abs(maee.parameter("alpha0").relative_bias) <= 3.0
    assert abs(maee.parameter("rho").relative_bias) <= 5.0


@pytest.mark.slow
def test_bias_corrected_intervals_cover_the_treatment_effect() -> None:
    config = preset(
        "coverage-sweep",
        replicates=500,
        seed=0,
        adjustments=(Adjustment.MAEE,),
        corrections=(Correction.BC1,),
    )
    assert config.clusters == 24
    summary = run_experiment(config, threads=4).summary(Adjustment.MAEE)
    assert 0.925 <= summary.parameter("delta").coverage[Correction.BC1] <= 0.975
