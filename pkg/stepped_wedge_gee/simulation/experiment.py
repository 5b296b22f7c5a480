"""Bias and coverage experiments over simulated stepped-wedge trials."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import replace

import numpy as np
import pandas as pd

from ..core.errors import GeneratorFeasibilityError, SteppedWedgeError
from ..core.parallel import ordered_map
from ..core.specs import SimConfig
from ..engine.gee import fit
from ..inference.intervals import intervals
from ..inference.sandwich import sandwich_set
from ..models.results import (
    AdjustmentSummary,
    ExperimentReport,
    ParameterSummary,
    ReplicateRecord,
)
from ..models.shared import Adjustment, Correction
from .generator import draw_trial

logger = logging.getLogger(__name__)

UNRELIABLE_FRACTION = 0.05


def truth_values(config: SimConfig) -> dict[str, float]:
    names = [f"beta_{j + 1}" for j in range(config.periods)] + ["delta"]
    values = dict(zip(names, (float(v) for v in config.theta)))
    values.update(config.truth.as_dict())
    return values


def _analyze(
    config: SimConfig, replicate: int, adjustment: Adjustment, data, redraws: int
) -> ReplicateRecord:
    truth = truth_values(config)
    try:
        result = fit(data, config.model_spec(adjustment))
        if not result.converged:
            return ReplicateRecord(replicate, adjustment, False, {}, {}, redraws, "not converged")
        covariances = sandwich_set(result, [c for c in config.corrections if c is not Correction.MODEL])
        covered: dict[str, dict[Correction, bool]] = {name: {} for name in result.names}
        for correction in config.corrections:
            report = intervals(result, covariances, correction, config.confidence)
            for row in report.rows:
                covered[row.parameter][correction] = row.contains(truth[row.parameter])
    except SteppedWedgeError as exc:
        logger.info("replicate %d (%s) failed: %s", replicate, adjustment, exc)
        return ReplicateRecord(replicate, adjustment, False, {}, {}, redraws, str(exc))
    estimates = dict(zip(result.names, (float(v) for v in result.estimates)))
    return ReplicateRecord(replicate, adjustment, True, estimates, covered, redraws)


def _replicate(config: SimConfig, replicate: int) -> tuple[list[ReplicateRecord], bool]:
    try:
        data, redraws = draw_trial(config, replicate)
    except GeneratorFeasibilityError as exc:
        logger.warning("replicate %d rejected by the generator: %s", replicate, exc)
        records = [
            ReplicateRecord(replicate, adjustment, False, {}, {}, 0, str(exc))
            for adjustment in config.adjustments
        ]
        return records, True
    return [_analyze(config, replicate, a, data, redraws) for a in config.adjustments], False


def _summarize(
    config: SimConfig, adjustment: Adjustment, records: Sequence[ReplicateRecord]
) -> AdjustmentSummary:
    truth = truth_values(config)
    ok = [r for r in records if r.adjustment is adjustment and r.converged]
    failed = sum(1 for r in records if r.adjustment is adjustment and not r.converged)
    parameters = []
    for name, value in truth.items():
        if not ok:
            break
        estimates = np.array([r.estimates[name] for r in ok])
        mean_estimate = float(estimates.mean())
        coverage = {}
        for correction in config.corrections:
            hits = [r.covered[name][correction] for r in ok if correction in r.covered.get(name, {})]
            if hits:
                coverage[correction] = float(np.mean(hits))
        parameters.append(
            ParameterSummary(
                parameter=name,
                truth=value,
                mean_estimate=mean_estimate,
                relative_bias=100.0 * (mean_estimate - value) / value if value != 0.0 else None,
                absolute_bias=mean_estimate - value,
                coverage=coverage,
            )
        )
    summary = AdjustmentSummary(adjustment, tuple(parameters), len(ok), failed)
    if summary.unreliable:
        logger.warning(
            "%s: %d of %d replicates failed to converge; results are unreliable",
            adjustment,
            failed,
            failed + len(ok),
        )
    return summary


def run_experiment(config: SimConfig, threads: int = 1) -> ExperimentReport:
    """Simulate ``config.replicates`` trials and summarize bias and interval coverage.

    Non-converged fits are excluded from the summaries and counted; more than 5% of them
    flags the adjustment as unreliable.
    """

    outcomes = ordered_map(lambda k: _replicate(config, k), range(config.replicates), threads)
    records = [record for replicate_records, _ in outcomes for record in replicate_records]
    rejections = sum(1 for _, rejected in outcomes if rejected)
    summaries = tuple(_summarize(config, a, records) for a in config.adjustments)
    return ExperimentReport(
        clusters=config.clusters,
        replicates=config.replicates,
        truth=truth_values(config),
        summaries=summaries,
        records=tuple(records),
        generator_rejections=rejections,
    )


def run_sweep(
    config: SimConfig, cluster_counts: Iterable[int], threads: int = 1
) -> tuple[ExperimentReport, ...]:
    """Repeat :func:`run_experiment` for each number of clusters."""

    return tuple(run_experiment(replace(config, clusters=count), threads) for count in cluster_counts)


def records_frame(report: ExperimentReport) -> pd.DataFrame:
    """Per-replicate estimates and interval hits, one row per replicate and adjustment."""

    rows = []
    for record in report.records:
        row: dict[str, object] = {
            "replicate": record.replicate,
            "adjustment": str(record.adjustment),
            "converged": record.converged,
            "redraws": record.redraws,
            "error": record.error or "",
        }
        for name in report.truth:
            row[f"est_{name}"] = record.estimates.get(name, np.nan)
            for correction, hit in record.covered.get(name, {}).items():
                row[f"cover_{name}_{correction}"] = hit
        rows.append(row)
    return pd.DataFrame(rows)
