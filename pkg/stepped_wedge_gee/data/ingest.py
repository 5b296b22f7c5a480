"""CSV ingestion and design validation.

Two schemas are accepted, both UTF-8 with a header row and comma delimiter:

* individual: ``cluster,period,treatment,outcome`` (one row per participant);
* cluster-period: ``cluster,period,treatment,n,y`` (one row per cluster-period).

Periods are ordered numerically when every label parses as a number and lexicographically
otherwise. Clusters keep their order of first appearance unless ``cluster_order="sorted"``.
"""

from __future__ import annotations

import io
import logging
from collections.abc import Sequence
from typing import BinaryIO, Literal

import numpy as np
import pandas as pd

from ..core.errors import InputError, IntegrityError, SchemaError
from ..models.trial import DesignInfo, TrialData

logger = logging.getLogger(__name__)

INDIVIDUAL_COLUMNS = ("cluster", "period", "treatment", "outcome")
CLUSTER_PERIOD_COLUMNS = ("cluster", "period", "treatment", "n", "y")

ClusterOrder = Literal["appearance", "sorted"]


def _read_frame(source: bytes | BinaryIO, columns: Sequence[str]) -> pd.DataFrame:
    raw = source if isinstance(source, bytes) else source.read()
    if not raw.strip():
        raise InputError("input is empty")
    try:
        frame = pd.read_csv(
            io.BytesIO(raw), dtype=str, keep_default_na=False, encoding="utf-8", sep=","
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise InputError(f"unreadable CSV: {exc}") from exc
    frame.columns = [str(column).strip().lower() for column in frame.columns]
    missing = [column for column in columns if column not in frame.columns]
    if missing:
        raise SchemaError(f"missing required columns: {', '.join(missing)}")
    if frame.empty:
        raise InputError("input has a header but no data rows")
    frame = frame[list(columns)].apply(lambda column: column.str.strip())
    if (frame["cluster"] == "").any() or (frame["period"] == "").any():
        raise SchemaError("cluster and period labels must be non-empty")
    return frame


def _integer_column(frame: pd.DataFrame, column: str, allowed: Sequence[int] | None = None) -> pd.Series:
    values = pd.to_numeric(frame[column], errors="coerce")
    bad = values.isna() | (values != values.round())
    if allowed is not None:
        bad |= ~values.isin(allowed)
    else:
        bad |= values < 0
    if bad.any():
        rows = (np.flatnonzero(bad.to_numpy()) + 2).tolist()[:5]
        expected = "one of " + ", ".join(map(str, allowed)) if allowed else "a non-negative integer"
        raise SchemaError(f"column {column!r} must be {expected}; bad value on line(s) {rows}")
    return values.astype(np.int64)


def period_order(labels: Sequence[str]) -> list[str]:
    """Sorted unique period labels: numeric order if all labels are numbers, else lexicographic."""

    unique = list(dict.fromkeys(labels))
    numeric = pd.to_numeric(pd.Series(unique, dtype=str), errors="coerce")
    if not numeric.isna().any():
        return [label for _, label in sorted(zip(numeric.tolist(), unique))]
    return sorted(unique)


def _cluster_order(labels: Sequence[str], order: ClusterOrder) -> list[str]:
    unique = list(dict.fromkeys(labels))
    if order == "sorted":
        return sorted(unique)
    if order != "appearance":
        raise ValueError(f"unknown cluster order {order!r}")
    return unique


def _assemble(cells: pd.DataFrame, order: ClusterOrder) -> TrialData:
    clusters = _cluster_order(cells["cluster"].tolist(), order)
    periods = period_order(cells["period"].tolist())
    rows = cells["cluster"].map({c: i for i, c in enumerate(clusters)}).to_numpy()
    cols = cells["period"].map({p: j for j, p in enumerate(periods)}).to_numpy()
    shape = (len(clusters), len(periods))
    sizes = np.zeros(shape, dtype=np.int64)
    totals = np.zeros(shape, dtype=np.int64)
    treatment = np.zeros(shape, dtype=np.int64)
    sizes[rows, cols] = cells["n"].to_numpy()
    totals[rows, cols] = cells["y"].to_numpy()
    treatment[rows, cols] = cells["treatment"].to_numpy()
    return TrialData(
        cluster_ids=tuple(clusters),
        periods=tuple(periods),
        sizes=sizes,
        totals=totals,
        treatment=treatment,
    )


def ingest_individual(source: bytes | BinaryIO, *, cluster_order: ClusterOrder = "appearance") -> TrialData:
    """Aggregate participant rows into cluster-period totals.

    Raises:
        InputError: The stream is empty or not parseable as CSV.
        SchemaError: A column is missing, an outcome is not 0/1, or a treatment is not 0/1.
        IntegrityError: Treatment differs between participants of one cluster-period.
    """

    frame = _read_frame(source, INDIVIDUAL_COLUMNS)
    frame = frame.assign(
        outcome=_integer_column(frame, "outcome", (0, 1)),
        treatment=_integer_column(frame, "treatment", (0, 1)),
    )
    grouped = frame.groupby(["cluster", "period"], sort=False)
    conflicts = grouped["treatment"].nunique()
    if (conflicts > 1).any():
        cluster, period = conflicts[conflicts > 1].index[0]
        raise IntegrityError(f"conflicting treatment within cluster {cluster!r}, period {period!r}")
    cells = grouped.agg(
        treatment=("treatment", "first"), n=("outcome", "size"), y=("outcome", "sum")
    ).reset_index()
    # groupby(sort=False) keeps first-appearance order of the keys.
    return _assemble(cells, cluster_order)


def ingest_cluster_period(source: bytes | BinaryIO, *, cluster_order: ClusterOrder = "appearance") -> TrialData:
    """Assemble a trial from one row per cluster-period.

    Raises:
        InputError: The stream is empty or not parseable as CSV.
        SchemaError: A column is missing or a value is not an admissible integer.
        IntegrityError: ``y > n`` or a duplicated ``(cluster, period)`` key.
    """

    frame = _read_frame(source, CLUSTER_PERIOD_COLUMNS)
    frame = frame.assign(
        treatment=_integer_column(frame, "treatment", (0, 1)),
        n=_integer_column(frame, "n"),
        y=_integer_column(frame, "y"),
    )
    duplicated = frame.duplicated(["cluster", "period"])
    if duplicated.any():
        row = frame[duplicated].iloc[0]
        raise IntegrityError(f"duplicate row for cluster {row['cluster']!r}, period {row['period']!r}")
    over = frame["y"] > frame["n"]
    if over.any():
        row = frame[over].iloc[0]
        raise IntegrityError(
            f"y = {row['y']} exceeds n = {row['n']} for cluster {row['cluster']!r}, "
            f"period {row['period']!r}"
        )
    return _assemble(frame, cluster_order)


def to_cluster_period_csv(data: TrialData) -> str:
    """Serialize every cluster-period (including empty ones) in the cluster-period schema."""

    clusters = np.repeat(np.array(data.cluster_ids, dtype=object), data.n_periods)
    periods = np.tile(np.array(data.periods, dtype=object), data.n_clusters)
    frame = pd.DataFrame(
        {
            "cluster": clusters,
            "period": periods,
            "treatment": data.treatment.ravel(),
            "n": data.sizes.ravel(),
            "y": data.totals.ravel(),
        }
    )
    return frame.to_csv(index=False, lineterminator="\n")


def validate_design(data: TrialData) -> DesignInfo:
    """Check whether treatment is non-decreasing in time over each cluster's observed periods."""

    switch: list[str | None] = []
    warnings: list[str] = []
    monotone = True
    for i, cluster in enumerate(data.cluster_ids):
        observed = np.flatnonzero(data.sizes[i] > 0)
        sequence = data.treatment[i, observed]
        treated = observed[sequence == 1]
        switch.append(data.periods[treated[0]] if treated.size else None)
        if np.any(np.diff(sequence) < 0):
            monotone = False
            warnings.append(
                f"cluster {cluster}: treatment returns to control; not a stepped-wedge rollout"
            )
        if observed.size == 0:
            warnings.append(f"cluster {cluster}: no observed cluster-periods")
    for message in warnings:
        logger.warning(message)
    return DesignInfo(
        is_stepped_wedge=monotone,
        switch_period=tuple(switch),
        warnings=tuple(warnings),
    )
