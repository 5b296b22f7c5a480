"""Trial structure value types."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class TrialData:
    """Cluster-by-period totals, sizes, and treatment indicators for one trial.

    Matrices are ``I x J`` with rows in ``cluster_ids`` order and columns in ``periods``
    order. A missing cluster-period is encoded as ``n_ij = 0`` and is excluded from every
    estimating-equation sum.
    """

    cluster_ids: tuple[str, ...]
    periods: tuple[str, ...]
    sizes: np.ndarray
    totals: np.ndarray
    treatment: np.ndarray

    def __post_init__(self) -> None:
        shape = (len(self.cluster_ids), len(self.periods))
        sizes = np.array(self.sizes, dtype=np.int64)
        totals = np.array(self.totals, dtype=np.int64)
        treatment = np.array(self.treatment, dtype=np.int64)
        for name, matrix in (("sizes", sizes), ("totals", totals), ("treatment", treatment)):
            if matrix.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {matrix.shape}")
            matrix.setflags(write=False)
        if len(set(self.cluster_ids)) != len(self.cluster_ids):
            raise ValueError("cluster_ids must be unique")
        if len(set(self.periods)) != len(self.periods):
            raise ValueError("periods must be unique")
        if np.any(sizes < 0):
            raise ValueError("cluster-period sizes must be non-negative")
        if np.any(totals < 0) or np.any(totals > sizes):
            raise ValueError("cluster-period totals must satisfy 0 <= y <= n")
        if not np.all(np.isin(treatment, (0, 1))):
            raise ValueError("treatment indicators must be 0 or 1")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "totals", totals)
        object.__setattr__(self, "treatment", treatment)

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_ids)

    @property
    def n_periods(self) -> int:
        return len(self.periods)

    @property
    def observed(self) -> np.ndarray:
        """Boolean ``I x J`` mask of cluster-periods with at least one participant."""

        return self.sizes > 0

    @property
    def means(self) -> np.ndarray:
        """Cluster-period means ``Y_ij+ / n_ij``; ``nan`` where the cell is missing."""

        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.observed, self.totals / np.maximum(self.sizes, 1), np.nan)

    def take(self, order: list[int] | np.ndarray) -> "TrialData":
        """Return a copy with clusters rearranged by ``order``."""

        idx = np.asarray(order, dtype=int)
        return TrialData(
            cluster_ids=tuple(self.cluster_ids[i] for i in idx),
            periods=self.periods,
            sizes=self.sizes[idx],
            totals=self.totals[idx],
            treatment=self.treatment[idx],
        )

    def same_as(self, other: "TrialData") -> bool:
        return (
            self.cluster_ids == other.cluster_ids
            and self.periods == other.periods
            and np.array_equal(self.sizes, other.sizes)
            and np.array_equal(self.totals, other.totals)
            and np.array_equal(self.treatment, other.treatment)
        )


@dataclass(frozen=True, slots=True)
class DesignInfo:
    """Summary of the treatment rollout pattern."""

    is_stepped_wedge: bool
    switch_period: tuple[str | None, ...]
    warnings: tuple[str, ...] = field(default_factory=tuple)
