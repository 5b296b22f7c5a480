"""Result records produced by fitting, inference, the efficiency study and the simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from .correlation import ClusterMoments, CorrelationParams
from .shared import Adjustment, Correction, LinkFunction
from .trial import TrialData

if TYPE_CHECKING:
    from ..core.specs import ModelSpec


@dataclass(frozen=True, slots=True)
class IterationRecord:
    """One outer iteration of the alternating fit."""

    iteration: int
    theta: tuple[float, ...]
    alpha: tuple[float, ...]
    score_norm: float
    step_halvings: int
    change: float


@dataclass(frozen=True, eq=False)
class ClusterLeverage:
    """Hat matrices of one cluster for the mean (``h1``) and correlation (``h2``) equations."""

    periods: np.ndarray
    h1: np.ndarray
    h2: np.ndarray


@dataclass(frozen=True, eq=False)
class FitResult:
    """Fitted cluster-period GEE.

    ``theta`` holds ``(beta_1, ..., beta_J, delta)`` on the link scale. ``moments`` keeps the
    residual products used in the last correlation update (``S`` under UEE, the
    leverage-adjusted ``S~`` under MAEE) and ``raw_moments`` the unadjusted ones; ``eta``
    holds the fitted stacked covariances.
    """

    data: TrialData
    spec: "ModelSpec"
    theta: np.ndarray
    params: CorrelationParams
    converged: bool
    iterations: int
    mu_hat: np.ndarray
    leverage: tuple[ClusterLeverage, ...]
    moments: tuple[ClusterMoments, ...]
    raw_moments: tuple[ClusterMoments, ...]
    eta: tuple[np.ndarray, ...]
    theta_names: tuple[str, ...]
    alpha_names: tuple[str, ...]
    score_norm: float
    clamped: bool = False
    warnings: tuple[str, ...] = field(default_factory=tuple)
    raw_alpha: dict[str, float] = field(default_factory=dict)
    trace: tuple[IterationRecord, ...] = field(default_factory=tuple)

    @property
    def alpha(self) -> np.ndarray:
        """Free correlation parameters in :attr:`alpha_names` order."""

        return np.array([getattr(self.params, name) for name in self.alpha_names], dtype=float)

    @property
    def delta(self) -> float:
        return float(self.theta[-1])

    @property
    def estimates(self) -> np.ndarray:
        return np.concatenate([self.theta, self.alpha])

    @property
    def names(self) -> tuple[str, ...]:
        return self.theta_names + self.alpha_names

    @property
    def link(self) -> LinkFunction:
        return self.spec.link

    @property
    def adjustment(self) -> Adjustment:
        return self.spec.adjustment


@dataclass(frozen=True, eq=False)
class SandwichSet:
    """Covariances of the estimates under the requested corrections.

    ``model_based`` covers ``theta`` only; each entry of ``joint`` is the square covariance
    of ``(theta, alpha)`` in :attr:`FitResult.names` order.
    """

    model_based: np.ndarray
    joint: dict[Correction, np.ndarray]
    names: tuple[str, ...]
    n_theta: int
    zeta: tuple[float, float]

    def covariance(self, correction: Correction) -> np.ndarray:
        if correction is Correction.MODEL:
            return self.model_based
        try:
            return self.joint[correction]
        except KeyError as exc:
            raise KeyError(f"correction {correction} was not computed") from exc

    def standard_errors(self, correction: Correction) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance(correction)), 0.0, None))

    def theta_block(self, correction: Correction) -> np.ndarray:
        return self.covariance(correction)[: self.n_theta, : self.n_theta]

    def alpha_block(self, correction: Correction) -> np.ndarray:
        if correction is Correction.MODEL:
            raise KeyError("the model-based covariance covers the mean parameters only")
        return self.joint[correction][self.n_theta :, self.n_theta :]


@dataclass(frozen=True, slots=True)
class IntervalRow:
    parameter: str
    estimate: float
    se: float
    lower: float
    upper: float
    correction: Correction

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def as_dict(self) -> dict[str, Any]:
        return {
            "parameter": self.parameter,
            "estimate": self.estimate,
            "se": self.se,
            "lower": self.lower,
            "upper": self.upper,
            "correction": str(self.correction),
        }


@dataclass(frozen=True, slots=True)
class IntervalReport:
    """``t_{I-2}`` intervals for every reported parameter."""

    rows: tuple[IntervalRow, ...]
    df: int
    confidence: float
    quantile: float

    def row(self, parameter: str) -> IntervalRow:
        for row in self.rows:
            if row.parameter == parameter:
                return row
        raise KeyError(parameter)

    def odds_ratio(self, parameter: str = "delta") -> dict[str, float]:
        """Exponentiated estimate and interval of a log-odds parameter."""

        row = self.row(parameter)
        return {
            "estimate": math.exp(row.estimate),
            "lower": math.exp(row.lower),
            "upper": math.exp(row.upper),
        }


@dataclass(frozen=True, slots=True)
class AreResult:
    """Mean relative efficiency over size-resampling replicates."""

    mean: float
    mc_se: float
    quantiles: dict[str, float]
    replicates: int
    values: tuple[float, ...] = field(repr=False, default_factory=tuple)

    def as_dict(self) -> dict[str, Any]:
        return {
            "mean": self.mean,
            "mc_se": self.mc_se,
            "quantiles": dict(self.quantiles),
            "replicates": self.replicates,
        }


@dataclass(frozen=True, slots=True)
class ParameterSummary:
    """Bias and coverage of one parameter under one residual adjustment."""

    parameter: str
    truth: float
    mean_estimate: float
    relative_bias: float | None
    absolute_bias: float
    coverage: dict[Correction, float]

    def as_dict(self) -> dict[str, Any]:
        return {
            "parameter": self.parameter,
            "truth": self.truth,
            "mean_estimate": self.mean_estimate,
            "relative_bias_pct": self.relative_bias,
            "absolute_bias": self.absolute_bias,
            "coverage": {str(k): v for k, v in self.coverage.items()},
        }


@dataclass(frozen=True, slots=True)
class ReplicateRecord:
    """Per-replicate estimates and interval hits, one row of the optional CSV."""

    replicate: int
    adjustment: Adjustment
    converged: bool
    estimates: dict[str, float]
    covered: dict[str, dict[Correction, bool]]
    redraws: int = 0
    error: str | None = None


@dataclass(frozen=True, slots=True)
class AdjustmentSummary:
    adjustment: Adjustment
    parameters: tuple[ParameterSummary, ...]
    converged: int
    nonconverged: int

    @property
    def unreliable(self) -> bool:
        total = self.converged + self.nonconverged
        return total > 0 and self.nonconverged / total > 0.05

    def parameter(self, name: str) -> ParameterSummary:
        for summary in self.parameters:
            if summary.parameter == name:
                return summary
        raise KeyError(name)

    def as_dict(self) -> dict[str, Any]:
        return {
            "adjustment": str(self.adjustment),
            "parameters": [p.as_dict() for p in self.parameters],
            "converged": self.converged,
            "nonconverged": self.nonconverged,
            "unreliable": self.unreliable,
        }


@dataclass(frozen=True, slots=True)
class ExperimentReport:
    """Aggregated bias/coverage for one simulation configuration."""

    clusters: int
    replicates: int
    truth: dict[str, float]
    summaries: tuple[AdjustmentSummary, ...]
    records: tuple[ReplicateRecord, ...] = field(repr=False, default_factory=tuple)
    generator_rejections: int = 0

    @property
    def unreliable(self) -> bool:
        return any(summary.unreliable for summary in self.summaries)

    def summary(self, adjustment: Adjustment) -> AdjustmentSummary:
        for summary in self.summaries:
            if summary.adjustment is adjustment:
                return summary
        raise KeyError(str(adjustment))

    def as_dict(self) -> dict[str, Any]:
        return {
            "clusters": self.clusters,
            "replicates": self.replicates,
            "truth": dict(self.truth),
            "generator_rejections": self.generator_rejections,
            "unreliable": self.unreliable,
            "adjustments": [s.as_dict() for s in self.summaries],
        }


@dataclass(frozen=True, eq=False)
class Analysis:
    """Fit plus inference as reported by the ``fit`` command.

    ``intervals`` uses the default pairing (BC1 for mean parameters, BC2 for correlation
    parameters); ``by_correction`` holds one report per computed covariance.
    """

    fit: FitResult
    covariances: SandwichSet
    intervals: IntervalReport
    by_correction: dict[Correction, IntervalReport]
    cic: float | None
    design_warnings: tuple[str, ...] = field(default_factory=tuple)
    is_stepped_wedge: bool = True

    def as_dict(self) -> dict[str, Any]:
        result = self.fit
        payload: dict[str, Any] = {
            "structure": str(result.spec.structure),
            "link": str(result.spec.link),
            "adjustment": str(result.spec.adjustment),
            "converged": result.converged,
            "iterations": result.iterations,
            "score_norm": result.score_norm,
            "clamped": result.clamped,
            "theta": dict(zip(result.theta_names, (float(v) for v in result.theta))),
            "alpha": result.params.as_dict(),
            "raw_alpha": dict(result.raw_alpha),
            "warnings": list(result.warnings),
            "standard_errors": {
                str(correction): dict(
                    zip(
                        result.names if correction is not Correction.MODEL else result.theta_names,
                        (float(v) for v in self.covariances.standard_errors(correction)),
                    )
                )
                for correction in (Correction.MODEL, *self.covariances.joint)
            },
            "intervals": {
                "df": self.intervals.df,
                "confidence": self.intervals.confidence,
                "rows": [row.as_dict() for row in self.intervals.rows],
            },
            "intervals_by_correction": {
                str(correction): [row.as_dict() for row in report.rows]
                for correction, report in self.by_correction.items()
            },
            "cic_cp": self.cic,
            "design": {
                "is_stepped_wedge": self.is_stepped_wedge,
                "warnings": list(self.design_warnings),
            },
        }
        if result.spec.link is LinkFunction.LOGIT:
            payload["odds_ratio"] = self.intervals.odds_ratio("delta")
        return payload


@dataclass(frozen=True, slots=True)
class StructureScore:
    """One working structure's CIC in a structure comparison."""

    structure: str
    cic: float | None
    converged: bool
    params: dict[str, float]
    delta: float | None
    error: str | None = None

    def as_dict(self) -> dict[str, Any]:
        return {
            "structure": self.structure,
            "cic_cp": self.cic,
            "converged": self.converged,
            "alpha": dict(self.params),
            "delta": self.delta,
            "error": self.error,
        }
