"""Run configuration shared by the engine, the efficiency study, and the simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..engine.links import link_value
from ..models.correlation import CorrelationParams
from ..models.shared import Adjustment, Correction, CorrelationStructure, LinkFunction

DEFAULT_MAX_OUTER_ITERATIONS = 200
DEFAULT_TOLERANCE = 1e-8


@dataclass(frozen=True, slots=True)
class ModelSpec:
    """Marginal mean link, working correlation structure and correlation adjustment.

    ``tie_alpha1`` constrains the nested exchangeable fit to ``alpha1 == alpha0`` and
    ``fixed_rho`` holds the exponential decay factor fixed; both reduce to the simple
    exchangeable model.
    """

    structure: CorrelationStructure = CorrelationStructure.NESTED_EXCHANGEABLE
    link: LinkFunction = LinkFunction.LOGIT
    adjustment: Adjustment = Adjustment.MAEE
    max_outer_iterations: int = DEFAULT_MAX_OUTER_ITERATIONS
    tolerance: float = DEFAULT_TOLERANCE
    tie_alpha1: bool = False
    fixed_rho: float | None = None

    def __post_init__(self) -> None:
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be at least 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.tie_alpha1 and self.structure is not CorrelationStructure.NESTED_EXCHANGEABLE:
            raise ValueError("tie_alpha1 applies to the nested exchangeable structure only")
        if self.fixed_rho is not None:
            if self.structure is not CorrelationStructure.EXPONENTIAL_DECAY:
                raise ValueError("fixed_rho applies to the exponential decay structure only")
            if not 0.0 <= self.fixed_rho <= 1.0:
                raise ValueError("fixed_rho must lie in [0, 1]")


@dataclass(frozen=True, slots=True)
class DiscreteUniformSizes:
    """Cluster-period sizes drawn from DiscreteUniform(low, high), both ends inclusive."""

    low: int
    high: int

    def __post_init__(self) -> None:
        if self.low < 1 or self.high < self.low:
            raise ValueError("size bounds must satisfy 1 <= low <= high")

    def draw(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        return rng.integers(self.low, self.high + 1, size=shape)

    @property
    def label(self) -> str:
        return f"{self.low}:{self.high}"


@dataclass(frozen=True, slots=True)
class EmpiricalSizes:
    """Cluster-period sizes resampled with replacement from an observed list."""

    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.values or min(self.values) < 1:
            raise ValueError("empirical sizes must be a non-empty list of positive integers")

    def draw(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        return rng.choice(np.asarray(self.values, dtype=np.int64), size=shape, replace=True)

    @property
    def label(self) -> str:
        return f"empirical[{len(self.values)}]"


SizeSampler = DiscreteUniformSizes | EmpiricalSizes


def parse_size_range(text: str) -> DiscreteUniformSizes:
    """Parse the ``a:b`` CLI spelling of a discrete-uniform size range."""

    try:
        low, high = (int(part) for part in text.split(":"))
    except ValueError as exc:
        raise ValueError(f"size range must look like 'a:b', got {text!r}") from exc
    return DiscreteUniformSizes(low, high)


@dataclass(frozen=True, slots=True)
class SimConfig:
    """Generator and analysis settings for one bias/coverage experiment.

    Clusters are split into ``periods - 1`` equal waves; every cluster is in control in the
    first period. Period effects start at ``g(baseline_prevalence)`` and decrease by
    ``trend_step * trend_ratio**j`` between periods ``j`` and ``j + 1``.
    """

    clusters: int = 12
    periods: int = 5
    truth: CorrelationParams = field(
        default_factory=lambda: CorrelationParams.nested_exchangeable(0.03, 0.015)
    )
    sizes: SizeSampler = field(default_factory=lambda: DiscreteUniformSizes(50, 150))
    replicates: int = 500
    seed: int = 0
    link: LinkFunction = LinkFunction.LOGIT
    delta: float = math.log(0.5)
    baseline_prevalence: float = 0.35
    trend_step: float = 0.1
    trend_ratio: float = 0.5
    adjustments: tuple[Adjustment, ...] = (Adjustment.UEE, Adjustment.MAEE)
    corrections: tuple[Correction, ...] = tuple(Correction)
    confidence: float = 0.95
    max_outer_iterations: int = DEFAULT_MAX_OUTER_ITERATIONS
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self) -> None:
        if self.periods < 2:
            raise ValueError("at least two periods are required")
        if self.clusters < 3:
            raise ValueError("at least three clusters are required for t intervals")
        if self.clusters % (self.periods - 1) != 0:
            raise ValueError(
                f"{self.clusters} clusters cannot be split into {self.periods - 1} equal waves"
            )
        if not 0.0 < self.baseline_prevalence < 1.0:
            raise ValueError("baseline prevalence must lie in (0, 1)")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")
        if not self.adjustments:
            raise ValueError("at least one adjustment is required")

    def period_effects(self) -> np.ndarray:
        beta = np.empty(self.periods)
        beta[0] = link_value(self.link, self.baseline_prevalence)
        for j in range(1, self.periods):
            beta[j] = beta[j - 1] - self.trend_step * self.trend_ratio**j
        return beta

    @property
    def theta(self) -> np.ndarray:
        return np.append(self.period_effects(), self.delta)

    def model_spec(self, adjustment: Adjustment) -> ModelSpec:
        return ModelSpec(
            structure=self.truth.structure,
            link=self.link,
            adjustment=adjustment,
            max_outer_iterations=self.max_outer_iterations,
            tolerance=self.tolerance,
        )


@dataclass(frozen=True, eq=False)
class AreConfig:
    """Settings for the bootstrap-style relative efficiency study.

    Without an explicit ``theta`` the period effects interpolate linearly on the link scale
    from ``start_prevalence`` to ``end_prevalence`` and ``delta`` is the treatment effect.
    """

    design: np.ndarray
    truth: CorrelationParams
    sizes: SizeSampler
    replicates: int = 1000
    seed: int = 0
    link: LinkFunction = LinkFunction.LOGIT
    delta: float = math.log(0.75)
    start_prevalence: float = 0.25
    end_prevalence: float = 0.20
    theta: np.ndarray | None = None

    def __post_init__(self) -> None:
        design = np.array(self.design, dtype=np.int64)
        if design.ndim != 2 or design.shape[0] < 2 or design.shape[1] < 2:
            raise ValueError("design must be an I x J treatment matrix with I, J >= 2")
        if not np.all(np.isin(design, (0, 1))):
            raise ValueError("design entries must be 0 or 1")
        object.__setattr__(self, "design", design)
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        for value in (self.start_prevalence, self.end_prevalence):
            if not 0.0 < value < 1.0:
                raise ValueError("prevalences must lie in (0, 1)")
        if self.theta is not None:
            theta = np.asarray(self.theta, dtype=float)
            if theta.shape != (design.shape[1] + 1,):
                raise ValueError("theta must hold J period effects followed by delta")
            object.__setattr__(self, "theta", theta)

    def theta_truth(self) -> np.ndarray:
        if self.theta is not None:
            return self.theta
        start = float(link_value(self.link, self.start_prevalence))
        end = float(link_value(self.link, self.end_prevalence))
        beta = np.linspace(start, end, self.design.shape[1])
        return np.append(beta, self.delta)
