"""Randomized check that cluster-period quasi-scores equal their individual-level counterparts.

For every cluster, ``D1' V1^-1 (Ybar - mu)`` must equal ``E1' M1^-1 (Y - vartheta)`` and
``D1' V1^-1 D1`` must equal ``E1' M1^-1 E1`` for any individual outcome vector consistent
with the cluster-period totals.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core.parallel import replicate_generator
from .engine.covariance import expand_individual, individual_outcomes
from .engine.gee import cluster_terms
from .models.correlation import CorrelationParams
from .models.shared import CorrelationStructure, LinkFunction
from .models.trial import TrialData

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-8
MAX_CLUSTERS = 4
MAX_SIZE = 5
CORRUPTION_FACTOR = 1.1


@dataclass(frozen=True, eq=False)
class OracleInstance:
    seed: int
    trial: int
    data: TrialData
    theta: np.ndarray
    params: CorrelationParams
    discrepancy: float = 0.0

    def as_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "trial": self.trial,
            "structure": str(self.params.structure),
            "params": self.params.as_dict(),
            "theta": [float(v) for v in self.theta],
            "sizes": self.data.sizes.tolist(),
            "totals": self.data.totals.tolist(),
            "treatment": self.data.treatment.tolist(),
            "discrepancy": self.discrepancy,
        }


@dataclass(frozen=True, eq=False)
class OracleReport:
    trials: int
    max_discrepancy: float
    tolerance: float
    worst: OracleInstance | None = None
    structures: tuple[CorrelationStructure, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return self.max_discrepancy < self.tolerance


def random_params(rng: np.random.Generator, structure: CorrelationStructure) -> CorrelationParams:
    """Feasible parameters: ``0 <= alpha1 <= alpha0`` or ``0 <= rho <= 1``."""

    alpha0 = float(rng.uniform(0.01, 0.5))
    if structure is CorrelationStructure.NESTED_EXCHANGEABLE:
        return CorrelationParams.nested_exchangeable(alpha0, float(rng.uniform(0.0, alpha0)))
    if structure is CorrelationStructure.EXPONENTIAL_DECAY:
        return CorrelationParams.exponential_decay(alpha0, float(rng.uniform(0.0, 1.0)))
    if structure is CorrelationStructure.EXCHANGEABLE:
        return CorrelationParams.exchangeable(alpha0)
    return CorrelationParams.independence()


def random_instance(
    seed: int, trial: int, structure: CorrelationStructure
) -> OracleInstance:
    rng = replicate_generator(seed, trial)
    clusters = int(rng.integers(1, MAX_CLUSTERS + 1))
    periods = int(rng.integers(2, 4))
    sizes = rng.integers(0, MAX_SIZE + 1, size=(clusters, periods))
    empty = sizes.sum(axis=1) == 0
    sizes[empty, 0] = 1
    totals = rng.integers(0, sizes + 1)
    treatment = rng.integers(0, 2, size=(clusters, periods))
    data = TrialData(
        cluster_ids=tuple(f"c{i + 1}" for i in range(clusters)),
        periods=tuple(str(j + 1) for j in range(periods)),
        sizes=sizes,
        totals=totals,
        treatment=treatment,
    )
    theta = rng.uniform(-1.5, 1.5, size=periods + 1)
    return OracleInstance(seed, trial, data, theta, random_params(rng, structure))


def quasi_score_discrepancy(
    data: TrialData,
    theta: np.ndarray,
    params: CorrelationParams,
    link: LinkFunction = LinkFunction.LOGIT,
    *,
    corrupt: bool = False,
) -> float:
    """Largest absolute difference between the two score and information computations."""

    terms, _ = cluster_terms(data, theta, params, link)
    worst = 0.0
    for term in terms:
        v_inv = term.v_inv / CORRUPTION_FACTOR if corrupt else term.v_inv
        score = term.d1.T @ v_inv @ term.residual
        info = term.d1.T @ v_inv @ term.d1

        mu = np.full(data.n_periods, 0.5)
        mu[term.periods] = term.mu
        expansion = expand_individual(data, term.index, mu, params, link)
        outcomes = individual_outcomes(data, term.index)
        weighted = np.linalg.solve(expansion.m1, expansion.e1)
        individual_score = weighted.T @ (outcomes - expansion.vartheta)
        individual_info = expansion.e1.T @ weighted

        worst = max(
            worst,
            float(np.max(np.abs(score - individual_score))),
            float(np.max(np.abs(info - individual_info))),
        )
    return worst


def run_oracle(
    trials: int = 100,
    seed: int = 0,
    structures: Sequence[CorrelationStructure] = (
        CorrelationStructure.NESTED_EXCHANGEABLE,
        CorrelationStructure.EXPONENTIAL_DECAY,
    ),
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    corrupt: bool = False,
) -> OracleReport:
    """Evaluate ``trials`` random instances, cycling through ``structures``."""

    if trials < 1:
        raise ValueError("trials must be at least 1")
    worst: OracleInstance | None = None
    for trial in range(trials):
        structure = structures[trial % len(structures)]
        instance = random_instance(seed, trial, structure)
        discrepancy = quasi_score_discrepancy(
            instance.data, instance.theta, instance.params, corrupt=corrupt
        )
        if worst is None or discrepancy > worst.discrepancy:
            worst = OracleInstance(
                instance.seed, trial, instance.data, instance.theta, instance.params, discrepancy
            )
    assert worst is not None
    logger.info("oracle: %d trials, max discrepancy %.3e", trials, worst.discrepancy)
    return OracleReport(
        trials=trials,
        max_discrepancy=worst.discrepancy,
        tolerance=tolerance,
        worst=worst,
        structures=tuple(structures),
    )
