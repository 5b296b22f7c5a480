"""Simple exchangeable structure: one ICC for every pair in a cluster."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from ..contracts.correlation import CorrelationModel, CorrelationUpdate
from ..core.errors import UnidentifiedParameterError
from ..core.registry import register_correlation_model
from ..core.specs import ModelSpec
from ..models.correlation import ClusterMoments, CorrelationParams
from ..models.shared import CorrelationStructure
from .base import MomentSums, clip_alpha0, moment_sums

INITIAL_ALPHA0 = 0.01


def exchangeable_update(sums: MomentSums) -> float:
    """Closed-form alpha0 when within- and between-period ICCs coincide."""

    if sums.within_variances + sums.between_variances <= 0.0:
        raise UnidentifiedParameterError(
            "alpha0 is unidentified: no cluster-period with n >= 2 and no cluster with two periods"
        )
    return sums.exchangeable_alpha0()


class ExchangeableModel(CorrelationModel):
    structure = CorrelationStructure.EXCHANGEABLE

    def between_period(self, params: CorrelationParams, lag: np.ndarray) -> np.ndarray:
        return np.full(np.shape(lag), params.alpha0)

    def between_period_gradient(self, params: CorrelationParams, lag: np.ndarray) -> np.ndarray:
        return np.ones(np.shape(lag) + (1,))

    def initial(self, spec: ModelSpec) -> CorrelationParams:
        return CorrelationParams.exchangeable(INITIAL_ALPHA0)

    def update(
        self,
        moments: Sequence[ClusterMoments],
        previous: CorrelationParams,
        spec: ModelSpec,
    ) -> CorrelationUpdate:
        alpha0 = exchangeable_update(moment_sums(moments))
        return CorrelationUpdate(CorrelationParams.exchangeable(alpha0))

    def project(self, params: CorrelationParams, max_size: int) -> tuple[CorrelationParams, bool]:
        alpha0 = clip_alpha0(params.alpha0)
        return CorrelationParams.exchangeable(alpha0), alpha0 != params.alpha0

    def free_map(self, spec: ModelSpec) -> np.ndarray:
        return np.eye(1)

    def free_names(self, spec: ModelSpec) -> tuple[str, ...]:
        return ("alpha0",)


def register(*, replace: bool = False) -> None:
    register_correlation_model(CorrelationStructure.EXCHANGEABLE, ExchangeableModel, replace=replace)


register()
