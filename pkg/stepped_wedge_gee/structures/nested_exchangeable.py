"""Nested exchangeable structure: distinct within- and between-period ICCs."""

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
from .exchangeable import exchangeable_update

INITIAL_ALPHA0 = 0.01
INITIAL_ALPHA1 = 0.005
PROJECTION_MARGIN = 1e-8


def ne_update(sums: MomentSums) -> tuple[float, float]:
    """Return the unconstrained closed-form ``(alpha0, alpha1)``.

    Raises:
        UnidentifiedParameterError: No cluster-period has two members (alpha0) or no
            cluster has two observed periods (alpha1).
    """

    if sums.within_variances <= 0.0:
        raise UnidentifiedParameterError("alpha0 is unidentified: no cluster-period has n >= 2")
    if sums.between_variances <= 0.0:
        raise UnidentifiedParameterError(
            "alpha1 is unidentified: no cluster has two observed periods"
        )
    alpha0 = sums.within_products / sums.within_variances
    alpha1 = sums.between_products / sums.between_variances
    return alpha0, alpha1


class NestedExchangeableModel(CorrelationModel):
    structure = CorrelationStructure.NESTED_EXCHANGEABLE

    def between_period(self, params: CorrelationParams, lag: np.ndarray) -> np.ndarray:
        return np.full(np.shape(lag), params.alpha1)

    def between_period_gradient(self, params: CorrelationParams, lag: np.ndarray) -> np.ndarray:
        grad = np.zeros(np.shape(lag) + (2,))
        grad[..., 1] = 1.0
        return grad

    def initial(self, spec: ModelSpec) -> CorrelationParams:
        if spec.tie_alpha1:
            return CorrelationParams.nested_exchangeable(INITIAL_ALPHA0, INITIAL_ALPHA0)
        return CorrelationParams.nested_exchangeable(INITIAL_ALPHA0, INITIAL_ALPHA1)

    def update(
        self,
        moments: Sequence[ClusterMoments],
        previous: CorrelationParams,
        spec: ModelSpec,
    ) -> CorrelationUpdate:
        sums = moment_sums(moments)
        if spec.tie_alpha1:
            alpha0 = exchangeable_update(sums)
            return CorrelationUpdate(CorrelationParams.nested_exchangeable(alpha0, alpha0))
        return CorrelationUpdate(CorrelationParams.nested_exchangeable(*ne_update(sums)))

    def project(self, params: CorrelationParams, max_size: int) -> tuple[CorrelationParams, bool]:
        alpha0 = clip_alpha0(params.alpha0)
        if params.alpha1 == params.alpha0:
            alpha1 = alpha0
        else:
            lower = -alpha0 / max(max_size - 1, 1) + PROJECTION_MARGIN
            alpha1 = float(min(max(params.alpha1, lower), alpha0))
        projected = CorrelationParams.nested_exchangeable(alpha0, alpha1)
        return projected, projected != params

    def free_map(self, spec: ModelSpec) -> np.ndarray:
        if spec.tie_alpha1:
            return np.ones((2, 1))
        return np.eye(2)

    def free_names(self, spec: ModelSpec) -> tuple[str, ...]:
        return ("alpha0",) if spec.tie_alpha1 else ("alpha0", "alpha1")


def register(*, replace: bool = False) -> None:
    register_correlation_model(
        CorrelationStructure.NESTED_EXCHANGEABLE, NestedExchangeableModel, replace=replace
    )


register()
