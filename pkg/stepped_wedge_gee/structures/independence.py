"""Working independence: no correlation parameters."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from ..contracts.correlation import CorrelationModel, CorrelationUpdate
from ..core.registry import register_correlation_model
from ..core.specs import ModelSpec
from ..models.correlation import ClusterMoments, CorrelationParams
from ..models.shared import CorrelationStructure


class IndependenceModel(CorrelationModel):
    """Implementation of :class:`CorrelationModel` with a diagonal ``V_1i``."""

    structure = CorrelationStructure.INDEPENDENCE

    def between_period(self, params: CorrelationParams, lag: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(lag))

    def between_period_gradient(self, params: CorrelationParams, lag: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(lag) + (0,))

    def initial(self, spec: ModelSpec) -> CorrelationParams:
        return CorrelationParams.independence()

    def update(
        self,
        moments: Sequence[ClusterMoments],
        previous: CorrelationParams,
        spec: ModelSpec,
    ) -> CorrelationUpdate:
        return CorrelationUpdate(CorrelationParams.independence())

    def project(self, params: CorrelationParams, max_size: int) -> tuple[CorrelationParams, bool]:
        return params, False

    def free_map(self, spec: ModelSpec) -> np.ndarray:
        return np.zeros((0, 0))

    def free_names(self, spec: ModelSpec) -> tuple[str, ...]:
        return ()


def register(*, replace: bool = False) -> None:
    """Register the independence model in the global registry."""

    register_correlation_model(CorrelationStructure.INDEPENDENCE, IndependenceModel, replace=replace)


register()
