"""Protocol describing an individual-level working correlation structure."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import ClassVar, Protocol, runtime_checkable

import numpy as np

from ..core.specs import ModelSpec
from ..models.correlation import ClusterMoments, CorrelationParams
from ..models.shared import CorrelationStructure


@dataclass(frozen=True, slots=True)
class CorrelationUpdate:
    """Outcome of one correlation update: fitted values plus diagnostics."""

    params: CorrelationParams
    warnings: tuple[str, ...] = field(default_factory=tuple)
    inner_iterations: int = 0


@runtime_checkable
class CorrelationModel(Protocol):
    """Structure capable of building induced covariances and updating its parameters.

    Every structure shares the within-period ICC ``alpha0`` on the diagonal blocks; the
    structure-specific part is the correlation between two members of periods ``lag``
    apart.
    """

    structure: ClassVar[CorrelationStructure]

    # Covariance building ---------------------------------------------
    def between_period(self, params: CorrelationParams, lag: np.ndarray) -> np.ndarray:
        """Return the individual-level correlation for members ``lag >= 1`` periods apart."""

    def between_period_gradient(self, params: CorrelationParams, lag: np.ndarray) -> np.ndarray:
        """Return ``d between_period / d alpha^T`` with a trailing axis over natural parameters."""

    # Estimation --------------------------------------------------------
    def initial(self, spec: ModelSpec) -> CorrelationParams:
        """Return the starting values used before the first correlation update."""

    def update(
        self,
        moments: Sequence[ClusterMoments],
        previous: CorrelationParams,
        spec: ModelSpec,
    ) -> CorrelationUpdate:
        """Solve the correlation estimating equations given residual cross-products."""

    def project(self, params: CorrelationParams, max_size: int) -> tuple[CorrelationParams, bool]:
        """Clip parameters into the feasible box; the flag reports whether clipping happened."""

    def free_map(self, spec: ModelSpec) -> np.ndarray:
        """Return the ``natural x free`` matrix mapping free parameters onto natural ones."""

    def free_names(self, spec: ModelSpec) -> tuple[str, ...]:
        """Return the names of the parameters actually estimated under ``spec``."""
