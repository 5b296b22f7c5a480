"""Correlation parameter and cluster-level covariance records."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .shared import CorrelationStructure


@dataclass(frozen=True, slots=True)
class CorrelationParams:
    """Tagged union over the supported correlation structures.

    ``alpha0`` is the within-period ICC, ``alpha1`` the between-period ICC (nested
    exchangeable only) and ``rho`` the decay factor (exponential decay only). Unused fields
    keep their neutral defaults so that equal structures compare equal.
    """

    structure: CorrelationStructure
    alpha0: float = 0.0
    alpha1: float = 0.0
    rho: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha0", "alpha1", "rho"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.structure is CorrelationStructure.INDEPENDENCE:
            if self.alpha0 != 0.0 or self.alpha1 != 0.0:
                raise ValueError("independence carries no correlation parameters")
        if self.structure is not CorrelationStructure.NESTED_EXCHANGEABLE and self.alpha1 != 0.0:
            raise ValueError("alpha1 is only defined for the nested exchangeable structure")
        if self.structure is CorrelationStructure.EXPONENTIAL_DECAY:
            if not 0.0 <= self.rho <= 1.0:
                raise ValueError("rho must lie in [0, 1]")
        elif self.rho != 1.0:
            raise ValueError("rho is only defined for the exponential decay structure")

    @classmethod
    def independence(cls) -> "CorrelationParams":
        return cls(CorrelationStructure.INDEPENDENCE)

    @classmethod
    def exchangeable(cls, alpha0: float) -> "CorrelationParams":
        return cls(CorrelationStructure.EXCHANGEABLE, alpha0=float(alpha0))

    @classmethod
    def nested_exchangeable(cls, alpha0: float, alpha1: float) -> "CorrelationParams":
        return cls(CorrelationStructure.NESTED_EXCHANGEABLE, alpha0=float(alpha0), alpha1=float(alpha1))

    @classmethod
    def exponential_decay(cls, alpha0: float, rho: float) -> "CorrelationParams":
        return cls(CorrelationStructure.EXPONENTIAL_DECAY, alpha0=float(alpha0), rho=float(rho))

    @property
    def names(self) -> tuple[str, ...]:
        """Names of the natural parameters, in :attr:`vector` order."""

        return {
            CorrelationStructure.INDEPENDENCE: (),
            CorrelationStructure.EXCHANGEABLE: ("alpha0",),
            CorrelationStructure.NESTED_EXCHANGEABLE: ("alpha0", "alpha1"),
            CorrelationStructure.EXPONENTIAL_DECAY: ("alpha0", "rho"),
        }[self.structure]

    @property
    def vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in self.names], dtype=float)

    def with_vector(self, values: np.ndarray | list[float]) -> "CorrelationParams":
        values = np.asarray(values, dtype=float)
        if values.shape != (len(self.names),):
            raise ValueError(f"{self.structure} expects {len(self.names)} parameters")
        return CorrelationParams(self.structure, **{n: float(v) for n, v in zip(self.names, values)})

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in self.names}


@dataclass(frozen=True, eq=False)
class ClusterCovariance:
    """Induced covariance of one cluster's period means.

    Only observed periods (``n_ij >= 1``) appear: ``periods`` holds their indices,
    ``v1`` is ``k x k``, ``eta`` stacks ``v1`` row-major over ``j <= l`` and ``d2`` is
    ``d eta / d alpha^T`` with one column per natural parameter.
    """

    periods: np.ndarray
    v1: np.ndarray
    eta: np.ndarray
    d2: np.ndarray
    cholesky: np.ndarray


@dataclass(frozen=True, eq=False)
class ClusterMoments:
    """Residual summaries consumed by the correlation updates.

    ``products`` is the ``k x k`` matrix of (possibly bias-adjusted) residual cross-products
    over the observed periods listed in ``periods``.
    """

    periods: np.ndarray
    sizes: np.ndarray
    nu: np.ndarray
    residual: np.ndarray
    products: np.ndarray
