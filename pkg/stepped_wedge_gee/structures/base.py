"""Moment sums shared by the closed-form and root-finding correlation updates."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..config.settings import ALPHA0_CEILING, ALPHA0_FLOOR
from ..models.correlation import ClusterMoments


@dataclass(frozen=True, eq=False)
class MomentSums:
    """Sufficient statistics of the correlation estimating equations.

    ``lag_products[d]`` is the sum over clusters and ordered period pairs ``j != l`` with
    ``|j - l| = d`` of ``s_ijl * sqrt(nu_ij * nu_il)``; ``lag_variances[d]`` sums
    ``nu_ij * nu_il`` over the same pairs. Index 0 is unused.
    """

    within_products: float
    within_variances: float
    lag_products: np.ndarray
    lag_variances: np.ndarray

    @property
    def between_products(self) -> float:
        return float(self.lag_products.sum())

    @property
    def between_variances(self) -> float:
        return float(self.lag_variances.sum())

    def exchangeable_alpha0(self) -> float:
        denominator = self.within_variances + self.between_variances
        return (self.within_products + self.between_products) / denominator


def moment_sums(moments: Sequence[ClusterMoments]) -> MomentSums:
    n_lags = 1 + max((int(m.periods.max()) for m in moments if m.periods.size), default=0)
    within_products = 0.0
    within_variances = 0.0
    lag_products = np.zeros(n_lags)
    lag_variances = np.zeros(n_lags)
    for m in moments:
        if m.periods.size == 0:
            continue
        shrink = (m.sizes - 1.0) / m.sizes
        within_products += float(np.sum(shrink * (np.diag(m.products) * m.nu - m.nu**2 / m.sizes)))
        within_variances += float(np.sum(shrink**2 * m.nu**2))
        if m.periods.size < 2:
            continue
        root = np.sqrt(m.nu)
        lag = np.abs(m.periods[:, None] - m.periods[None, :])
        off = lag > 0
        np.add.at(lag_products, lag[off], (m.products * np.outer(root, root))[off])
        np.add.at(lag_variances, lag[off], np.outer(m.nu, m.nu)[off])
    return MomentSums(within_products, within_variances, lag_products, lag_variances)


def clip_alpha0(alpha0: float) -> float:
    return float(min(max(alpha0, ALPHA0_FLOOR), ALPHA0_CEILING))
