"""Correlation information criterion for comparing working structures on cluster-period means."""

from __future__ import annotations

import numpy as np

from ..engine.gee import cluster_terms
from ..models.results import FitResult, SandwichSet
from ..models.shared import Correction
from .sandwich import sandwich_set


def independence_information(fit: FitResult) -> np.ndarray:
    """``sum D1' Psi^-1 D1`` with ``Psi = diag(nu / n)`` at the fitted means."""

    terms, _ = cluster_terms(fit.data, fit.theta, fit.params, fit.spec.link)
    info = np.zeros((fit.theta.size, fit.theta.size))
    for term in terms:
        info += term.d1.T @ ((term.sizes / term.nu)[:, None] * term.d1)
    return info


def correlation_information(info_independence: np.ndarray, robust_theta: np.ndarray) -> float:
    return float(np.trace(info_independence @ robust_theta))


def cic_cp(
    fit: FitResult,
    covariances: SandwichSet | None = None,
    correction: Correction = Correction.BC1,
) -> float:
    """``trace[(sum D1' Psi^-1 D1) Omega Lambda_11 Omega]`` using the ``correction`` meat."""

    if covariances is None or correction not in covariances.joint:
        covariances = sandwich_set(fit, (correction,))
    return correlation_information(independence_information(fit), covariances.theta_block(correction))
