"""Joint sandwich covariance of mean and correlation estimates with small-sample corrections.

The bread is ``A = [[Omega, 0], [Q, P]]`` and the meat ``Lambda`` sums outer products of the
per-cluster estimating-function contributions. BC1 and BC2 rescale residuals by
``(I - H)^{-1/2}`` and ``(I - H)^{-1}``; BC3 inflates each contribution by a capped
diagonal factor.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from ..config.settings import DEFAULT_ZETA, EIGEN_FLOOR
from ..core.errors import NumericalConditioningError
from ..core.registry import create_correlation_model
from ..engine.covariance import stack_upper, stack_weights, upper_pairs
from ..engine.gee import (
    accumulate_score,
    adjusted_products,
    cluster_terms,
    correlation_bread,
    correlation_leverage,
    invert_information,
    leverage_inverse,
    mean_leverage,
)
from ..models.results import FitResult, SandwichSet
from ..models.shared import SANDWICH_CORRECTIONS, Adjustment, Correction

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class ClusterContribution:
    """Everything one cluster adds to the meat, before any correction is applied."""

    label: str
    d1: np.ndarray
    v_inv: np.ndarray
    residual: np.ndarray
    h1: np.ndarray
    d2: np.ndarray
    weights: np.ndarray
    moment_residual: np.ndarray
    h2: np.ndarray


@dataclass(frozen=True, eq=False)
class SandwichInputs:
    contributions: tuple[ClusterContribution, ...]
    omega: np.ndarray
    p: np.ndarray
    q: np.ndarray


def inverse_sqrt(factor: np.ndarray) -> np.ndarray:
    """Symmetric principal inverse square root with eigenvalues floored at ``EIGEN_FLOOR``."""

    sym = (factor + factor.T) / 2.0
    values, vectors = np.linalg.eigh(sym)
    values = np.maximum(values, EIGEN_FLOOR)
    return (vectors / np.sqrt(values)) @ vectors.T


def moment_derivative(d1: np.ndarray, residual: np.ndarray) -> np.ndarray:
    """``d s_jl / d theta'`` for the stacked ``j <= l`` residual products."""

    rows, cols = upper_pairs(residual.size)
    return -(d1[rows] * residual[cols][:, None] + residual[rows][:, None] * d1[cols])


def cluster_contributions(fit: FitResult, *, strict_uee: bool = False) -> SandwichInputs:
    """Evaluate per-cluster sandwich ingredients at the fitted ``(theta, alpha)``.

    Bias-adjusted products enter the correlation contributions unless ``strict_uee`` is set
    on a UEE fit, in which case the raw products are used.
    """

    data = fit.data
    model = create_correlation_model(fit.spec.structure)
    terms, _ = cluster_terms(data, fit.theta, fit.params, fit.spec.link)
    _, info = accumulate_score(terms, fit.theta.size)
    omega = invert_information(info)
    free_map = model.free_map(fit.spec)
    d2s, p = correlation_bread(terms, free_map)
    use_raw = strict_uee and fit.spec.adjustment is Adjustment.UEE

    contributions = []
    gradient = np.zeros((p.shape[0], fit.theta.size))
    for term, d2 in zip(terms, d2s):
        label = data.cluster_ids[term.index]
        h1 = mean_leverage(term, omega)
        if use_raw:
            products = np.outer(term.residual, term.residual)
        else:
            products = adjusted_products(term.residual, h1, label)
        k = term.periods.size
        weights = stack_weights(k)
        gradient += d2.T @ (weights[:, None] * moment_derivative(term.d1, term.residual))
        contributions.append(
            ClusterContribution(
                label=label,
                d1=term.d1,
                v_inv=term.v_inv,
                residual=term.residual,
                h1=h1,
                d2=d2,
                weights=weights,
                moment_residual=stack_upper(products) - term.covariance.eta,
                h2=correlation_leverage(d2, p, k),
            )
        )
    q = p @ gradient @ omega
    return SandwichInputs(tuple(contributions), omega, p, q)


def _residual_factor(h: np.ndarray, correction: Correction, label: str) -> np.ndarray | None:
    if correction is Correction.BC1:
        return inverse_sqrt(np.eye(h.shape[0]) - h)
    if correction is Correction.BC2:
        return leverage_inverse(h, label)
    return None


def _inflation(cluster_information: np.ndarray, bread: np.ndarray, zeta: float) -> np.ndarray:
    statistic = np.minimum(zeta, np.diag(cluster_information) * np.diag(bread))
    return (1.0 - statistic) ** -0.5


def joint_covariance(
    contributions: Sequence[ClusterContribution],
    omega: np.ndarray,
    p: np.ndarray,
    q: np.ndarray,
    correction: Correction,
    zeta: tuple[float, float] = (DEFAULT_ZETA, DEFAULT_ZETA),
) -> np.ndarray:
    """Assemble ``A Lambda A'`` for one sandwich correction.

    Raises:
        NumericalConditioningError: The result is not positive semidefinite.
    """

    if correction is Correction.MODEL:
        raise ValueError("the model-based covariance is not a sandwich")
    n_theta, n_alpha = omega.shape[0], p.shape[0]
    meat = np.zeros((n_theta + n_alpha, n_theta + n_alpha))
    for c in contributions:
        residual = c.residual
        moment_residual = c.moment_residual
        factor = _residual_factor(c.h1, correction, c.label)
        if factor is not None:
            residual = factor @ residual
        if n_alpha:
            factor = _residual_factor(c.h2, correction, c.label)
            if factor is not None:
                moment_residual = factor @ moment_residual
        e1 = c.d1.T @ c.v_inv @ residual
        e2 = c.d2.T @ (c.weights * moment_residual)
        if correction is Correction.BC3:
            e1 = _inflation(c.d1.T @ c.v_inv @ c.d1, omega, zeta[0]) * e1
            if n_alpha:
                e2 = _inflation(c.d2.T @ (c.weights[:, None] * c.d2), p, zeta[1]) * e2
        contribution = np.concatenate([e1, e2])
        meat += np.outer(contribution, contribution)

    bread = np.zeros_like(meat)
    bread[:n_theta, :n_theta] = omega
    bread[n_theta:, :n_theta] = q
    bread[n_theta:, n_theta:] = p
    covariance = bread @ meat @ bread.T
    covariance = (covariance + covariance.T) / 2.0
    eigenvalues = np.linalg.eigvalsh(covariance)
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    if eigenvalues.min() < -PSD_TOLERANCE * scale:
        raise NumericalConditioningError(
            f"{correction} covariance is not positive semidefinite (min eigenvalue "
            f"{eigenvalues.min():.3e})"
        )
    return covariance


def model_based(fit: FitResult) -> np.ndarray:
    """``Omega = (sum D1' V1^-1 D1)^-1`` at the fitted values; covers ``theta`` only."""

    terms, _ = cluster_terms(fit.data, fit.theta, fit.params, fit.spec.link)
    _, info = accumulate_score(terms, fit.theta.size)
    return invert_information(info)


def sandwich(
    fit: FitResult,
    correction: Correction = Correction.BC0,
    *,
    zeta: tuple[float, float] = (DEFAULT_ZETA, DEFAULT_ZETA),
    strict_uee: bool = False,
) -> np.ndarray:
    if correction is Correction.MODEL:
        return model_based(fit)
    inputs = cluster_contributions(fit, strict_uee=strict_uee)
    return joint_covariance(inputs.contributions, inputs.omega, inputs.p, inputs.q, correction, zeta)


def sandwich_set(
    fit: FitResult,
    corrections: Iterable[Correction] = SANDWICH_CORRECTIONS,
    *,
    zeta: tuple[float, float] = (DEFAULT_ZETA, DEFAULT_ZETA),
    strict_uee: bool = False,
) -> SandwichSet:
    """Model-based covariance plus the requested sandwich corrections."""

    if not fit.converged:
        logger.warning("computing sandwich covariances for a fit that did not converge")
    inputs = cluster_contributions(fit, strict_uee=strict_uee)
    joint = {
        correction: joint_covariance(
            inputs.contributions, inputs.omega, inputs.p, inputs.q, correction, zeta
        )
        for correction in corrections
        if correction is not Correction.MODEL
    }
    return SandwichSet(
        model_based=inputs.omega,
        joint=joint,
        names=fit.names,
        n_theta=fit.theta.size,
        zeta=zeta,
    )
