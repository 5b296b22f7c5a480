"""Alternating cluster-period GEE: Fisher scoring for the mean, moment updates for correlations."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from ..config.settings import MAX_STEP_HALVINGS, MU_CLAMP
from ..core.errors import (
    DesignError,
    InfeasibleParametersError,
    LeverageDegeneracyError,
    NonConvergenceError,
    UnidentifiedParameterError,
)
from ..core.registry import create_correlation_model
from ..core.specs import ModelSpec
from ..models.correlation import ClusterCovariance, ClusterMoments, CorrelationParams
from ..models.results import ClusterLeverage, FitResult, IterationRecord
from ..models.shared import Adjustment, LinkFunction
from ..models.trial import TrialData
from .covariance import (
    covariance_from_variance,
    design_matrix,
    induced_covariance,
    stack_upper,
    stack_weights,
)
from .links import clamp_mean, inverse_link, link_value, mean_derivative

logger = logging.getLogger(__name__)

SCORE_FLOOR = 1e-10
LEVERAGE_CONDITION_LIMIT = 1e12
INFORMATION_CONDITION_LIMIT = 1e14


@dataclass(frozen=True, eq=False)
class ClusterTerms:
    """Per-cluster ingredients evaluated at one ``(theta, alpha)``; observed periods only."""

    index: int
    periods: np.ndarray
    sizes: np.ndarray
    ybar: np.ndarray
    mu: np.ndarray
    dmu: np.ndarray
    design: np.ndarray
    d1: np.ndarray
    covariance: ClusterCovariance
    v_inv: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return self.ybar - self.mu

    @property
    def nu(self) -> np.ndarray:
        return self.mu * (1.0 - self.mu)


def cluster_terms(
    data: TrialData,
    theta: np.ndarray,
    params: CorrelationParams,
    link: LinkFunction,
) -> tuple[list[ClusterTerms], bool]:
    """Evaluate every cluster with at least one observed period.

    Returns the terms and whether any fitted mean had to be clamped.
    """

    theta = np.asarray(theta, dtype=float)
    means = data.means
    terms: list[ClusterTerms] = []
    clamped_any = False
    for i in range(data.n_clusters):
        periods = np.flatnonzero(data.sizes[i] > 0)
        if periods.size == 0:
            continue
        z = design_matrix(data.treatment[i], periods, data.n_periods)
        mu, clamped = clamp_mean(inverse_link(link, z @ theta))
        clamped_any |= clamped
        full_mu = np.full(data.n_periods, np.nan)
        full_mu[periods] = mu
        try:
            cov = induced_covariance(full_mu, data.sizes[i], params, periods=periods)
        except InfeasibleParametersError as exc:
            raise InfeasibleParametersError(f"cluster {data.cluster_ids[i]}: {exc}") from exc
        dmu = mean_derivative(link, mu)
        terms.append(
            ClusterTerms(
                index=i,
                periods=periods,
                sizes=data.sizes[i, periods].astype(float),
                ybar=means[i, periods],
                mu=mu,
                dmu=dmu,
                design=z,
                d1=dmu[:, None] * z,
                covariance=cov,
                v_inv=cho_solve((cov.cholesky, True), np.eye(periods.size)),
            )
        )
    return terms, clamped_any


def accumulate_score(terms: Sequence[ClusterTerms], n_theta: int) -> tuple[np.ndarray, np.ndarray]:
    score = np.zeros(n_theta)
    info = np.zeros((n_theta, n_theta))
    for term in terms:
        weighted = term.d1.T @ term.v_inv
        score += weighted @ term.residual
        info += weighted @ term.d1
    return score, info


def mean_score(
    theta: np.ndarray,
    params: CorrelationParams,
    data: TrialData,
    link: LinkFunction = LinkFunction.LOGIT,
) -> tuple[np.ndarray, np.ndarray]:
    """Return the quasi-score ``sum D1' V1^-1 (Ybar - mu)`` and the information ``sum D1' V1^-1 D1``."""

    terms, _ = cluster_terms(data, theta, params, link)
    return accumulate_score(terms, data.n_periods + 1)


def invert_information(info: np.ndarray) -> np.ndarray:
    """Return ``Omega``; a singular information means some mean parameter is unidentified."""

    try:
        if np.linalg.cond(info) > INFORMATION_CONDITION_LIMIT:
            raise np.linalg.LinAlgError("ill-conditioned")
        omega = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise UnidentifiedParameterError("information matrix is singular") from exc
    return (omega + omega.T) / 2.0


def mean_leverage(term: ClusterTerms, omega: np.ndarray) -> np.ndarray:
    """``H_1i = D_1i Omega D_1i' V_1i^-1``; the traces over clusters sum to ``J + 1``."""

    return term.d1 @ omega @ term.d1.T @ term.v_inv


def leverage_inverse(h: np.ndarray, label: str) -> np.ndarray:
    """Return ``(I - H)^-1``, refusing clusters that determine a parameter on their own."""

    factor = np.eye(h.shape[0]) - h
    try:
        # I - H has eigenvalues in [0, 1], so an absolute floor also catches the 1 x 1 case.
        singular = np.linalg.svd(factor, compute_uv=False)
        if singular.min() * LEVERAGE_CONDITION_LIMIT < max(singular.max(), 1.0):
            raise np.linalg.LinAlgError("ill-conditioned")
        return np.linalg.inv(factor)
    except np.linalg.LinAlgError as exc:
        raise LeverageDegeneracyError(
            f"cluster {label}: I - H is singular; the cluster fully determines a parameter"
        ) from exc


def adjusted_products(residual: np.ndarray, h1: np.ndarray, label: str) -> np.ndarray:
    """Symmetrized ``(I - H_1i)^-1 r r'``."""

    product = leverage_inverse(h1, label) @ np.outer(residual, residual)
    return (product + product.T) / 2.0


def _moments(term: ClusterTerms, products: np.ndarray) -> ClusterMoments:
    return ClusterMoments(
        periods=term.periods,
        sizes=term.sizes,
        nu=term.nu,
        residual=term.residual,
        products=products,
    )


def _products(
    data: TrialData,
    terms: Sequence[ClusterTerms],
    omega: np.ndarray,
    adjustment: Adjustment,
) -> tuple[list[ClusterMoments], list[ClusterMoments], list[np.ndarray]]:
    adjusted, raw, leverages = [], [], []
    for term in terms:
        h1 = mean_leverage(term, omega)
        raw_products = np.outer(term.residual, term.residual)
        raw.append(_moments(term, raw_products))
        if adjustment is Adjustment.MAEE:
            products = adjusted_products(term.residual, h1, data.cluster_ids[term.index])
            adjusted.append(_moments(term, products))
        else:
            adjusted.append(raw[-1])
        leverages.append(h1)
    return adjusted, raw, leverages


def residual_products(
    theta: np.ndarray,
    data: TrialData,
    params: CorrelationParams,
    adjustment: Adjustment,
    link: LinkFunction = LinkFunction.LOGIT,
) -> tuple[list[ClusterMoments], list[np.ndarray]]:
    """Per-cluster residual products (``S`` for UEE, ``S~`` for MAEE) and mean leverages ``H_1i``."""

    terms, _ = cluster_terms(data, theta, params, link)
    _, info = accumulate_score(terms, data.n_periods + 1)
    moments, _, leverages = _products(data, terms, invert_information(info), adjustment)
    return moments, leverages


def correlation_bread(
    terms: Sequence[ClusterTerms], free_map: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    """Free-parameter ``D_2i`` per cluster and ``P = (sum D_2i' W D_2i)^-1``."""

    q = free_map.shape[1]
    d2s = [term.covariance.d2 @ free_map for term in terms]
    if q == 0:
        return d2s, np.zeros((0, 0))
    total = np.zeros((q, q))
    for term, d2 in zip(terms, d2s):
        total += d2.T @ (stack_weights(term.periods.size)[:, None] * d2)
    try:
        p = np.linalg.inv(total)
    except np.linalg.LinAlgError as exc:
        raise UnidentifiedParameterError("correlation information matrix is singular") from exc
    return d2s, (p + p.T) / 2.0


def correlation_leverage(d2: np.ndarray, p: np.ndarray, k: int) -> np.ndarray:
    """``H_2i = D_2i P D_2i' W``, zero when no correlation parameter is estimated."""

    m = k * (k + 1) // 2
    if p.size == 0:
        return np.zeros((m, m))
    return d2 @ p @ d2.T * stack_weights(k)[None, :]


def _check_shape(data: TrialData) -> None:
    if data.n_clusters < 2:
        raise DesignError("I ≥ 2 required")
    if data.n_periods < 2:
        raise DesignError("J ≥ 2 required")


def _check_identifiable(data: TrialData) -> None:
    rows = [
        design_matrix(data.treatment[i], np.flatnonzero(data.sizes[i] > 0), data.n_periods)
        for i in range(data.n_clusters)
    ]
    stacked = np.vstack(rows)
    if np.linalg.matrix_rank(stacked) == data.n_periods + 1:
        return
    empty = [data.periods[j] for j in range(data.n_periods) if not data.observed[:, j].any()]
    if empty:
        raise UnidentifiedParameterError(f"period effects unidentified: no observations in {empty}")
    treated = data.treatment[data.observed]
    if treated.min() == treated.max():
        raise UnidentifiedParameterError(
            "delta is unidentified: treatment does not vary across observed cluster-periods"
        )
    raise UnidentifiedParameterError("delta is unidentified: treatment is collinear with period")


def _starting_theta(data: TrialData, link: LinkFunction) -> np.ndarray:
    totals = data.totals.sum(axis=0).astype(float)
    sizes = data.sizes.sum(axis=0).astype(float)
    pooled = (totals + 0.5) / (sizes + 1.0)
    return np.append(link_value(link, pooled), 0.0)


def _mean_step(
    data: TrialData,
    theta: np.ndarray,
    params: CorrelationParams,
    link: LinkFunction,
    trace: Sequence[IterationRecord],
) -> tuple[np.ndarray, float, int]:
    score, info = mean_score(theta, params, data, link)
    norm = float(np.linalg.norm(score))
    try:
        step = np.linalg.solve(info, score)
    except np.linalg.LinAlgError as exc:
        raise UnidentifiedParameterError("information matrix is singular") from exc
    if norm < SCORE_FLOOR:
        return theta + step, norm, 0
    for halvings in range(MAX_STEP_HALVINGS + 1):
        candidate = theta + step / 2.0**halvings
        candidate_norm = float(np.linalg.norm(mean_score(candidate, params, data, link)[0]))
        if candidate_norm <= norm * (1.0 + 1e-6) or candidate_norm < SCORE_FLOOR:
            return candidate, candidate_norm, halvings
    raise NonConvergenceError(
        f"quasi-score norm kept growing after {MAX_STEP_HALVINGS} step halvings", trace
    )


def _independence_start(data: TrialData, spec: ModelSpec) -> np.ndarray:
    theta = _starting_theta(data, spec.link)
    params = CorrelationParams.independence()
    for _ in range(spec.max_outer_iterations):
        updated, _, _ = _mean_step(data, theta, params, spec.link, ())
        change = float(np.max(np.abs(updated - theta)))
        theta = updated
        if change < spec.tolerance:
            break
    else:
        logger.info("independence start did not converge; continuing from the last iterate")
    return theta


def fit(data: TrialData, spec: ModelSpec | None = None) -> FitResult:
    """Fit the cluster-period GEE by alternating mean and correlation updates.

    Raises:
        DesignError: Fewer than two clusters or two periods.
        UnidentifiedParameterError: The design or the data cannot identify a parameter.
        LeverageDegeneracyError: MAEE needs ``(I - H_1i)^-1`` for a cluster where it does not exist.
        NonConvergenceError: Step halving could not reduce the quasi-score norm.
    """

    spec = spec or ModelSpec()
    _check_shape(data)
    _check_identifiable(data)
    model = create_correlation_model(spec.structure)
    n_theta = data.n_periods + 1
    max_size = int(data.sizes.max())

    theta = _independence_start(data, spec)
    params = model.initial(spec)
    warnings: list[str] = []
    raw_alpha: dict[str, float] = {}
    trace: list[IterationRecord] = []
    moments: list[ClusterMoments] = []
    raw_moments: list[ClusterMoments] = []
    converged = False
    iteration = 0

    for iteration in range(1, spec.max_outer_iterations + 1):
        new_theta, score_norm, halvings = _mean_step(data, theta, params, spec.link, trace)
        terms, _ = cluster_terms(data, new_theta, params, spec.link)
        _, info = accumulate_score(terms, n_theta)
        moments, raw_moments, _ = _products(data, terms, invert_information(info), spec.adjustment)

        update = model.update(moments, params, spec)
        for message in update.warnings:
            if message not in warnings:
                warnings.append(message)
        new_params, clipped = model.project(update.params, max_size)
        if clipped:
            raw_alpha = update.params.as_dict()
            message = f"correlation estimates {raw_alpha} projected to {new_params.as_dict()}"
            logger.warning(message)
            if message not in warnings:
                warnings.append(message)

        change = float(
            max(
                np.max(np.abs(new_theta - theta)),
                np.max(np.abs(new_params.vector - params.vector), initial=0.0),
            )
        )
        theta, params = new_theta, new_params
        record = IterationRecord(
            iteration=iteration,
            theta=tuple(float(v) for v in theta),
            alpha=tuple(float(v) for v in params.vector),
            score_norm=score_norm,
            step_halvings=halvings,
            change=change,
        )
        trace.append(record)
        logger.debug(
            "iteration %d: change=%.3e score_norm=%.3e halvings=%d",
            iteration,
            change,
            score_norm,
            halvings,
        )
        if change < spec.tolerance:
            converged = True
            break

    if not converged:
        message = f"no convergence after {spec.max_outer_iterations} outer iterations"
        logger.warning(message)
        warnings.append(message)

    terms, clamped = cluster_terms(data, theta, params, spec.link)
    score, info = accumulate_score(terms, n_theta)
    omega = invert_information(info)
    if clamped:
        message = f"fitted means clamped to [{MU_CLAMP:g}, 1 - {MU_CLAMP:g}]"
        logger.warning(message)
        warnings.append(message)

    free_map = model.free_map(spec)
    d2s, p = correlation_bread(terms, free_map)
    leverage = tuple(
        ClusterLeverage(
            periods=term.periods,
            h1=mean_leverage(term, omega),
            h2=correlation_leverage(d2, p, term.periods.size),
        )
        for term, d2 in zip(terms, d2s)
    )
    mu_hat = np.full(data.sizes.shape, np.nan)
    for term in terms:
        mu_hat[term.index, term.periods] = term.mu

    return FitResult(
        data=data,
        spec=spec,
        theta=theta,
        params=params,
        converged=converged,
        iterations=iteration,
        mu_hat=mu_hat,
        leverage=leverage,
        moments=tuple(moments),
        raw_moments=tuple(raw_moments),
        eta=tuple(term.covariance.eta for term in terms),
        theta_names=tuple(f"beta_{label}" for label in data.periods) + ("delta",),
        alpha_names=model.free_names(spec),
        score_norm=float(np.linalg.norm(score)),
        clamped=clamped,
        warnings=tuple(warnings),
        raw_alpha=raw_alpha,
        trace=tuple(trace),
    )


def correlation_score(
    moments: Sequence[ClusterMoments],
    params: CorrelationParams,
    free_map: np.ndarray | None = None,
) -> np.ndarray:
    """Stacked correlation estimating equation ``sum D_2i' W (s_i - eta_i)`` at ``params``."""

    total: np.ndarray | None = None
    for m in moments:
        cov = covariance_from_variance(m.nu, m.sizes, m.periods, params)
        d2 = cov.d2 if free_map is None else cov.d2 @ free_map
        weights = stack_weights(m.periods.size)
        contribution = d2.T @ (weights * (stack_upper(m.products) - cov.eta))
        total = contribution if total is None else total + contribution
    return np.zeros(0) if total is None else total
