"""Induced covariance of cluster-period means and its individual-level expansion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config.settings import ORACLE_MAX_SIZE
from ..core.errors import (
    InfeasibleParametersError,
    OracleScaleError,
    UndefinedLimitError,
    VarianceDegeneracyError,
)
from ..core.registry import create_correlation_model
from ..models.correlation import ClusterCovariance, CorrelationParams
from ..models.shared import CorrelationStructure, LinkFunction
from ..models.trial import TrialData
from .links import mean_derivative


def binomial_variance(mu: np.ndarray) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0.0) or np.any(mu >= 1.0):
        raise VarianceDegeneracyError("mean on the boundary {0, 1}; binomial variance vanishes")
    return mu * (1.0 - mu)


def design_matrix(treatment: np.ndarray, periods: np.ndarray, n_periods: int) -> np.ndarray:
    """Rows ``(e_j, X_ij)`` of the period-effect plus treatment design for observed periods."""

    periods = np.asarray(periods, dtype=int)
    z = np.zeros((periods.size, n_periods + 1))
    z[np.arange(periods.size), periods] = 1.0
    z[:, -1] = np.asarray(treatment, dtype=float)[periods]
    return z


def upper_pairs(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-major ``(j, l)`` index pairs with ``j <= l``; the canonical stacking of ``eta``."""

    return np.triu_indices(k)


def stack_weights(k: int) -> np.ndarray:
    """Weights making the stacked ``j <= l`` sums equal full symmetric-matrix sums."""

    rows, cols = upper_pairs(k)
    return np.where(rows == cols, 1.0, 2.0)


def stack_upper(matrix: np.ndarray) -> np.ndarray:
    return matrix[upper_pairs(matrix.shape[0])]


def induced_covariance(
    mu: np.ndarray,
    sizes: np.ndarray,
    params: CorrelationParams,
    *,
    periods: np.ndarray | None = None,
) -> ClusterCovariance:
    """Build ``V_1i``, ``eta_i`` and ``D_2i`` for one cluster.

    ``mu`` and ``sizes`` are full ``J``-vectors; periods with ``n_ij = 0`` are dropped.

    Raises:
        VarianceDegeneracyError: An observed mean lies on {0, 1}.
        InfeasibleParametersError: ``V_1i`` is not positive definite.
    """

    sizes = np.asarray(sizes)
    if periods is None:
        periods = np.flatnonzero(sizes > 0)
    periods = np.asarray(periods, dtype=int)
    nu = binomial_variance(np.asarray(mu, dtype=float)[periods])
    return covariance_from_variance(nu, sizes[periods], periods, params)


def covariance_from_variance(
    nu: np.ndarray,
    sizes: np.ndarray,
    periods: np.ndarray,
    params: CorrelationParams,
) -> ClusterCovariance:
    """Same as :func:`induced_covariance` for already-observed variances ``nu`` and sizes."""

    periods = np.asarray(periods, dtype=int)
    n = np.asarray(sizes, dtype=float)
    model = create_correlation_model(params.structure)

    lag = np.abs(periods[:, None] - periods[None, :])
    root = np.sqrt(np.outer(nu, nu))
    v1 = root * model.between_period(params, lag)
    np.fill_diagonal(v1, nu / n * (1.0 + (n - 1.0) * params.alpha0))

    rows, cols = upper_pairs(periods.size)
    eta = v1[rows, cols]
    grad = model.between_period_gradient(params, lag[rows, cols])
    d2 = root[rows, cols][:, None] * grad
    diagonal = rows == cols
    d2[diagonal] = 0.0
    if d2.shape[1]:
        d2[diagonal, 0] = (nu * (n - 1.0) / n)[rows[diagonal]]

    try:
        cholesky = np.linalg.cholesky(v1)
    except np.linalg.LinAlgError as exc:
        raise InfeasibleParametersError(
            f"induced covariance is not positive definite at {params.as_dict()}"
        ) from exc
    return ClusterCovariance(periods=periods, v1=v1, eta=eta, d2=d2, cholesky=cholesky)


def covariance_jacobian(
    mu: np.ndarray, sizes: np.ndarray, params: CorrelationParams
) -> np.ndarray:
    """Return ``d eta_i / d alpha^T`` with one column per natural parameter."""

    return induced_covariance(mu, sizes, params).d2


def limit_correlation(params: CorrelationParams, j: int, l: int) -> float:
    """Correlation between two cluster-period means as cluster-period sizes grow."""

    if params.structure is CorrelationStructure.INDEPENDENCE or params.alpha0 == 0.0:
        raise UndefinedLimitError("limiting correlation requires alpha0 > 0")
    if j == l:
        return 1.0
    if params.structure is CorrelationStructure.NESTED_EXCHANGEABLE:
        return params.alpha1 / params.alpha0
    if params.structure is CorrelationStructure.EXPONENTIAL_DECAY:
        return params.rho ** abs(j - l)
    return 1.0


@dataclass(frozen=True, eq=False)
class IndividualExpansion:
    """Individual-level Jacobian, covariance and means for one cluster.

    Members are listed period by period; ``member_period[k]`` gives the period of row ``k``.
    """

    e1: np.ndarray
    m1: np.ndarray
    vartheta: np.ndarray
    member_period: np.ndarray


def expand_individual(
    data: TrialData,
    cluster: int,
    mu: np.ndarray,
    params: CorrelationParams,
    link: LinkFunction = LinkFunction.LOGIT,
) -> IndividualExpansion:
    """Materialize the individual-level GEE ingredients of one cluster.

    Raises:
        OracleScaleError: The cluster has more than ``ORACLE_MAX_SIZE`` members.
    """

    sizes = data.sizes[cluster]
    total = int(sizes.sum())
    if total > ORACLE_MAX_SIZE:
        raise OracleScaleError(
            f"cluster {data.cluster_ids[cluster]} has {total} members; limit is {ORACLE_MAX_SIZE}"
        )
    periods = np.flatnonzero(sizes > 0)
    mu = np.asarray(mu, dtype=float)
    nu = binomial_variance(mu[periods])
    d1 = mean_derivative(link, mu[periods])[:, None] * design_matrix(
        data.treatment[cluster], periods, data.n_periods
    )

    member = np.repeat(np.arange(periods.size), sizes[periods])
    model = create_correlation_model(params.structure)
    lag = np.abs(periods[member][:, None] - periods[member][None, :])
    same = member[:, None] == member[None, :]
    correlation = np.where(same, params.alpha0, model.between_period(params, lag))
    np.fill_diagonal(correlation, 1.0)
    m1 = np.sqrt(np.outer(nu[member], nu[member])) * correlation
    return IndividualExpansion(
        e1=d1[member],
        m1=m1,
        vartheta=mu[periods][member],
        member_period=periods[member],
    )


def individual_outcomes(data: TrialData, cluster: int) -> np.ndarray:
    """One binary vector consistent with the cluster-period totals (successes listed first)."""

    parts = []
    for n, y in zip(data.sizes[cluster], data.totals[cluster]):
        if n > 0:
            parts.append(np.r_[np.ones(y), np.zeros(n - y)])
    return np.concatenate(parts) if parts else np.zeros(0)
