"""Relative efficiency of a modeled correlation structure against working independence.

For one draw of cluster-period sizes the ratio compares the ``delta`` entry of the
independence sandwich ``A^-1 B A^-1`` (``A = sum D1' Psi^-1 D1``,
``B = sum D1' Psi^-1 V1 Psi^-1 D1``, ``Psi = diag(nu / n)``) with that of the inverse
information ``(sum D1' V1^-1 D1)^-1``, all evaluated at the true parameters.
"""

from __future__ import annotations

import logging

import numpy as np

from .core.errors import DesignError
from .core.parallel import ordered_map, replicate_generator
from .core.specs import AreConfig
from .engine.covariance import design_matrix, expand_individual, induced_covariance
from .engine.links import inverse_link, mean_derivative
from .models.correlation import CorrelationParams
from .models.results import AreResult
from .models.shared import LinkFunction
from .models.trial import TrialData

logger = logging.getLogger(__name__)

QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)


def _tau(a: np.ndarray, b: np.ndarray, info: np.ndarray) -> float:
    try:
        a_inv = np.linalg.inv(a)
        info_inv = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise DesignError("degenerate design: the bread matrix is singular") from exc
    independence = a_inv @ b @ a_inv
    return float(independence[-1, -1] / info_inv[-1, -1])


def are_tau(
    design: np.ndarray,
    truth: CorrelationParams,
    sizes: np.ndarray,
    theta: np.ndarray,
    link: LinkFunction = LinkFunction.LOGIT,
) -> float:
    """Relative efficiency for one size matrix (``n_ij = 0`` cells are skipped)."""

    design = np.asarray(design)
    sizes = np.asarray(sizes)
    theta = np.asarray(theta, dtype=float)
    n_periods = design.shape[1]
    p = n_periods + 1
    a, b, info = np.zeros((p, p)), np.zeros((p, p)), np.zeros((p, p))
    for i in range(design.shape[0]):
        periods = np.flatnonzero(sizes[i] > 0)
        if periods.size == 0:
            continue
        z = design_matrix(design[i], periods, n_periods)
        mu_obs = inverse_link(link, z @ theta)
        mu = np.full(n_periods, np.nan)
        mu[periods] = mu_obs
        cov = induced_covariance(mu, sizes[i], truth, periods=periods)
        d1 = mean_derivative(link, mu_obs)[:, None] * z
        psi_inv_d1 = (sizes[i, periods] / (mu_obs * (1.0 - mu_obs)))[:, None] * d1
        a += d1.T @ psi_inv_d1
        b += psi_inv_d1.T @ cov.v1 @ psi_inv_d1
        info += d1.T @ np.linalg.solve(cov.v1, d1)
    return _tau(a, b, info)


def are_tau_individual(
    design: np.ndarray,
    truth: CorrelationParams,
    sizes: np.ndarray,
    theta: np.ndarray,
    link: LinkFunction = LinkFunction.LOGIT,
) -> float:
    """Same ratio assembled from materialized individual-level matrices; small sizes only."""

    design = np.asarray(design, dtype=np.int64)
    sizes = np.asarray(sizes, dtype=np.int64)
    data = TrialData(
        cluster_ids=tuple(str(i) for i in range(design.shape[0])),
        periods=tuple(str(j) for j in range(design.shape[1])),
        sizes=sizes,
        totals=np.zeros_like(sizes),
        treatment=design,
    )
    p = design.shape[1] + 1
    a, b, info = np.zeros((p, p)), np.zeros((p, p)), np.zeros((p, p))
    for i in range(data.n_clusters):
        if not data.observed[i].any():
            continue
        mu = inverse_link(link, design_matrix(design[i], np.arange(data.n_periods), data.n_periods) @ theta)
        expansion = expand_individual(data, i, mu, truth, link)
        weights = 1.0 / (expansion.vartheta * (1.0 - expansion.vartheta))
        weighted = weights[:, None] * expansion.e1
        a += expansion.e1.T @ weighted
        b += weighted.T @ expansion.m1 @ weighted
        info += expansion.e1.T @ np.linalg.solve(expansion.m1, expansion.e1)
    return _tau(a, b, info)


def are_estimate(config: AreConfig, threads: int = 1) -> AreResult:
    """Mean relative efficiency over ``config.replicates`` independent size draws."""

    theta = config.theta_truth()

    def replicate(k: int) -> float:
        rng = replicate_generator(config.seed, k)
        sizes = config.sizes.draw(rng, config.design.shape)
        return are_tau(config.design, config.truth, sizes, theta, config.link)

    values = np.array(ordered_map(replicate, range(config.replicates), threads))
    k = values.size
    mc_se = float(values.std(ddof=1) / np.sqrt(k)) if k > 1 else 0.0
    quantiles = {f"q{q:g}": float(np.quantile(values, q)) for q in QUANTILES}
    logger.info("ARE over %d replicates: mean %.4f (MC-SE %.4f)", k, values.mean(), mc_se)
    return AreResult(
        mean=float(values.mean()),
        mc_se=mc_se,
        quantiles=quantiles,
        replicates=k,
        values=tuple(float(v) for v in values),
    )
