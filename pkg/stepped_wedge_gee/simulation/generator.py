"""Correlated binary outcomes from the conditional linear family.

Component ``t`` is Bernoulli with conditional mean ``mu_t + b_t' (y_<t - mu_<t)``, where
``b_t`` solves the leading covariance system, so the draws reproduce the target means and
pairwise correlations. The dense sampler works from a Cholesky factor of the full
covariance; the block sampler exploits the fact that, within a cluster, the coefficients
are constant over the members of each period block, and solves a small system per member
position instead of materializing the ``N x N`` covariance.
"""

from __future__ import annotations

import logging

import numpy as np

from ..config.settings import GENERATOR_CLAMP, GENERATOR_MAX_REDRAWS
from ..core.errors import GeneratorFeasibilityError
from ..core.parallel import replicate_generator
from ..core.registry import create_correlation_model
from ..core.specs import SimConfig
from ..engine.covariance import expand_individual
from ..engine.links import inverse_link
from ..models.correlation import CorrelationParams
from ..models.trial import TrialData
from .design import staircase

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-12


def semidefinite_cholesky(cov: np.ndarray) -> np.ndarray:
    """Lower factor ``L`` with ``L L' = cov``; zero pivots mark linearly determined components."""

    n = cov.shape[0]
    lower = np.zeros_like(cov, dtype=float)
    for j in range(n):
        pivot = cov[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= PIVOT_TOLERANCE * max(cov[j, j], 1.0):
            continue
        lower[j, j] = np.sqrt(pivot)
        lower[j + 1 :, j] = (cov[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def _checked(conditional: np.ndarray, index: int) -> np.ndarray:
    if np.any(conditional < -GENERATOR_CLAMP) or np.any(conditional > 1.0 + GENERATOR_CLAMP):
        worst = float(conditional[(conditional < 0) | (conditional > 1)][0])
        raise GeneratorFeasibilityError(
            f"conditional mean {worst:.6g} outside [0, 1] at component {index}", index
        )
    return np.clip(conditional, 0.0, 1.0)


def qaqish_sample(
    means: np.ndarray,
    corr: np.ndarray,
    rng: np.random.Generator,
    draws: int | None = None,
) -> np.ndarray:
    """Draw binary vectors with the given means and correlation matrix.

    Returns one vector of length ``N``, or a ``draws x N`` array when ``draws`` is given.

    Raises:
        GeneratorFeasibilityError: A conditional mean leaves ``[0, 1]`` beyond rounding.
    """

    means = np.asarray(means, dtype=float)
    if np.any(means <= 0.0) or np.any(means >= 1.0):
        raise ValueError("means must lie strictly inside (0, 1)")
    sd = np.sqrt(means * (1.0 - means))
    lower = semidefinite_cholesky(np.asarray(corr, dtype=float) * np.outer(sd, sd))
    n = means.size
    rows = 1 if draws is None else draws
    uniforms = rng.random((rows, n))
    y = np.zeros((rows, n))
    white = np.zeros((rows, n))
    for t in range(n):
        conditional = _checked(means[t] + white[:, :t] @ lower[t, :t], t)
        y[:, t] = uniforms[:, t] < conditional
        if lower[t, t] > 0.0:
            white[:, t] = (y[:, t] - conditional) / lower[t, t]
    y = y.astype(np.int64)
    return y[0] if draws is None else y


def _block_systems(
    nu: np.ndarray,
    members: np.ndarray,
    within: np.ndarray,
    between: np.ndarray,
    block: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient systems for every member position of ``block`` (one per prior same-block count)."""

    k_blocks = nu.size
    positions = np.arange(members[block], dtype=float)
    base = np.zeros((k_blocks, k_blocks))
    rhs = np.zeros(k_blocks)
    for a in range(block):
        base[a, :block] = members[:block] * between[a, :block]
        base[a, a] = nu[a] + (members[a] - 1) * within[a]
        rhs[a] = between[a, block]
    base[block, :block] = members[:block] * between[block, :block]
    for b in range(block + 1, k_blocks):
        base[b, b] = 1.0

    systems = np.repeat(base[None], positions.size, axis=0)
    systems[:, :block, block] = positions[:, None] * between[:block, block][None, :]
    systems[:, block, block] = nu[block] + (positions - 1.0) * within[block]
    first = positions == 0
    systems[first, block, :] = 0.0
    systems[first, block, block] = 1.0
    rhs_all = np.repeat(rhs[None], positions.size, axis=0)
    rhs_all[:, block] = np.where(first, 0.0, within[block])
    return systems, rhs_all


def block_sample(
    means: np.ndarray,
    sizes: np.ndarray,
    periods: np.ndarray,
    params: CorrelationParams,
    rng: np.random.Generator,
    draws: int | None = None,
) -> np.ndarray:
    """Sample one cluster whose members are grouped into period blocks.

    ``means``, ``sizes`` and ``periods`` describe the observed blocks; members are returned
    block by block, matching :func:`~stepped_wedge_gee.engine.covariance.expand_individual`.
    """

    means = np.asarray(means, dtype=float)
    members = np.asarray(sizes, dtype=np.int64)
    periods = np.asarray(periods, dtype=int)
    nu = means * (1.0 - means)
    model = create_correlation_model(params.structure)
    lag = np.abs(periods[:, None] - periods[None, :])
    between = np.sqrt(np.outer(nu, nu)) * model.between_period(params, lag)
    within = nu * params.alpha0

    coefficients = []
    for block in range(nu.size):
        systems, rhs = _block_systems(nu, members, within, between, block)
        coefficients.append(np.linalg.solve(systems, rhs[..., None])[..., 0])

    total = int(members.sum())
    rows = 1 if draws is None else draws
    uniforms = rng.random((rows, total))
    y = np.zeros((rows, total), dtype=np.int64)
    sums = np.zeros((rows, nu.size))
    t = 0
    for block in range(nu.size):
        for position in range(members[block]):
            beta = coefficients[block][position]
            conditional = _checked(means[block] + sums @ beta, t)
            draw = uniforms[:, t] < conditional
            y[:, t] = draw
            sums[:, block] += draw - means[block]
            t += 1
    return y[0] if draws is None else y


def _cluster_outcomes(
    data: TrialData,
    cluster: int,
    mu: np.ndarray,
    truth: CorrelationParams,
    rng: np.random.Generator,
    dense: bool,
) -> np.ndarray:
    periods = np.flatnonzero(data.sizes[cluster] > 0)
    if dense:
        expansion = expand_individual(data, cluster, mu, truth)
        sd = np.sqrt(np.diag(expansion.m1))
        y = qaqish_sample(expansion.vartheta, expansion.m1 / np.outer(sd, sd), rng)
    else:
        y = block_sample(mu[periods], data.sizes[cluster, periods], periods, truth, rng)
    totals = np.zeros(data.n_periods, dtype=np.int64)
    totals[periods] = np.add.reduceat(y, np.r_[0, np.cumsum(data.sizes[cluster, periods])[:-1]])
    return totals


def draw_trial(config: SimConfig, replicate: int, *, dense: bool = False) -> tuple[TrialData, int]:
    """Simulate one replicate; returns the trial and the number of size redraws it needed.

    Raises:
        GeneratorFeasibilityError: Every one of the allowed redraws was infeasible.
    """

    rng = replicate_generator(config.seed, replicate)
    treatment = staircase(config.clusters, config.periods)
    linear = config.period_effects()[None, :] + config.delta * treatment
    mu = inverse_link(config.link, linear)
    cluster_ids = tuple(str(i + 1) for i in range(config.clusters))
    periods = tuple(str(j + 1) for j in range(config.periods))
    last_error: GeneratorFeasibilityError | None = None
    for redraw in range(GENERATOR_MAX_REDRAWS + 1):
        sizes = config.sizes.draw(rng, treatment.shape)
        skeleton = TrialData(cluster_ids, periods, sizes, np.zeros_like(sizes), treatment)
        try:
            totals = np.vstack(
                [
                    _cluster_outcomes(skeleton, i, mu[i], config.truth, rng, dense)
                    for i in range(config.clusters)
                ]
            )
        except GeneratorFeasibilityError as exc:
            last_error = exc
            logger.warning("replicate %d: infeasible draw (%s); redrawing sizes", replicate, exc)
            continue
        return TrialData(cluster_ids, periods, sizes, totals, treatment), redraw
    raise GeneratorFeasibilityError(
        f"replicate {replicate}: no feasible draw after {GENERATOR_MAX_REDRAWS} redraws",
        None if last_error is None else last_error.index,
    )


def simulate_trial(config: SimConfig, replicate: int) -> TrialData:
    """Deterministic simulated trial for ``(config.seed, replicate)``."""

    return draw_trial(config, replicate)[0]
