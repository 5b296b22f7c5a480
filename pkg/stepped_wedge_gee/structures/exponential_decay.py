"""Exponential decay structure: between-period ICC ``alpha0 * rho**|j - l|``.

The correlation update alternates a closed form for ``alpha0`` given ``rho`` with a
polynomial root search for ``rho`` given ``alpha0``. When the alternation stalls, the
profiled equation in ``rho`` alone is bracketed on a grid and solved with Brent's method.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from ..config.settings import ED_INNER_MAX_ITERATIONS, ED_INNER_TOLERANCE
from ..contracts.correlation import CorrelationModel, CorrelationUpdate
from ..core.errors import NonConvergenceError, UnidentifiedParameterError
from ..core.registry import register_correlation_model
from ..core.specs import ModelSpec
from ..models.correlation import ClusterMoments, CorrelationParams
from ..models.shared import CorrelationStructure
from .base import MomentSums, clip_alpha0, moment_sums

logger = logging.getLogger(__name__)

INITIAL_ALPHA0 = 0.01
INITIAL_RHO = 0.5
ROOT_IMAG_TOLERANCE = 1e-8
ROOT_EDGE_TOLERANCE = 1e-9
PROFILE_GRID = 201


def _lags(sums: MomentSums) -> np.ndarray:
    return np.arange(sums.lag_products.size, dtype=float)


def decay_numerator(sums: MomentSums, rho: float) -> float:
    lags = _lags(sums)[1:]
    return sums.within_products + float(np.sum(sums.lag_products[1:] * rho**lags))


def decay_denominator(sums: MomentSums, rho: float) -> float:
    lags = _lags(sums)[1:]
    return sums.within_variances + float(np.sum(sums.lag_variances[1:] * rho ** (2 * lags)))


def alpha0_given_rho(sums: MomentSums, rho: float) -> float:
    denominator = decay_denominator(sums, rho)
    if denominator <= 0.0:
        raise UnidentifiedParameterError("alpha0 is unidentified at the current decay factor")
    return decay_numerator(sums, rho) / denominator


def rho_polynomial(sums: MomentSums, alpha0: float) -> Polynomial:
    """Return the estimating equation for ``rho`` at fixed ``alpha0`` as a polynomial.

    ``f(rho) = sum_d d * A_d * rho**(d - 1) - alpha0 * sum_d d * B_d * rho**(2d - 1)``,
    of degree ``2 * (J - 1) - 1``.
    """

    max_lag = sums.lag_products.size - 1
    coef = np.zeros(max(2 * max_lag, 1))
    for d in range(1, max_lag + 1):
        coef[d - 1] += d * sums.lag_products[d]
        coef[2 * d - 1] -= alpha0 * d * sums.lag_variances[d]
    return Polynomial(coef)


def decay_objective(sums: MomentSums, alpha0: float, rho: float) -> float:
    """Weighted squared-error criterion (up to a constant) whose stationary points solve the update."""

    return -2.0 * alpha0 * decay_numerator(sums, rho) + alpha0**2 * decay_denominator(sums, rho)


def _polish(poly: Polynomial, root: float) -> float:
    slope = poly.deriv()
    for _ in range(3):
        step_slope = slope(root)
        if step_slope == 0.0:
            break
        root = float(np.clip(root - poly(root) / step_slope, 0.0, 1.0))
    return root


def solve_rho(
    sums: MomentSums, alpha0: float, previous_rho: float
) -> tuple[float, str | None]:
    """Return the root in ``[0, 1]`` minimizing the objective, or a boundary with a warning."""

    poly = rho_polynomial(sums, alpha0)
    if not np.any(poly.coef):
        return previous_rho, None
    roots = poly.roots() if poly.degree() > 0 else np.array([])
    real = roots[np.abs(roots.imag) <= ROOT_IMAG_TOLERANCE * np.maximum(1.0, np.abs(roots))].real
    inside = real[(real >= -ROOT_EDGE_TOLERANCE) & (real <= 1.0 + ROOT_EDGE_TOLERANCE)]
    if inside.size:
        candidates = [_polish(poly, float(np.clip(r, 0.0, 1.0))) for r in inside]
        return min(candidates, key=lambda r: decay_objective(sums, alpha0, r)), None
    boundary = min((0.0, 1.0), key=lambda r: abs(poly(r)))
    return boundary, f"no decay root in [0, 1]; rho set to boundary {boundary:g}"


def _profiled_solution(sums: MomentSums) -> tuple[float, str | None]:
    def profiled(rho: float) -> float:
        return float(rho_polynomial(sums, alpha0_given_rho(sums, rho))(rho))

    grid = np.linspace(0.0, 1.0, PROFILE_GRID)
    values = np.array([profiled(r) for r in grid])
    candidates = [float(r) for r, v in zip(grid, values) if v == 0.0]
    for lo, hi, f_lo, f_hi in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if f_lo * f_hi < 0.0:
            try:
                candidates.append(brentq(profiled, lo, hi, xtol=ED_INNER_TOLERANCE))
            except (RuntimeError, ValueError) as exc:
                raise NonConvergenceError(f"profiled decay equation failed: {exc}") from exc
    if candidates:
        def profiled_objective(rho: float) -> float:
            return decay_objective(sums, alpha0_given_rho(sums, rho), rho)

        return min(candidates, key=profiled_objective), None
    boundary = 0.0 if abs(values[0]) <= abs(values[-1]) else 1.0
    return boundary, f"no decay root in [0, 1]; rho set to boundary {boundary:g}"


def ed_update(sums: MomentSums, previous: CorrelationParams) -> CorrelationUpdate:
    """Jointly solve the ``alpha0`` and ``rho`` estimating equations.

    Raises:
        UnidentifiedParameterError: No cluster-period has two members or no cluster has two
            observed periods.
        NonConvergenceError: Neither the alternation nor the profiled fallback settles.
    """

    if sums.within_variances <= 0.0:
        raise UnidentifiedParameterError("alpha0 is unidentified: no cluster-period has n >= 2")
    if sums.between_variances <= 0.0:
        raise UnidentifiedParameterError("rho is unidentified: no cluster has two observed periods")
    if previous.structure is CorrelationStructure.EXPONENTIAL_DECAY:
        alpha0, rho = previous.alpha0, previous.rho
    else:
        alpha0, rho = INITIAL_ALPHA0, INITIAL_RHO
    warning: str | None = None
    for iteration in range(1, ED_INNER_MAX_ITERATIONS + 1):
        new_alpha0 = alpha0_given_rho(sums, rho)
        new_rho, warning = solve_rho(sums, new_alpha0, rho)
        change = max(abs(new_alpha0 - alpha0), abs(new_rho - rho))
        alpha0, rho = new_alpha0, new_rho
        if change < ED_INNER_TOLERANCE:
            break
    else:
        logger.info("decay alternation did not settle; solving the profiled equation")
        rho, warning = _profiled_solution(sums)
    alpha0 = alpha0_given_rho(sums, rho)
    if warning:
        logger.warning(warning)
    return CorrelationUpdate(
        CorrelationParams.exponential_decay(alpha0, rho),
        warnings=(warning,) if warning else (),
        inner_iterations=iteration,
    )


class ExponentialDecayModel(CorrelationModel):
    structure = CorrelationStructure.EXPONENTIAL_DECAY

    def between_period(self, params: CorrelationParams, lag: np.ndarray) -> np.ndarray:
        return params.alpha0 * np.power(params.rho, np.asarray(lag, dtype=float))

    def between_period_gradient(self, params: CorrelationParams, lag: np.ndarray) -> np.ndarray:
        lag = np.asarray(lag, dtype=float)
        grad = np.empty(lag.shape + (2,))
        grad[..., 0] = np.power(params.rho, lag)
        # 0 ** 0 == 1 keeps the lag-one derivative at rho = 0.
        grad[..., 1] = params.alpha0 * lag * np.power(params.rho, np.maximum(lag - 1.0, 0.0))
        return grad

    def initial(self, spec: ModelSpec) -> CorrelationParams:
        if spec.fixed_rho is not None:
            return CorrelationParams.exponential_decay(INITIAL_ALPHA0, spec.fixed_rho)
        return CorrelationParams.exponential_decay(INITIAL_ALPHA0, INITIAL_RHO)

    def update(
        self,
        moments: Sequence[ClusterMoments],
        previous: CorrelationParams,
        spec: ModelSpec,
    ) -> CorrelationUpdate:
        sums = moment_sums(moments)
        if spec.fixed_rho is not None:
            alpha0 = alpha0_given_rho(sums, spec.fixed_rho)
            return CorrelationUpdate(CorrelationParams.exponential_decay(alpha0, spec.fixed_rho))
        return ed_update(sums, previous)

    def project(self, params: CorrelationParams, max_size: int) -> tuple[CorrelationParams, bool]:
        projected = CorrelationParams.exponential_decay(
            clip_alpha0(params.alpha0), float(np.clip(params.rho, 0.0, 1.0))
        )
        return projected, projected != params

    def free_map(self, spec: ModelSpec) -> np.ndarray:
        if spec.fixed_rho is not None:
            return np.array([[1.0], [0.0]])
        return np.eye(2)

    def free_names(self, spec: ModelSpec) -> tuple[str, ...]:
        return ("alpha0",) if spec.fixed_rho is not None else ("alpha0", "rho")


def register(*, replace: bool = False) -> None:
    register_correlation_model(
        CorrelationStructure.EXPONENTIAL_DECAY, ExponentialDecayModel, replace=replace
    )


register()
