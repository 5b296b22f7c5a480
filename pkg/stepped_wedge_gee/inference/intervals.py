"""``t_{I-2}`` confidence intervals."""

from __future__ import annotations

from scipy import stats

from ..core.errors import DegreesOfFreedomError
from ..models.results import FitResult, IntervalReport, IntervalRow, SandwichSet
from ..models.shared import Correction

DEFAULT_CONFIDENCE = 0.95


def t_quantile(n_clusters: int, confidence: float = DEFAULT_CONFIDENCE) -> float:
    if n_clusters <= 2:
        raise DegreesOfFreedomError(f"t intervals need I ≥ 3 clusters; got {n_clusters}")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    return float(stats.t.ppf(0.5 + confidence / 2.0, df=n_clusters - 2))


def t_interval(
    estimate: float, se: float, n_clusters: int, confidence: float = DEFAULT_CONFIDENCE
) -> tuple[float, float]:
    half = t_quantile(n_clusters, confidence) * se
    return estimate - half, estimate + half


def reported_correction(name: str, theta_names: tuple[str, ...]) -> Correction:
    """Default pairing: BC1 for mean parameters, BC2 for correlation parameters."""

    return Correction.BC1 if name in theta_names else Correction.BC2


def intervals(
    fit: FitResult,
    covariances: SandwichSet,
    correction: Correction | None = None,
    confidence: float = DEFAULT_CONFIDENCE,
) -> IntervalReport:
    """Intervals for every estimate under one correction, or the default pairing when ``None``.

    The model-based covariance has no correlation block, so only mean parameters are reported
    under :attr:`Correction.MODEL`.
    """

    n_clusters = fit.data.n_clusters
    quantile = t_quantile(n_clusters, confidence)
    estimates = fit.estimates
    rows = []
    for index, name in enumerate(fit.names):
        chosen = correction or reported_correction(name, fit.theta_names)
        if chosen is Correction.MODEL and index >= fit.theta.size:
            continue
        se = float(covariances.standard_errors(chosen)[index])
        estimate = float(estimates[index])
        rows.append(
            IntervalRow(
                parameter=name,
                estimate=estimate,
                se=se,
                lower=estimate - quantile * se,
                upper=estimate + quantile * se,
                correction=chosen,
            )
        )
    return IntervalReport(
        rows=tuple(rows), df=n_clusters - 2, confidence=confidence, quantile=quantile
    )
