"""Link functions for the marginal mean model."""

from __future__ import annotations

import numpy as np
from scipy.special import expit, logit

from ..config.settings import MU_CLAMP
from ..models.shared import LinkFunction


def inverse_link(link: LinkFunction, eta: np.ndarray) -> np.ndarray:
    """Map the linear predictor to the mean scale."""

    eta = np.asarray(eta, dtype=float)
    if link is LinkFunction.LOGIT:
        return expit(eta)
    if link is LinkFunction.LOG:
        return np.exp(eta)
    return eta.copy()


def link_value(link: LinkFunction, mu: np.ndarray) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if link is LinkFunction.LOGIT:
        return logit(mu)
    if link is LinkFunction.LOG:
        return np.log(mu)
    return mu.copy()


def mean_derivative(link: LinkFunction, mu: np.ndarray) -> np.ndarray:
    """Return ``d mu / d eta`` evaluated at ``mu``."""

    mu = np.asarray(mu, dtype=float)
    if link is LinkFunction.LOGIT:
        return mu * (1.0 - mu)
    if link is LinkFunction.LOG:
        return mu.copy()
    return np.ones_like(mu)


def clamp_mean(mu: np.ndarray) -> tuple[np.ndarray, bool]:
    """Clamp means into ``[eps, 1 - eps]``; the flag reports whether anything moved."""

    mu = np.asarray(mu, dtype=float)
    clamped = np.clip(mu, MU_CLAMP, 1.0 - MU_CLAMP)
    return clamped, bool(np.any(clamped != mu))
