"""Estimation engine: links, induced covariances and the alternating GEE solver."""

from __future__ import annotations

from importlib import import_module
from typing import Any

__all__ = [
    "covariance_jacobian",
    "expand_individual",
    "fit",
    "induced_covariance",
    "limit_correlation",
    "mean_score",
    "residual_products",
]

# Resolved on first access so ``core.specs`` can use ``engine.links`` without importing the solver.
_lazy_targets = {
    "covariance_jacobian": ("covariance", "covariance_jacobian"),
    "expand_individual": ("covariance", "expand_individual"),
    "induced_covariance": ("covariance", "induced_covariance"),
    "limit_correlation": ("covariance", "limit_correlation"),
    "fit": ("gee", "fit"),
    "mean_score": ("gee", "mean_score"),
    "residual_products": ("gee", "residual_products"),
}


def __getattr__(name: str) -> Any:
    try:
        module_name, attr_name = _lazy_targets[name]
    except KeyError as exc:
        raise AttributeError(f"module 'stepped_wedge_gee.engine' has no attribute {name!r}") from exc
    module = import_module(f"{__name__}.{module_name}")
    value = getattr(module, attr_name)
    globals()[name] = value
    return value
