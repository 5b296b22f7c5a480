"""Core utilities: errors, run configuration, registry and the analysis facade."""

from __future__ import annotations

from importlib import import_module
from typing import Any

__all__ = [
    "TrialAnalyzer",
    "compare_structures",
    "ModelSpec",
    "SimConfig",
    "AreConfig",
    "register_correlation_model",
    "create_correlation_model",
    "SteppedWedgeError",
    "NonConvergenceError",
    "UnidentifiedParameterError",
]

_lazy_targets = {
    "TrialAnalyzer": ("coordinator", "TrialAnalyzer"),
    "compare_structures": ("coordinator", "compare_structures"),
    "ModelSpec": ("specs", "ModelSpec"),
    "SimConfig": ("specs", "SimConfig"),
    "AreConfig": ("specs", "AreConfig"),
    "register_correlation_model": ("registry", "register_correlation_model"),
    "create_correlation_model": ("registry", "create_correlation_model"),
    "SteppedWedgeError": ("errors", "SteppedWedgeError"),
    "NonConvergenceError": ("errors", "NonConvergenceError"),
    "UnidentifiedParameterError": ("errors", "UnidentifiedParameterError"),
}


def __getattr__(name: str) -> Any:
    try:
        module_name, attr_name = _lazy_targets[name]
    except KeyError as exc:
        raise AttributeError(f"module 'stepped_wedge_gee.core' has no attribute {name!r}") from exc
    module = import_module(f"{__name__}.{module_name}")
    value = getattr(module, attr_name)
    globals()[name] = value
    return value
