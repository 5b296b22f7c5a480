"""Named simulation configurations."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import replace
from typing import Any

from ..core.specs import DiscreteUniformSizes, SimConfig
from ..models.correlation import CorrelationParams

COVERAGE_SWEEP_CLUSTERS = (12, 24, 36, 48, 60, 72, 84, 96, 108, 120)

_PRESETS: dict[str, Callable[[], SimConfig]] = {
    "table2-ne-small": lambda: SimConfig(truth=CorrelationParams.nested_exchangeable(0.03, 0.015)),
    "table2-ne-large": lambda: SimConfig(truth=CorrelationParams.nested_exchangeable(0.1, 0.05)),
    "table2-ed-small": lambda: SimConfig(truth=CorrelationParams.exponential_decay(0.03, 0.8)),
    "table2-ed-large": lambda: SimConfig(truth=CorrelationParams.exponential_decay(0.1, 0.5)),
    "coverage-sweep": lambda: SimConfig(
        clusters=24,
        truth=CorrelationParams.nested_exchangeable(0.1, 0.05),
        sizes=DiscreteUniformSizes(25, 50),
    ),
}

# Short spellings accepted wherever a preset name is.
_ALIASES = {
    "ne-small": "table2-ne-small",
    "ne-large": "table2-ne-large",
    "ed-small": "table2-ed-small",
    "ed-large": "table2-ed-large",
}


def preset_names() -> tuple[str, ...]:
    return (*_PRESETS, *_ALIASES)


def preset(name: str, **overrides: Any) -> SimConfig:
    """Return the named configuration with ``overrides`` applied (``None`` values are ignored)."""

    try:
        config = _PRESETS[_ALIASES.get(name, name)]()
    except KeyError as exc:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(_PRESETS)}") from exc
    changes = {key: value for key, value in overrides.items() if value is not None}
    return replace(config, **changes) if changes else config
