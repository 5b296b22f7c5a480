"""Registry utilities for mapping correlation structures to model factories."""

from __future__ import annotations

from collections.abc import Callable, Mapping
from typing import MutableMapping

from ..contracts.correlation import CorrelationModel
from ..models.shared import CorrelationStructure

CorrelationModelFactory = Callable[[], CorrelationModel]


class CorrelationModelRegistry:
    """In-memory registry for correlation structure implementations."""

    def __init__(self) -> None:
        self._factories: MutableMapping[CorrelationStructure, CorrelationModelFactory] = {}
        self._instances: dict[CorrelationStructure, CorrelationModel] = {}

    def register(
        self,
        structure: CorrelationStructure,
        factory: CorrelationModelFactory,
        *,
        replace: bool = False,
    ) -> None:
        """Register a factory for the given structure."""

        if not replace and structure in self._factories:
            raise ValueError(f"Correlation model for {structure} already registered")
        self._factories[structure] = factory
        self._instances.pop(structure, None)

    def create(self, structure: CorrelationStructure) -> CorrelationModel:
        """Return the (stateless, cached) model for the given structure."""

        try:
            return self._instances[structure]
        except KeyError:
            pass
        try:
            factory = self._factories[structure]
        except KeyError as exc:
            raise ValueError(f"No correlation model registered for {structure}") from exc
        model = factory()
        self._instances[structure] = model
        return model

    def snapshot(self) -> Mapping[CorrelationStructure, CorrelationModelFactory]:
        """Return a copy of registered factories."""

        return dict(self._factories)


_registry = CorrelationModelRegistry()


def register_correlation_model(
    structure: CorrelationStructure,
    factory: CorrelationModelFactory,
    *,
    replace: bool = False,
) -> None:
    """Register a factory globally."""

    _registry.register(structure, factory, replace=replace)


def create_correlation_model(structure: CorrelationStructure) -> CorrelationModel:
    """Return the model registered for ``structure``."""

    return _registry.create(structure)


def registered_correlation_models() -> Mapping[CorrelationStructure, CorrelationModelFactory]:
    """Return a copy of the structure-to-factory mapping."""

    return _registry.snapshot()
