"""Custom exception hierarchy for cluster-period GEE analyses."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any


class SteppedWedgeError(RuntimeError):
    """Base class for all domain-specific exceptions."""


class InputError(SteppedWedgeError):
    """Raised when an input stream is empty or unreadable."""


class SchemaError(SteppedWedgeError):
    """Raised when required columns are missing or values violate the schema."""


class IntegrityError(SteppedWedgeError):
    """Raised when rows contradict each other (duplicates, conflicting treatment, y > n)."""


class DesignError(SteppedWedgeError):
    """Raised when the trial shape or option combination cannot support the request."""


class VarianceDegeneracyError(SteppedWedgeError):
    """Raised when a mean sits on the boundary {0, 1} and the binomial variance vanishes."""


class InfeasibleParametersError(SteppedWedgeError):
    """Raised when correlation parameters produce a non positive definite covariance."""


class UndefinedLimitError(SteppedWedgeError):
    """Raised when a limiting correlation is requested with a zero within-period ICC."""


class OracleScaleError(SteppedWedgeError):
    """Raised when an individual-level expansion would exceed the materialization guard."""


class UnidentifiedParameterError(SteppedWedgeError):
    """Raised when the data cannot identify a mean or correlation parameter."""


class LeverageDegeneracyError(SteppedWedgeError):
    """Raised when ``I - H`` is singular because one cluster determines a parameter."""


class NonConvergenceError(SteppedWedgeError):
    """Raised when an iterative solver fails; ``trace`` holds the iteration history."""

    def __init__(self, message: str, trace: Sequence[Any] = ()) -> None:
        super().__init__(message)
        self.trace = tuple(trace)


class NumericalConditioningError(SteppedWedgeError):
    """Raised when a covariance is not positive semidefinite after symmetrization."""


class DegreesOfFreedomError(SteppedWedgeError):
    """Raised when too few clusters remain for ``t_{I-2}`` intervals."""


class GeneratorFeasibilityError(SteppedWedgeError):
    """Raised when a conditional mean leaves [0, 1] during correlated binary sampling."""

    def __init__(self, message: str, index: int | None = None) -> None:
        super().__init__(message)
        self.index = index
