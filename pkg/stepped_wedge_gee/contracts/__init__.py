"""Interfaces implemented by pluggable components."""

from .correlation import CorrelationModel, CorrelationUpdate

__all__ = ["CorrelationModel", "CorrelationUpdate"]
