"""Sandwich covariances, t intervals and the correlation information criterion."""

from .cic import cic_cp
from .intervals import intervals, t_interval
from .sandwich import model_based, sandwich, sandwich_set

__all__ = ["cic_cp", "intervals", "model_based", "sandwich", "sandwich_set", "t_interval"]
