"""Value types shared across the package."""

from .correlation import ClusterCovariance, ClusterMoments, CorrelationParams
from .results import (
    Analysis,
    AreResult,
    ExperimentReport,
    FitResult,
    IntervalReport,
    IntervalRow,
    SandwichSet,
)
from .shared import Adjustment, Correction, CorrelationStructure, LinkFunction
from .trial import DesignInfo, TrialData

__all__ = [
    "Adjustment",
    "Analysis",
    "AreResult",
    "ClusterCovariance",
    "ClusterMoments",
    "Correction",
    "CorrelationParams",
    "CorrelationStructure",
    "DesignInfo",
    "ExperimentReport",
    "FitResult",
    "IntervalReport",
    "IntervalRow",
    "LinkFunction",
    "SandwichSet",
    "TrialData",
]
