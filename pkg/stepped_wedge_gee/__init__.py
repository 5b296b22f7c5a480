"""Cluster-period GEE for stepped-wedge cluster randomized trials.

This module exposes the public API: trial ingestion, the alternating GEE fit with UEE/MAEE
correlation estimation, sandwich inference, relative efficiency and the simulation lab.
"""

__version__ = "0.1.0"

from . import structures
from .config import Settings, configure_logging, load_settings
from .contracts import CorrelationModel, CorrelationUpdate
from .core.coordinator import TrialAnalyzer, compare_structures
from .core.errors import (
    DegreesOfFreedomError,
    DesignError,
    GeneratorFeasibilityError,
    InfeasibleParametersError,
    InputError,
    IntegrityError,
    LeverageDegeneracyError,
    NonConvergenceError,
    NumericalConditioningError,
    OracleScaleError,
    SchemaError,
    SteppedWedgeError,
    UndefinedLimitError,
    UnidentifiedParameterError,
    VarianceDegeneracyError,
)
from .core.registry import create_correlation_model, register_correlation_model
from .core.specs import AreConfig, DiscreteUniformSizes, EmpiricalSizes, ModelSpec, SimConfig
from .data import ingest_cluster_period, ingest_individual, to_cluster_period_csv, validate_design
from .efficiency import are_estimate, are_tau
from .engine import (
    covariance_jacobian,
    expand_individual,
    fit,
    induced_covariance,
    limit_correlation,
    mean_score,
    residual_products,
)
from .inference import cic_cp, intervals, model_based, sandwich, sandwich_set, t_interval
from .models import (
    Adjustment,
    Analysis,
    AreResult,
    Correction,
    CorrelationParams,
    CorrelationStructure,
    DesignInfo,
    ExperimentReport,
    FitResult,
    IntervalReport,
    LinkFunction,
    SandwichSet,
    TrialData,
)
from .oracle import run_oracle
from .simulation import (
    preset,
    qaqish_sample,
    run_experiment,
    run_sweep,
    simulate_trial,
    staircase,
)
from .structures import ed_update, ne_update

__all__ = [
    "Adjustment",
    "Analysis",
    "AreConfig",
    "AreResult",
    "Correction",
    "CorrelationModel",
    "CorrelationParams",
    "CorrelationStructure",
    "CorrelationUpdate",
    "DegreesOfFreedomError",
    "DesignError",
    "DesignInfo",
    "DiscreteUniformSizes",
    "EmpiricalSizes",
    "ExperimentReport",
    "FitResult",
    "GeneratorFeasibilityError",
    "InfeasibleParametersError",
    "InputError",
    "IntegrityError",
    "IntervalReport",
    "LeverageDegeneracyError",
    "LinkFunction",
    "ModelSpec",
    "NonConvergenceError",
    "NumericalConditioningError",
    "OracleScaleError",
    "SandwichSet",
    "SchemaError",
    "Settings",
    "SimConfig",
    "SteppedWedgeError",
    "TrialAnalyzer",
    "TrialData",
    "UndefinedLimitError",
    "UnidentifiedParameterError",
    "VarianceDegeneracyError",
    "are_estimate",
    "are_tau",
    "cic_cp",
    "compare_structures",
    "configure_logging",
    "covariance_jacobian",
    "create_correlation_model",
    "ed_update",
    "expand_individual",
    "fit",
    "induced_covariance",
    "ingest_cluster_period",
    "ingest_individual",
    "intervals",
    "limit_correlation",
    "load_settings",
    "mean_score",
    "model_based",
    "ne_update",
    "preset",
    "qaqish_sample",
    "register_correlation_model",
    "residual_products",
    "run_experiment",
    "run_oracle",
    "run_sweep",
    "sandwich",
    "sandwich_set",
    "simulate_trial",
    "staircase",
    "structures",
    "t_interval",
    "to_cluster_period_csv",
    "validate_design",
]
