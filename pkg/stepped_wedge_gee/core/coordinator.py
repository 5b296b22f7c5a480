"""High-level facade binding fitting, inference and structure comparison."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Sequence
from dataclasses import replace

from ..config.settings import DEFAULT_ZETA
from ..data.ingest import validate_design
from ..engine.gee import fit as gee_fit
from ..inference.cic import cic_cp
from ..inference.intervals import DEFAULT_CONFIDENCE, intervals
from ..inference.sandwich import sandwich_set
from ..models.results import Analysis, FitResult, IntervalReport, SandwichSet, StructureScore
from ..models.shared import SANDWICH_CORRECTIONS, Correction, CorrelationStructure
from ..models.trial import TrialData
from .errors import SteppedWedgeError
from .specs import ModelSpec

logger = logging.getLogger(__name__)

Fitter = Callable[[TrialData, ModelSpec], FitResult]

COMPARED_STRUCTURES = (
    CorrelationStructure.EXCHANGEABLE,
    CorrelationStructure.NESTED_EXCHANGEABLE,
    CorrelationStructure.EXPONENTIAL_DECAY,
)
# Corrections always needed: BC1 and BC2 feed the default report, BC1 feeds the CIC.
REPORTING_CORRECTIONS = (Correction.BC1, Correction.BC2)


class TrialAnalyzer:
    """Entry point consumed by SDK/CLI callers."""

    def __init__(
        self,
        *,
        fitter: Fitter = gee_fit,
        zeta: tuple[float, float] = (DEFAULT_ZETA, DEFAULT_ZETA),
        strict_uee: bool = False,
    ) -> None:
        self._fitter = fitter
        self._zeta = zeta
        self._strict_uee = strict_uee

    # Fitting -----------------------------------------------------------
    def fit(self, data: TrialData, spec: ModelSpec | None = None) -> FitResult:
        return self._fitter(data, spec or ModelSpec())

    # Inference ---------------------------------------------------------
    def covariances(
        self, result: FitResult, corrections: Iterable[Correction] = SANDWICH_CORRECTIONS
    ) -> SandwichSet:
        return sandwich_set(result, corrections, zeta=self._zeta, strict_uee=self._strict_uee)

    def intervals(
        self,
        result: FitResult,
        covariances: SandwichSet,
        correction: Correction | None = None,
        confidence: float = DEFAULT_CONFIDENCE,
    ) -> IntervalReport:
        return intervals(result, covariances, correction, confidence)

    def cic(self, result: FitResult, covariances: SandwichSet | None = None) -> float:
        return cic_cp(result, covariances)

    def analyze(
        self,
        data: TrialData,
        spec: ModelSpec | None = None,
        corrections: Sequence[Correction] = SANDWICH_CORRECTIONS,
        confidence: float = DEFAULT_CONFIDENCE,
    ) -> Analysis:
        """Fit, then report every requested correction plus the default SE pairing and CIC."""

        design = validate_design(data)
        result = self.fit(data, spec)
        wanted = [c for c in corrections if c is not Correction.MODEL]
        computed = list(dict.fromkeys([*wanted, *REPORTING_CORRECTIONS]))
        covariances = self.covariances(result, computed)
        shown = list(dict.fromkeys([Correction.MODEL, *wanted]))
        return Analysis(
            fit=result,
            covariances=covariances,
            intervals=self.intervals(result, covariances, None, confidence),
            by_correction={c: self.intervals(result, covariances, c, confidence) for c in shown},
            cic=self.cic(result, covariances),
            design_warnings=design.warnings,
            is_stepped_wedge=design.is_stepped_wedge,
        )

    # Comparison --------------------------------------------------------
    def compare_structures(
        self,
        data: TrialData,
        structures: Sequence[CorrelationStructure] = COMPARED_STRUCTURES,
        spec: ModelSpec | None = None,
    ) -> tuple[StructureScore, ...]:
        """Fit each working structure and rank by CIC (smallest first; failures last)."""

        base = spec or ModelSpec()
        scores = []
        for structure in structures:
            candidate = replace(base, structure=structure, tie_alpha1=False, fixed_rho=None)
            try:
                result = self.fit(data, candidate)
                scores.append(
                    StructureScore(
                        structure=str(structure),
                        cic=self.cic(result),
                        converged=result.converged,
                        params=result.params.as_dict(),
                        delta=result.delta,
                    )
                )
            except SteppedWedgeError as exc:
                logger.warning("structure %s could not be fitted: %s", structure, exc)
                scores.append(StructureScore(str(structure), None, False, {}, None, str(exc)))
        return tuple(sorted(scores, key=lambda s: (s.cic is None, s.cic or 0.0)))


def compare_structures(
    data: TrialData,
    structures: Sequence[CorrelationStructure] = COMPARED_STRUCTURES,
    spec: ModelSpec | None = None,
) -> tuple[StructureScore, ...]:
    return TrialAnalyzer().compare_structures(data, structures, spec)
