"""Shared helpers for manual comparisons against statsmodels."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
import sys
from typing import Iterable, Sequence

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from stepped_wedge_gee.core.specs import DiscreteUniformSizes, SimConfig
from stepped_wedge_gee.engine.covariance import individual_outcomes
from stepped_wedge_gee.models.correlation import CorrelationParams
from stepped_wedge_gee.models.trial import TrialData
from stepped_wedge_gee.simulation.generator import simulate_trial


@dataclass(slots=True)
class TrialCase:
    name: str
    config: SimConfig

    def trial(self) -> TrialData:
        return simulate_trial(self.config, 0)


CASES: Sequence[TrialCase] = (
    TrialCase(
        name="ne-small",
        config=SimConfig(
            truth=CorrelationParams.nested_exchangeable(0.03, 0.015),
            sizes=DiscreteUniformSizes(20, 40),
            replicates=1,
            seed=1,
        ),
    ),
    TrialCase(
        name="ne-large",
        config=SimConfig(
            truth=CorrelationParams.nested_exchangeable(0.1, 0.05),
            sizes=DiscreteUniformSizes(20, 40),
            replicates=1,
            seed=2,
        ),
    ),
    TrialCase(
        name="exch",
        config=SimConfig(
            clusters=24,
            truth=CorrelationParams.exchangeable(0.05),
            sizes=DiscreteUniformSizes(10, 30),
            replicates=1,
            seed=3,
        ),
    ),
)


def iter_cases(targets: Iterable[str] | None = None) -> Iterable[TrialCase]:
    if not targets:
        yield from CASES
        return
    selected = {t.lower() for t in targets}
    for case in CASES:
        if case.name.lower() in selected:
            yield case


def individual_frame(data: TrialData) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Participant-level outcomes, design rows ``(e_j, X_ij)`` and cluster labels."""

    outcomes, rows, groups = [], [], []
    for i in range(data.n_clusters):
        y = individual_outcomes(data, i)
        periods = np.repeat(np.arange(data.n_periods), data.sizes[i])
        z = np.zeros((periods.size, data.n_periods + 1))
        z[np.arange(periods.size), periods] = 1.0
        z[:, -1] = data.treatment[i, periods]
        outcomes.append(y)
        rows.append(z)
        groups.append(np.full(periods.size, i))
    return np.concatenate(outcomes), np.vstack(rows), np.concatenate(groups)


def print_rows(label: str, names: Sequence[str], values: Sequence[float]) -> None:
    print(label)
    for name, value in zip(names, values):
        print(f"  {name:>10} {value: .8f}")
