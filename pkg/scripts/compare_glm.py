"""Compare working-independence fits against statsmodels binomial GLMs."""
from __future__ import annotations

from typing import Iterable

import sys

import numpy as np
import statsmodels.api as sm  # type: ignore

from compare_utils import individual_frame, iter_cases, print_rows
from stepped_wedge_gee.core.specs import ModelSpec
from stepped_wedge_gee.engine.gee import fit
from stepped_wedge_gee.inference.sandwich import sandwich
from stepped_wedge_gee.models.shared import Correction, CorrelationStructure


def main(targets: Iterable[str] | None = None) -> None:
    spec = ModelSpec(structure=CorrelationStructure.INDEPENDENCE)
    for case in iter_cases(targets):
        print(f"\n=== {case.name} independence GLM ===")
        data = case.trial()
        try:
            result = fit(data, spec)
            print_rows("cluster-period", result.theta_names, result.theta)
            print_rows("  robust se", result.theta_names, np.sqrt(np.diag(sandwich(result, Correction.BC0))))
        except Exception as exc:  # pragma: no cover - manual script
            print(f"fit error: {exc}")
            continue

        y, z, groups = individual_frame(data)
        try:
            reference = sm.GLM(y, z, family=sm.families.Binomial()).fit(
                cov_type="cluster", cov_kwds={"groups": groups, "use_correction": False}
            )
            print_rows("statsmodels", result.theta_names, reference.params)
            print_rows("  robust se", result.theta_names, reference.bse)
            print(f"max |diff| = {np.max(np.abs(reference.params - result.theta)):.3e}")
        except Exception as exc:  # pragma: no cover - manual script
            print(f"statsmodels error: {exc}")


if __name__ == "__main__":  # pragma: no cover - manual script
    main(sys.argv[1:] or None)
