"""Treatment rollout matrices."""

from __future__ import annotations

import numpy as np


def staircase(clusters: int, periods: int) -> np.ndarray:
    """Stepped-wedge treatment matrix: control in period one, then one wave per later period.

    Clusters are split into ``periods - 1`` consecutive waves as evenly as possible (earlier
    waves take the extra cluster when the split is uneven); wave ``w`` starts treatment in
    period ``w + 2``.
    """

    if clusters < 1 or periods < 2:
        raise ValueError("a staircase needs at least one cluster and two periods")
    treatment = np.zeros((clusters, periods), dtype=np.int64)
    for wave, members in enumerate(np.array_split(np.arange(clusters), periods - 1)):
        treatment[members, wave + 1 :] = 1
    return treatment
