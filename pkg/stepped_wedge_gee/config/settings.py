"""Numerical constants and environment-derived defaults."""

from __future__ import annotations

import os
from dataclasses import dataclass
from datetime import datetime, timezone

THREADS_ENV = "SWGEE_THREADS"
LOG_LEVEL_ENV = "SWGEE_LOG_LEVEL"
SOURCE_DATE_EPOCH_ENV = "SOURCE_DATE_EPOCH"

# Mean-scale clamp applied before evaluating binomial variances.
MU_CLAMP = 1e-10
# Floor for eigenvalues of (I - H) before taking inverse square roots.
EIGEN_FLOOR = 1e-10
# Largest cluster size the individual-level expansion will materialize.
ORACLE_MAX_SIZE = 2000
DEFAULT_ZETA = 0.75
ED_INNER_TOLERANCE = 1e-10
ED_INNER_MAX_ITERATIONS = 100
MAX_STEP_HALVINGS = 10
# Correlation projection box.
ALPHA0_FLOOR = 1e-8
ALPHA0_CEILING = 0.999
# Conditional means within this distance of [0, 1] are treated as rounding.
GENERATOR_CLAMP = 1e-9
GENERATOR_MAX_REDRAWS = 100


@dataclass(frozen=True, slots=True)
class Settings:
    """Process-wide defaults resolved from the environment."""

    threads: int = 1
    log_level: str = "WARNING"

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer")


def load_settings(environ: dict[str, str] | None = None) -> Settings:
    env = os.environ if environ is None else environ
    raw_threads = env.get(THREADS_ENV, "1")
    try:
        threads = int(raw_threads)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw_threads!r}") from exc
    return Settings(threads=threads, log_level=env.get(LOG_LEVEL_ENV, "WARNING").upper())


def reproducible_now(environ: dict[str, str] | None = None) -> datetime:
    """Return the current UTC time, pinned by ``SOURCE_DATE_EPOCH`` when it is set."""

    env = os.environ if environ is None else environ
    epoch = env.get(SOURCE_DATE_EPOCH_ENV)
    if epoch:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    return datetime.now(timezone.utc)
