"""Run manifests and deterministic JSON emission."""

from __future__ import annotations

import hashlib
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..config.settings import reproducible_now

EXCLUDED_OPTIONS = frozenset({"threads", "pretty", "output", "records_csv"})


def sha256_digest(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True, slots=True)
class RunManifest:
    """Provenance embedded in every JSON document the CLI writes."""

    subcommand: str
    options: dict[str, Any]
    digests: dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    version: str = ""
    timestamp: str = ""

    def as_dict(self) -> dict[str, Any]:
        return {
            "subcommand": self.subcommand,
            "options": dict(self.options),
            "input_digests": dict(self.digests),
            "seed": self.seed,
            "version": self.version,
            "timestamp": self.timestamp,
        }


def build_manifest(
    subcommand: str,
    options: Mapping[str, Any],
    inputs: Mapping[str, bytes] | None = None,
    seed: int | None = None,
    environ: Mapping[str, str] | None = None,
) -> RunManifest:
    """Resolve options (worker counts excluded) and digest every input payload."""

    from .. import __version__

    resolved = {key: value for key, value in options.items() if key not in EXCLUDED_OPTIONS}
    return RunManifest(
        subcommand=subcommand,
        options=resolved,
        digests={name: sha256_digest(payload) for name, payload in (inputs or {}).items()},
        seed=seed,
        version=__version__,
        timestamp=reproducible_now(None if environ is None else dict(environ)).isoformat(),
    )


def _plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dump_json(payload: Mapping[str, Any]) -> str:
    """Sorted, indented JSON with non-finite numbers written as ``null``."""

    return json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=False)
