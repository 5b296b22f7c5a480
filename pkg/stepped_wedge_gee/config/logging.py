"""Central logging initialization."""

from __future__ import annotations

import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | int = "WARNING") -> None:
    """Route package logs to stderr so stdout stays reserved for JSON output.

    Calling it again adjusts the level and re-targets the handler at the current
    ``sys.stderr``.
    """

    if isinstance(level, str):
        resolved = logging.getLevelName(level.upper())
        if not isinstance(resolved, int):
            raise ValueError(f"Unknown log level {level!r}")
        level = resolved
    root = logging.getLogger("stepped_wedge_gee")
    root.setLevel(level)
    for handler in root.handlers:
        if getattr(handler, "_swgee", False):
            handler.setStream(sys.stderr)
            return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._swgee = True  # type: ignore[attr-defined]
    root.addHandler(handler)
