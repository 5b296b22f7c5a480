"""Runtime configuration and logging setup."""

from .logging import configure_logging
from .settings import Settings, load_settings

__all__ = ["Settings", "configure_logging", "load_settings"]
