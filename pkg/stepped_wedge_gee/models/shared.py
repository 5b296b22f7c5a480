"""Enumerations shared by the engine, inference, and CLI layers."""

from __future__ import annotations

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11: equivalent backport of enum.StrEnum
    from enum import Enum

    class StrEnum(str, Enum):
        """Backport of :class:`enum.StrEnum` (``str()``/``format()`` yield the value)."""

        def __str__(self) -> str:
            return str(self.value)

        def __format__(self, format_spec: str) -> str:
            return str.__format__(str(self.value), format_spec)

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()


class LinkFunction(StrEnum):
    """Link functions for the marginal mean model ``g(mu_ij) = beta_j + X_ij * delta``."""

    LOGIT = "logit"
    LOG = "log"
    IDENTITY = "identity"


class CorrelationStructure(StrEnum):
    """Individual-level working correlation structures.

    The values double as CLI spellings; :meth:`parse` also accepts the short aliases.
    """

    INDEPENDENCE = "independence"
    EXCHANGEABLE = "exchangeable"
    NESTED_EXCHANGEABLE = "nested-exch"
    EXPONENTIAL_DECAY = "exp-decay"

    @classmethod
    def parse(cls, value: str) -> "CorrelationStructure":
        key = value.strip().lower()
        aliases = {
            "ind": cls.INDEPENDENCE,
            "exch": cls.EXCHANGEABLE,
            "ne": cls.NESTED_EXCHANGEABLE,
            "nested-exchangeable": cls.NESTED_EXCHANGEABLE,
            "ed": cls.EXPONENTIAL_DECAY,
            "exponential-decay": cls.EXPONENTIAL_DECAY,
        }
        if key in aliases:
            return aliases[key]
        return cls(key)


class Adjustment(StrEnum):
    """Residual adjustment for the correlation estimating equations."""

    UEE = "uee"
    MAEE = "maee"


class Correction(StrEnum):
    """Variance estimators: model-based plus the BC0-BC3 sandwich family."""

    MODEL = "model"
    BC0 = "bc0"
    BC1 = "bc1"
    BC2 = "bc2"
    BC3 = "bc3"

    @classmethod
    def from_digit(cls, digit: str) -> "Correction":
        try:
            return cls(f"bc{int(digit)}")
        except ValueError as exc:
            raise ValueError(f"Bias correction must be one of 0, 1, 2, 3; got {digit!r}") from exc


SANDWICH_CORRECTIONS: tuple[Correction, ...] = (
    Correction.BC0,
    Correction.BC1,
    Correction.BC2,
    Correction.BC3,
)
