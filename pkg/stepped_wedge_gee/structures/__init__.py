"""Working correlation structures; importing the package registers all of them."""

from . import exchangeable, exponential_decay, independence, nested_exchangeable
from .base import MomentSums, moment_sums
from .exponential_decay import ed_update
from .nested_exchangeable import ne_update

__all__ = [
    "MomentSums",
    "ed_update",
    "exchangeable",
    "exponential_decay",
    "independence",
    "moment_sums",
    "ne_update",
    "nested_exchangeable",
]
