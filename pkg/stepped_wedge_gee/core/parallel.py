"""Ordered parallel maps and counter-based random streams for replicate loops."""

from __future__ import annotations

from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from numpy.random import Generator, Philox, SeedSequence

T = TypeVar("T")
R = TypeVar("R")


def replicate_generator(seed: int, replicate: int, stream: int = 0) -> Generator:
    """Independent generator for ``(seed, replicate, stream)``; unaffected by evaluation order."""

    return Generator(Philox(SeedSequence(seed, spawn_key=(replicate, stream))))


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Apply ``func`` to every item, returning results in input order."""

    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
