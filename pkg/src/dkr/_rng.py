"""Counter-based random streams keyed by integer tuples."""

from __future__ import annotations

from typing import Iterable, Union

import numpy as np

SeedKey = Union[int, Iterable[int]]


def _flatten(key: SeedKey) -> list:
    if isinstance(key, (int, np.integer)):
        return [int(key)]
    out = []
    for part in key:
        out.extend(_flatten(part))
    return out


def stream(key: SeedKey, *extra: int) -> np.random.Generator:
    """Philox generator for the key ``(key..., extra...)``.

    Keys are order-sensitive and independent of call order, so a cell's
    stream can be rebuilt from its coordinates alone.
    """
    words = _flatten(key) + [int(e) for e in extra]
    if any(w < 0 for w in words):
        raise ValueError("seed components must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))
