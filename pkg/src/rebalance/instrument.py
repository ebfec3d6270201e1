"""Counters for the expensive building blocks samplers are made of.

Tracks k-NN model builds, k-NN and radius queries, k-means fits and
regression fits, so a timing run can report which components a sampler
leaned on.
"""

from __future__ import annotations

import contextlib
import threading
from collections import Counter
from typing import Iterator

_lock = threading.Lock()
_active: list[Counter] = []


def bump(name: str, amount: int = 1) -> None:
    if not _active:
        return
    with _lock:
        for counter in _active:
            counter[name] += amount


@contextlib.contextmanager
def count_components() -> Iterator[Counter]:
    """Collect component counts for the enclosed block."""
    counter: Counter = Counter()
    with _lock:
        _active.append(counter)
    try:
        yield counter
    finally:
        with _lock:
            _active.remove(counter)
