"""Worker-count setting and an order-preserving chunked map."""

from __future__ import annotations

import contextlib
import contextvars
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_workers: contextvars.ContextVar[int | None] = contextvars.ContextVar(
    "rebalance_workers", default=None)


def worker_count() -> int:
    """Active worker count: explicit setting, else REBALANCE_THREADS, else cores."""
    n = _workers.get()
    if n is None:
        env = os.environ.get("REBALANCE_THREADS")
        n = int(env) if env else (os.cpu_count() or 1)
    return max(1, n)


@contextlib.contextmanager
def workers(n: int | None) -> Iterator[None]:
    token = _workers.set(None if n is None else max(1, int(n)))
    try:
        yield
    finally:
        _workers.reset(token)


def chunk_bounds(n: int, chunk: int) -> list[tuple[int, int]]:
    return [(s, min(s + chunk, n)) for s in range(0, n, max(1, chunk))]


def pmap(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Map preserving input order; threads only when more than one worker."""
    n = worker_count()
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
