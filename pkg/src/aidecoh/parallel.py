"""Bounded worker pool with an indexed, order-independent merge."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

THREADS_ENV = "AIDECOH_THREADS"


def resolve_workers(threads: int | None = None) -> int:
    """Explicit value, else the environment override, else the CPU count."""
    if threads is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return int(threads)


def chunk_bounds(n: int, chunk: int) -> list[tuple[int, int]]:
    return [(a, min(n, a + chunk)) for a in range(0, n, chunk)]


def map_indexed(fn: Callable[[int, int], np.ndarray], n: int, workers: int | None = None,
                chunk: int = 256) -> np.ndarray:
    """Evaluate fn(start, stop) -> rows for every index chunk and stack in index order.

    Chunk boundaries do not depend on the worker count, and each row depends
    only on its own index, so the result is identical for any pool size.
    """
    bounds = chunk_bounds(n, chunk)
    if not bounds:
        return np.empty((0,))
    workers = resolve_workers(workers)
    if workers == 1 or len(bounds) == 1:
        parts = [fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(bounds))) as pool:
            parts = list(pool.map(lambda ab: fn(*ab), bounds))
    return np.concatenate(parts, axis=0)
