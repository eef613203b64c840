"""Deterministic worker-thread helpers.

Rendering and analysis may fan out over independent work items (channel
lanes, HRIR lanes, analysis blocks).  Results are always reduced in item
order, so the output is bit-identical for any worker count.  The default
worker count comes from the GRAINFIELD_THREADS environment variable and
falls back to 1.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_ENV_VAR = "GRAINFIELD_THREADS"


def worker_count(threads: int | None = None) -> int:
    """Resolve the effective worker count (argument > env var > 1)."""
    if threads is None:
        raw = os.environ.get(_ENV_VAR, "")
        try:
            threads = int(raw) if raw else 1
        except ValueError:
            threads = 1
    return max(1, threads)


def ordered_map(
    fn: Callable[[T], R],
    items: Sequence[T] | Iterable[T],
    threads: int | None = None,
) -> list[R]:
    """Map ``fn`` over ``items``, returning results in input order.

    With one worker this is a plain loop; with more workers a thread pool
    is used.  numpy releases the GIL in FFT/BLAS kernels, so threads give
    real speedups on the rendering and analysis hot paths.
    """
    items = list(items)
    n = worker_count(threads)
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
