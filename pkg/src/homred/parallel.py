"""Optional thread fan-out for independent slice computations.

All heavy operations are pure; HOMRED_THREADS > 1 turns per-slice loops into
a thread map.  Results are collected in input order, so output stays
deterministic regardless of the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    try:
        n = int(os.environ.get("HOMRED_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def map_slices(fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
