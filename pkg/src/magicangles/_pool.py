"""Fork-join helper for independent evaluations over parameter grids."""

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "MAGICANGLES_THREADS"


def default_threads():
    """Thread count from ``MAGICANGLES_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def pmap(fn, items, threads=1):
    """``[fn(x) for x in items]``, evaluated by up to ``threads`` workers; order is preserved."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
