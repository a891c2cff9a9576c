"""Order-preserving trial execution over a thread pool.

The compiled solver releases the GIL, so threads give real concurrency;
results always come back in submission order.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("PERCOFLOW_THREADS", "1") or 1)
    return max(1, int(threads))


def run_ordered(fn, items, threads: int | None = None) -> list:
    items = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
