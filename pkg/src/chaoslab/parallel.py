"""Replication-parallel execution with scheduling-independent results.

Workers receive a picklable payload plus the per-replication stream, and
results are collected in replication order, so output is bit-identical
for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from .rng import RngStream


def default_threads() -> int:
    env = os.environ.get("CHAOSLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def replication_map(worker, payload, n: int, rng: RngStream, threads: int = 1) -> list:
    """Run ``worker(payload, rng.replication(i))`` for i in 0..n-1, in order."""
    streams = [rng.replication(i) for i in range(n)]
    if threads is None or threads <= 1 or n < 4:
        return [worker(payload, s) for s in streams]
    chunk = max(1, n // (threads * 8))
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(partial(worker, payload), streams, chunksize=chunk))
