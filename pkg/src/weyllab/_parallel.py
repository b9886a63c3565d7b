"""Seeded sampling and thread-count-independent chunked execution."""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "WEYLLAB_THREADS"
# Work is always cut into chunks of this many items, whatever the thread
# count, so per-item results and their reduction order never depend on it.
CHUNK = 64


def default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def uniform_samples(seed, count, dim=1):
    """``count`` x ``dim`` uniforms on [0, 1) from a Philox stream keyed by ``seed``.

    Row ``i`` depends only on ``(seed, i)``.
    """
    gen = np.random.Generator(np.random.Philox(key=int(seed)))
    return gen.random((count, dim))


def run_chunked(func, count, threads=None):
    """Call ``func(start, stop)`` over fixed chunks of ``range(count)``.

    Chunks are dispatched to a pool of ``threads`` workers; results are
    returned in chunk order.
    """
    threads = default_threads() if threads is None else max(1, int(threads))
    bounds = [(s, min(s + CHUNK, count)) for s in range(0, count, CHUNK)]
    if threads == 1 or len(bounds) <= 1:
        return [func(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: func(*ab), bounds))


def mean_stderr(values):
    """Sample mean and standard error; stderr is 0 for a single sample."""
    values = np.asarray(values, dtype=float)
    if np.all(values == values[0]):
        return float(values[0]), 0.0
    mean = float(np.mean(values))
    return mean, float(np.std(values, ddof=1) / np.sqrt(values.size))
