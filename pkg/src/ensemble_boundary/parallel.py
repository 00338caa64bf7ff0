"""Order-preserving task fan-out and per-cell seed derivation."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

WORKERS_ENV = "ENSEMBLE_BOUNDARY_WORKERS"


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


def cell_seed(seed: int, index: int) -> int:
    """64-bit seed for scan cell ``index``, a pure function of (seed, index)."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def map_ordered(fn, tasks, workers: int = 1) -> list:
    """[fn(t) for t in tasks], optionally in a process pool; results keep task order."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))
