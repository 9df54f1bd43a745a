from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

ENV_THREADS = "OFFSETRAD_THREADS"


def thread_count() -> int:
    """Worker cap from OFFSETRAD_THREADS; defaults to the available cores."""
    raw = os.environ.get(ENV_THREADS)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"{ENV_THREADS} must be an integer, got {raw!r}") from None
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def trial_seeds(seed: int, key: int, trials: int) -> list[np.random.SeedSequence]:
    """Independent per-trial seeds keyed by (seed, key, trial index)."""
    return [np.random.SeedSequence(entropy=seed, spawn_key=(key, t)) for t in range(trials)]


def map_trials(fn, items) -> list:
    """``[fn(x) for x in items]``, possibly threaded; results keep input order."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
