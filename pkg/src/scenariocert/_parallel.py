"""Order-preserving map over a process pool."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def ordered_map(fn, jobs, workers=1):
    """``[fn(j) for j in jobs]``, optionally spread over ``workers`` processes.

    Results come back in job order, so callers reduce them deterministically
    regardless of the worker count.
    """
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
