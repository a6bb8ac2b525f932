"""Small shared helpers: chunked parallel maps over time grids."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def parallel_chunk_map(fn, values: np.ndarray, max_workers: int = 1) -> np.ndarray:
    """Apply ``fn`` (array -> array) to ``values`` in index order.

    With max_workers > 1 the input is split into contiguous chunks evaluated on
    a thread pool; results are concatenated in input order, so scheduling never
    changes the output.  ``fn`` must be pure.
    """
    values = np.asarray(values)
    if max_workers <= 1 or len(values) <= 1:
        return np.asarray(fn(values))
    n_chunks = min(max_workers, len(values))
    chunks = np.array_split(values, n_chunks)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate([np.asarray(p) for p in parts])
