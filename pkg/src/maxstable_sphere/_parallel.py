"""Deterministic chunked map over replicate ranges.

Each chunk only sees its own replicate indices and RNG keys are a pure
function of those indices, so results do not depend on ``n_jobs``.
"""

from joblib import Parallel, delayed, effective_n_jobs


def chunk_bounds(start, stop, n_chunks):
    n_chunks = max(1, min(n_chunks, stop - start))
    size, extra = divmod(stop - start, n_chunks)
    bounds, lo = [], start
    for i in range(n_chunks):
        hi = lo + size + (i < extra)
        bounds.append((lo, hi))
        lo = hi
    return bounds


def map_ranges(fn, start, stop, n_jobs=1):
    """Concatenate ``fn(lo, hi)`` over a split of ``[start, stop)`` in order."""
    if n_jobs is None or n_jobs == 1 or stop - start < 2:
        return list(fn(start, stop))
    workers = effective_n_jobs(n_jobs)
    pieces = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(fn)(lo, hi) for lo, hi in chunk_bounds(start, stop, 4 * workers))
    out = []
    for p in pieces:
        out.extend(p)
    return out
