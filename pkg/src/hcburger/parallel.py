"""Deterministic chunked execution over replica streams."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")


def chunk_ranges(total: int, chunk: int) -> list[tuple[int, int]]:
    return [(s, min(chunk, total - s)) for s in range(0, total, chunk)]


def map_chunks(fn: Callable[[int, int], T], total: int, threads: int = 1,
               chunk: int = 1 << 16) -> list[T]:
    """Apply fn(start, count) to consecutive replica ranges; results in range order.

    The compiled kernels release the GIL, so a thread pool gives real
    parallelism.  Each replica owns its stream, so the result does not depend
    on ``threads``.
    """
    ranges = chunk_ranges(total, chunk)
    if threads <= 1 or len(ranges) == 1:
        return [fn(s, n) for s, n in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))


def search_chunks(fn: Callable[[int, int], T], done: Callable[[Sequence[T]], bool],
                  limit: int, threads: int = 1, chunk: int = 1 << 16) -> list[T]:
    """Like map_chunks, but stop once ``done`` holds for the results so far.

    Chunks are dispatched in waves of ``threads``; the returned list is always
    a prefix of the full chunk sequence, so the outcome is thread-independent
    as long as ``done`` only looks at a prefix.
    """
    ranges = chunk_ranges(limit, chunk)
    out: list[T] = []
    wave = max(1, threads)
    pool = ThreadPoolExecutor(max_workers=wave) if wave > 1 else None
    try:
        for i in range(0, len(ranges), wave):
            batch = ranges[i : i + wave]
            if pool is None:
                res = [fn(*r) for r in batch]
            else:
                res = list(pool.map(lambda r: fn(*r), batch))
            for r in res:
                out.append(r)
                if done(out):
                    return out
    finally:
        if pool is not None:
            pool.shutdown()
    return out
