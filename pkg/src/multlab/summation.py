"""Deterministic blocked summation and the thread pool used by the heavy loops.

Every long sum in the package goes through :func:`block_sums` followed by
:func:`tree_sum`.  Blocks are aligned to absolute index 1 and have a fixed
size, so a sum over ``[1, N]`` is bit-identical whether it was produced in one
pass, in parallel chunks, or as a prefix of a longer series.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

import numpy as np

BLOCK = 4096
# chunks handed to worker threads; must stay a multiple of BLOCK
CHUNK = 256 * BLOCK

T = TypeVar("T")
R = TypeVar("R")

_threads = 1


def get_threads() -> int:
    return _threads


def set_threads(n: int | None) -> None:
    """Set the worker count used by :func:`ordered_map` (``None`` = all cores)."""
    global _threads
    if n is None:
        n = os.cpu_count() or 1
    if n < 1:
        raise ValueError("thread count must be positive")
    _threads = int(n)


@contextmanager
def threads(n: int | None) -> Iterator[None]:
    old = _threads
    set_threads(n)
    try:
        yield
    finally:
        set_threads(old)


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Map ``fn`` over ``items`` keeping input order, threaded when enabled."""
    items = list(items)
    if _threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=_threads) as pool:
        return list(pool.map(fn, items))


def block_sums(x: np.ndarray) -> np.ndarray:
    """Per-block sums of ``x``; the final partial block is zero-padded."""
    x = np.asarray(x)
    n = x.shape[0]
    if n == 0:
        return np.zeros(0, dtype=x.dtype)
    full, rem = divmod(n, BLOCK)
    if rem:
        pad = np.zeros(BLOCK - rem, dtype=x.dtype)
        x = np.concatenate([x, pad])
        full += 1
    return x.reshape(full, BLOCK).sum(axis=1)


def tree_sum(parts: Sequence | np.ndarray):
    """Pairwise (tree) reduction with a fixed pairing order."""
    a = np.asarray(parts)
    if a.shape[0] == 0:
        return a.dtype.type(0)
    while a.shape[0] > 1:
        if a.shape[0] % 2:
            a = np.concatenate([a, np.zeros(1, dtype=a.dtype)])
        a = a[0::2] + a[1::2]
    return a[0]


def chunk_bounds(lo: int, hi: int) -> list[tuple[int, int]]:
    """Split the inclusive range ``[lo, hi]`` at multiples of CHUNK measured from 1.

    ``lo`` must be 1 or one more than a multiple of BLOCK so that block
    alignment is preserved.
    """
    if (lo - 1) % BLOCK:
        raise ValueError("chunking must start on a block boundary")
    out = []
    a = lo
    while a <= hi:
        b = min(hi, a + CHUNK - 1)
        out.append((a, b))
        a = b + 1
    return out


def blocked_range_sums(
    term: Callable[[int, int], np.ndarray], N: int, lo: int = 1
) -> np.ndarray:
    """Block sums of ``term(a, b)`` (values for n in ``[a, b]``) over ``[lo, N]``.

    Chunks are evaluated through :func:`ordered_map`; the returned array is the
    in-order concatenation of their block sums.
    """
    if N < lo:
        return np.zeros(0, dtype=np.complex128)
    parts = ordered_map(lambda ab: block_sums(term(ab[0], ab[1])), chunk_bounds(lo, N))
    return np.concatenate(parts)
