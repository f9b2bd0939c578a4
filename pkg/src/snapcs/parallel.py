"""Order-preserving thread map.

Results always come back in input order, so any reduction done by the
caller is independent of the thread count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

_default_threads = 1


def set_default_threads(n: int) -> None:
    global _default_threads
    _default_threads = max(1, int(n))


def default_threads() -> int:
    return _default_threads


def ordered_map(fn, items, threads=None):
    threads = _default_threads if threads is None else max(1, int(threads))
    items = list(items)
    if threads == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
