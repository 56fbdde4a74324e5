"""Splittable seeding.

Every replica draws from its own generator derived from ``(master, stream, index)``,
so replica ``i`` is the same no matter how many replicas run or on how many threads.
"""
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def stream_id(name: str) -> int:
    """Stable integer tag for a named random stream."""
    return zlib.crc32(name.encode("utf-8"))


def derive_seed(master: int, *key: int) -> int:
    """64-bit seed for the replica identified by ``key``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def map_ordered(fn, items, threads: int = 1):
    """``list(map(fn, items))`` on a thread pool; output order follows input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
