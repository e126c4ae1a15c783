"""Seed derivation and seeded sampling primitives.

Every stochastic stage draws from its own labelled stream derived from a
single master seed, so results never depend on scheduling or worker count.
"""
from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numba
import numpy as np

MASK64 = (1 << 64) - 1
DEFAULT_SEED = 42

T = TypeVar("T")
R = TypeVar("R")


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _label_digest(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest(), "little")


def derive_seed(master_seed: int, stream_label: str) -> int:
    """Derive a 64-bit seed for ``stream_label`` under ``master_seed``.

    The master seed is passed through one splitmix64 round, xor-ed with an
    8-byte BLAKE2b digest of the label, and mixed again.
    """
    return _splitmix64(_splitmix64(int(master_seed) & MASK64) ^ _label_digest(stream_label))


def make_rng(seed: int) -> np.random.Generator:
    """Seeded 64-bit generator (PCG64) for one stream."""
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


def stream(master_seed: int, stream_label: str) -> np.random.Generator:
    return make_rng(derive_seed(master_seed, stream_label))


@numba.njit(nogil=True, cache=True)
def _fisher_yates(values, rng):
    for i in range(values.shape[0] - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        if j > i:  # guards the measure-zero u == 1.0 rounding case
            j = i
        tmp = values[i]
        values[i] = values[j]
        values[j] = tmp
    return values


def permute(values, seed: int | np.random.Generator) -> np.ndarray:
    """Return a Fisher-Yates shuffled copy of ``values``; the input is untouched."""
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    out = np.array(values, copy=True)
    if out.ndim != 1:
        raise ValueError("permute expects a 1-D sequence")
    if out.size <= 1:
        return out
    if out.dtype.kind in "biuf":
        return _fisher_yates(out, rng)
    # object / string arrays: shuffle an index vector instead
    order = _fisher_yates(np.arange(out.size), rng)
    return out[order]


def sample_gaussian(n: int, mean: float = 0.0, std: float = 1.0,
                    seed: int | np.random.Generator = DEFAULT_SEED) -> np.ndarray:
    """Draw ``n`` normal variates with the Box-Muller transform."""
    if std < 0:
        raise ValueError(f"std must be non-negative, got {std}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if std == 0:
        return np.full(n, float(mean))
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    half = (n + 1) // 2
    u1 = rng.random(half)
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log1p(-u1))  # log(1 - u1), u1 in [0, 1)
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * half)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return mean + std * z[:n]


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Map ``fn`` over ``items`` preserving input order.

    Workers must not share generators; callers derive a stream per item.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def chunked(seq: Sequence[T], size: int) -> Iterable[Sequence[T]]:
    for start in range(0, len(seq), size):
        yield seq[start:start + size]
