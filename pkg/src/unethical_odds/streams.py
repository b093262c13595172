"""Counter-based random substreams.

Every random quantity in the package is addressed by ``(seed, stream, index)``.
A ``Philox`` generator is keyed from a :class:`numpy.random.SeedSequence`
whose spawn key holds the stream tag and the index, so replicate ``r`` sees the
same numbers regardless of how work is split across workers or in which
order blocks are evaluated.

Long runs of uniforms (antithetic Monte Carlo, bootstrap) are drawn in fixed
blocks of :data:`BLOCK` values; block ``b`` has its own generator.
"""
from __future__ import annotations

import zlib

import numpy as np

BLOCK = 8192


def _tag(stream: str | int) -> int:
    if isinstance(stream, int):
        return stream
    return zlib.crc32(stream.encode("utf-8"))


def generator(seed: int, stream: str | int, index: int = 0) -> np.random.Generator:
    """Generator for substream ``index`` of ``stream`` under ``seed``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_tag(stream), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def uniform_block(seed: int, stream: str | int, block: int) -> np.ndarray:
    """The ``block``-th block of :data:`BLOCK` uniforms on (0, 1)."""
    u = generator(seed, stream, block).random(BLOCK)
    # random() is on [0, 1); the only excluded value is exactly 0
    u[u == 0.0] = 2.0**-54
    return u


def uniforms(seed: int, stream: str | int, count: int, start: int = 0) -> np.ndarray:
    """Uniforms with global positions ``start .. start+count-1`` in ``stream``."""
    if count <= 0:
        return np.empty(0)
    first, last = start // BLOCK, (start + count - 1) // BLOCK
    parts = [uniform_block(seed, stream, b) for b in range(first, last + 1)]
    joined = np.concatenate(parts)
    offset = start - first * BLOCK
    return joined[offset : offset + count]
