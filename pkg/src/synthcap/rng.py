"""Deterministic integer hashing and random streams for the toy encoders.

Everything here is fixed-sequence by construction so that encoded vectors
are reproducible bit-for-bit across platforms: FNV-1a (64-bit) hashes
token bytes, splitmix64 expands a 64-bit state into a value stream, and a
Box-Muller transform turns that stream into standard normals.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

_MASK64 = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def fnv1a64(data: bytes) -> int:
    """FNV-1a hash of ``data``, 64-bit."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def splitmix64_stream(seed: int) -> Iterator[int]:
    """Infinite stream of splitmix64 outputs starting from ``seed``."""
    state = seed & _MASK64
    while True:
        state = (state + _SPLITMIX_GAMMA) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
        yield z


def uniform_signed(seed: int, count: int) -> np.ndarray:
    """``count`` values in [-1, 1) from the top 24 bits of a splitmix64 stream.

    Each 64-bit output contributes its top 24 bits u, mapped as
    u / 2**23 - 1.0, which spans [-1, 1) on a uniform lattice.
    """
    stream = splitmix64_stream(seed)
    out = np.empty(count, dtype=np.float64)
    for i in range(count):
        u = next(stream) >> 40
        out[i] = u / float(1 << 23) - 1.0
    return out


def standard_normals(seed: int, count: int) -> np.ndarray:
    """``count`` standard normals via Box-Muller over a splitmix64 stream.

    Consecutive stream outputs r1, r2 map to u1 = (r1>>11 + 1) * 2**-53
    in (0, 1] and u2 = (r2>>11) * 2**-53 in [0, 1); each pair yields
    sqrt(-2 ln u1) * (cos, sin)(2 pi u2).  Odd counts drop the last sine.
    """
    stream = splitmix64_stream(seed)
    out = np.empty(count + (count & 1), dtype=np.float64)
    scale = 2.0 ** -53
    for i in range(0, len(out), 2):
        u1 = ((next(stream) >> 11) + 1) * scale
        u2 = (next(stream) >> 11) * scale
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        out[i] = radius * math.cos(angle)
        out[i + 1] = radius * math.sin(angle)
    return out[:count]
