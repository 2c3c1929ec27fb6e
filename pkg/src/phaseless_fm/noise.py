"""Counter-based uniform noise.

ζ_c = 2 * U(splitmix64(seed + (c + 1) * 0x9E3779B97F4A7C15)) - 1, where c is
the row-major entry index and U maps the top 53 bits to [0, 1).  Being a
pure function of (seed, c), the stream is trivially reproducible in any
language with 64-bit unsigned arithmetic.
"""

from __future__ import annotations

import numpy as np

GENERATOR_ID = "splitmix64-counter-v1"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, counters) -> np.ndarray:
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed % 2**64) + (c + np.uint64(1)) * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z = z ^ (z >> np.uint64(31))
    return z


def uniform_symmetric(seed: int, shape) -> np.ndarray:
    """Array of ζ in [-1, 1) filled in row-major order."""
    count = int(np.prod(shape))
    z = splitmix64(seed, np.arange(count, dtype=np.uint64))
    u = (z >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return (2.0 * u - 1.0).reshape(shape)


def apply_relative_noise(values, delta: float, seed: int) -> np.ndarray:
    """|u_delta| = |u| (1 + delta * ζ)."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError("noise ratio delta must lie in [0, 1]")
    values = np.asarray(values, dtype=float)
    return values * (1.0 + delta * uniform_symmetric(seed, values.shape))
