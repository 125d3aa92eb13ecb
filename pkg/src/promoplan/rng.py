"""Counter-based randomness.

Everything stochastic in this package draws from a stateless generator:
a splitmix64-style mixing function applied to an explicit key. Feeding
the same key always yields the same value, no matter in which order or
on how many workers the calls happen. That property is what makes
simulated noise reproducible per (seed, consumer, menu) and optimizer
runs reproducible per seed.

The scalar path works on Python ints; the vector path mirrors it
bit-for-bit on uint64 numpy arrays.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# fnv-1a 64-bit
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(x: int) -> int:
    """One splitmix64 step: advance by the golden gamma and mix."""
    z = (x + _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def mix64(*parts: int) -> int:
    """Fold any number of integer key parts into one 64-bit word."""
    h = 0
    for p in parts:
        h = splitmix64(h ^ (p & _MASK))
    return h


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return h


def string_key(s: str) -> int:
    """Stable 64-bit key for a string (Python's hash() is salted)."""
    return fnv1a64(s.encode("utf-8"))


def unit_float(word: int) -> float:
    """Map a 64-bit word to a float in the open interval (0, 1).

    52-bit resolution; the half-step offset keeps both endpoints out
    even after rounding, so log(u) and log(1-u) are always finite.
    """
    return ((word >> 12) + 0.5) * 2.0**-52


def gumbel(word: int, scale: float) -> float:
    """Standard Gumbel noise scaled by `scale`, from one key word."""
    if scale == 0.0:
        return 0.0
    u = unit_float(word)
    return -scale * np.log(-np.log(u))


# --- vectorized mirror -------------------------------------------------

_V_GAMMA = np.uint64(_GAMMA)
_V_MIX1 = np.uint64(_MIX1)
_V_MIX2 = np.uint64(_MIX2)


def splitmix64_vec(x: np.ndarray) -> np.ndarray:
    """splitmix64 over a uint64 array; identical to the scalar path."""
    with np.errstate(over="ignore"):
        z = x + _V_GAMMA
        z = (z ^ (z >> np.uint64(30))) * _V_MIX1
        z = (z ^ (z >> np.uint64(27))) * _V_MIX2
        return z ^ (z >> np.uint64(31))


def mix64_vec(*parts) -> np.ndarray:
    """Vector mix64: parts are uint64 arrays or scalar ints, broadcast."""
    arrs = [np.asarray(p, dtype=np.uint64) for p in parts]
    shape = np.broadcast_shapes(*[a.shape for a in arrs])
    h = np.zeros(shape, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for a in arrs:
            h = splitmix64_vec(h ^ a)
    return h


def unit_float_vec(words: np.ndarray) -> np.ndarray:
    return ((words >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52


def gumbel_vec(words: np.ndarray, scale: float) -> np.ndarray:
    if scale == 0.0:
        return np.zeros(words.shape, dtype=np.float64)
    u = unit_float_vec(words)
    return -scale * np.log(-np.log(u))
