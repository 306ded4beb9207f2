"""xoshiro256** random streams usable from inside compiled kernels.

Every replica gets its own stream: the four state words are produced by
splitmix64 from ``seed ^ (stream * 0xD1B54A32D192ED03)``, so results do not
depend on how replicas are scheduled across threads.
"""
import math

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STREAM_MUL = np.uint64(0xD1B54A32D192ED03)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * math.pi


@njit(inline="always", cache=True, nogil=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True, nogil=True)
def splitmix64(x):
    """One splitmix64 step; returns (new_state, output)."""
    x = x + _GOLDEN
    z = x
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return x, z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def stream_state(seed, stream):
    """State vector for replica ``stream`` of master ``seed``."""
    s = np.empty(4, np.uint64)
    x = np.uint64(seed) ^ (np.uint64(stream) * _STREAM_MUL)
    for i in range(4):
        x, z = splitmix64(x)
        s[i] = z
    return s


@njit(inline="always", cache=True, nogil=True)
def next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(inline="always", cache=True, nogil=True)
def next_double(s):
    """Uniform double in [0, 1) with 53 random bits."""
    return (next_u64(s) >> np.uint64(11)) * _INV_2_53


@njit(inline="always", cache=True, nogil=True)
def next_normal_pair(s):
    """Two independent standard normals (Box-Muller)."""
    u1 = next_double(s)
    while u1 == 0.0:
        u1 = next_double(s)
    u2 = next_double(s)
    r = math.sqrt(-2.0 * math.log(u1))
    return r * math.cos(_TWO_PI * u2), r * math.sin(_TWO_PI * u2)


def mix_seed(seed: int, index: int) -> int:
    """Derive a child seed as a plain Python int (used for sub-experiments)."""
    x = (int(seed) ^ (int(index) * 0xD1B54A32D192ED03)) & 0xFFFFFFFFFFFFFFFF
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def uniform_thresholds(probs) -> np.ndarray:
    """Cumulative uint64 cut points for drawing a category from one raw word.

    ``probs`` has k entries summing to one; the result has k-1 cut points.
    """
    cum = np.cumsum(np.asarray(probs, dtype=float))[:-1]
    return np.array([min(int(c * 2.0**64), 2**64 - 1) for c in cum], dtype=np.uint64)
