"""Counter-keyed splitmix64 streams usable from numba kernels.

A stream is identified by ``(seed, index)``, so work split across threads
draws exactly the same numbers as a serial run.
"""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_STREAM = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def stream_state(seed, index):
    """Initial state (1-element uint64 array) for stream ``index`` of ``seed``."""
    state = np.empty(1, dtype=np.uint64)
    state[0] = mix64(mix64(np.uint64(seed) + _GOLDEN) ^ (np.uint64(index) * _STREAM))
    return state


@njit(cache=True, nogil=True)
def next_u64(state):
    state[0] = state[0] + _GOLDEN
    return mix64(state[0])


@njit(cache=True, nogil=True)
def uniform(state):
    """Double in [0, 1)."""
    return np.float64(next_u64(state) >> _S11) * _TWO_M53


@njit(cache=True, nogil=True)
def uniform_open(state):
    """Double in the open interval (0, 1)."""
    return (np.float64(next_u64(state) >> _S11) + 0.5) * _TWO_M53


@njit(cache=True, nogil=True)
def randbelow(state, n):
    k = np.int64(uniform(state) * n)
    return k if k < n else n - 1


def as_seed(seed) -> np.uint64:
    """Fold any Python int into the unsigned 64-bit seed space."""
    return np.uint64(int(seed) % (1 << 64))
