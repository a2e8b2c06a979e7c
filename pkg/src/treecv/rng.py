"""Counter-based random number generation with derivable substreams.

Every source of randomness in this package (dataset shuffles, per-node
training permutations, learner streams, synthetic data) draws from a
SplitMix64 stream.  The generator is counter-based: output i is a pure
function of (seed, i), so streams can be replayed, snapshotted by value,
and generated in bulk with numpy.  Substreams are derived by hashing the
parent seed together with integer tags, which keeps every component's
randomness an explicit function of the run seed and its position in the
computation.

The stream is pinned by test vectors (see tests/test_rng.py); any change
to the constants below is a breaking change to reproducibility.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    """Vectorized SplitMix64 finalizer on a uint64 array."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, *tags: int) -> int:
    """Derive a child seed from a parent seed and integer tags.

    Deterministic and order-sensitive in the tags; distinct tag tuples
    give statistically independent streams.
    """
    state = seed & _MASK64
    for tag in tags:
        state = (state + _GAMMA) & _MASK64
        state = _mix(state ^ (tag & _MASK64))
    return state


class SplitMix64Stream:
    """Sequential view of a SplitMix64 counter stream.

    State is the single 64-bit counter, so `state` / `set_state` give
    exact snapshot and replay.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    @property
    def state(self) -> int:
        return self._state

    def set_state(self, state: int) -> None:
        self._state = state & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix(self._state)

    def next_u64_array(self, count: int) -> np.ndarray:
        """Bulk draw of `count` outputs, identical to `count` scalar calls."""
        if count < 0:
            raise ValueError("count must be nonnegative")
        steps = np.arange(1, count + 1, dtype=np.uint64)
        states = np.uint64(self._state) + steps * np.uint64(_GAMMA)
        self._state = (self._state + count * _GAMMA) & _MASK64
        return _mix_array(states)

    def uniform(self) -> float:
        """Double in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_array(self, count: int) -> np.ndarray:
        return (self.next_u64_array(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal_array(self, count: int) -> np.ndarray:
        """Standard normals via Box-Muller; consumes 2*ceil(count/2) outputs."""
        pairs = (count + 1) // 2
        u1 = self.uniform_array(pairs)
        u2 = self.uniform_array(pairs)
        u1[u1 == 0.0] = 2.0**-53
        radius = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * math.pi * u2
        out = np.concatenate([radius * np.cos(theta), radius * np.sin(theta)])
        return out[:count]

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = ((1 << 64) // n) * n
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def shuffle(self, values) -> None:
        """In-place Fisher-Yates shuffle of a mutable sequence or 1-d array."""
        for i in range(len(values) - 1, 0, -1):
            j = self.randbelow(i + 1)
            values[i], values[j] = values[j], values[i]

    def permutation(self, n: int) -> np.ndarray:
        idx = np.arange(n)
        self.shuffle(idx)
        return idx
