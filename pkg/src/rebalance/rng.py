"""Counter-based random streams.

Every random draw is a pure function of ``(seed, stream_key, counter)``.
Work split across threads therefore sees the same numbers no matter how
it is scheduled; a synthetic example's draws depend only on its own key.

The mixing function is splitmix64. numpy's bit generators cannot be
indexed per element, which is what vectorised per-pair streams need.
"""

from __future__ import annotations

import hashlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
_INV_2_53 = 1.0 / (1 << 53)


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def _as_u64(value) -> np.ndarray:
    arr = np.asarray(value)
    if arr.dtype == np.uint64:
        return np.atleast_1d(arr)
    if arr.dtype.kind in "iu":
        return np.atleast_1d(arr.astype(np.int64).view(np.uint64))
    raise TypeError(f"expected integer key material, got {arr.dtype}")


def text_key(text: str) -> int:
    """Stable 64-bit integer for a string (independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_keys(*parts) -> np.ndarray:
    """Fold key material into uint64 stream keys, broadcasting array parts.

    Strings are hashed with :func:`text_key`; integers and integer arrays are
    folded in order, so ``derive_keys("smote", 1, row_ids, ordinals)`` gives
    one key per (row_id, ordinal) pair.
    """
    key = np.zeros(1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for part in parts:
            if isinstance(part, str):
                part = np.uint64(text_key(part))
            elif isinstance(part, (int, np.integer)):
                part = np.uint64(int(part) & _MASK64)
            material = _as_u64(part)
            key = _mix(key ^ _mix(material + _GOLDEN))
    return key


def _state(seed: int, keys: np.ndarray) -> np.ndarray:
    seed_u = np.uint64(int(seed) & _MASK64)
    with np.errstate(over="ignore"):
        return _mix(_mix(np.atleast_1d(keys).astype(np.uint64) + _GOLDEN) ^ seed_u)


def raw_block(seed: int, keys: np.ndarray, n_draws: int, offset: int = 0) -> np.ndarray:
    """uint64 draws, shape ``(len(keys), n_draws)``; draw j uses counter ``offset + j``."""
    state = _state(seed, keys)[:, None]
    counters = np.arange(offset + 1, offset + n_draws + 1, dtype=np.uint64)[None, :]
    with np.errstate(over="ignore"):
        return _mix(state + counters * _GOLDEN)


def uniform_block(seed: int, keys: np.ndarray, n_draws: int, offset: int = 0) -> np.ndarray:
    """Uniform doubles in [0, 1), one row per key."""
    raw = raw_block(seed, keys, n_draws, offset)
    return (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53


def normal_block(seed: int, keys: np.ndarray, n_draws: int, offset: int = 0) -> np.ndarray:
    """Standard normal draws via Box-Muller; consumes ``2 * n_draws`` counters."""
    u = uniform_block(seed, keys, 2 * n_draws, offset)
    u1 = 1.0 - u[:, 0::2]
    u2 = u[:, 1::2]
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def bounded_ints(u: np.ndarray, high) -> np.ndarray:
    """Map uniforms in [0, 1) to integers in ``[0, high)``."""
    high = np.asarray(high)
    out = np.floor(u * high).astype(np.int64)
    return np.minimum(out, np.maximum(high - 1, 0))


class RandomStream:
    """Sequential view over one ``(seed, stream_key)`` stream.

    Draws advance an internal counter, so two streams with equal seed and key
    yield identical sequences.
    """

    def __init__(self, seed: int, stream_key: int | str | np.ndarray):
        self.seed = int(seed) & _MASK64
        if isinstance(stream_key, np.ndarray):
            self.stream_key = int(stream_key.ravel()[0])
        elif isinstance(stream_key, str):
            self.stream_key = text_key(stream_key)
        else:
            self.stream_key = int(stream_key) & _MASK64
        self._counter = 0

    @classmethod
    def for_task(cls, seed: int, *parts) -> "RandomStream":
        return cls(seed, derive_keys(*parts))

    def _take(self, n: int) -> int:
        start = self._counter
        self._counter += n
        return start

    def uniform(self, n: int | None = None):
        m = 1 if n is None else int(n)
        key = np.array([self.stream_key], dtype=np.uint64)
        out = uniform_block(self.seed, key, m, self._take(m))[0]
        return float(out[0]) if n is None else out

    def normal(self, n: int | None = None):
        m = 1 if n is None else int(n)
        key = np.array([self.stream_key], dtype=np.uint64)
        out = normal_block(self.seed, key, m, self._take(2 * m))[0]
        return float(out[0]) if n is None else out

    def integers(self, high: int, n: int | None = None):
        if high <= 0:
            raise ValueError("high must be positive")
        u = self.uniform(1 if n is None else n)
        out = bounded_ints(np.atleast_1d(u), high)
        return int(out[0]) if n is None else out

    def permutation(self, n: int) -> np.ndarray:
        # ties between equal uniforms are resolved by position (stable sort)
        return np.argsort(self.uniform(n), kind="stable")

    def choice(self, probabilities: np.ndarray, n: int) -> np.ndarray:
        """Indices drawn with replacement according to ``probabilities``."""
        p = np.asarray(probabilities, dtype=np.float64)
        cdf = np.cumsum(p)
        cdf /= cdf[-1]
        idx = np.searchsorted(cdf, self.uniform(n), side="right")
        return np.minimum(idx, len(p) - 1)
