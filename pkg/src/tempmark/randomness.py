"""Deterministic hashing and pseudo-randomness.

Everything here is pure integer arithmetic on unsigned 64-bit values so that a
generator and a detector, possibly written in different languages, derive the
same temperatures and vocabulary partitions from the same text:

* FNV-1a (64 bit) over token ids serialized as 4 little-endian bytes each;
* splitmix64 for turning a hash into uniforms and for sampling streams.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .exceptions import ParameterError

MASK64 = 0xFFFFFFFFFFFFFFFF
FNV_OFFSET_BASIS = 14695981039346656037
FNV_PRIME = 1099511628211
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_TWO_POW_53 = float(1 << 53)


def fnv1a64(data: bytes, h: int = FNV_OFFSET_BASIS) -> int:
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(seed: int) -> int:
    """First output of a splitmix64 generator whose state is ``seed``."""
    return _mix64((seed + SPLITMIX_GAMMA) & MASK64)


def to_unit_interval(z: int) -> float:
    """Map a 64-bit integer to [0, 1) using its top 53 bits."""
    return (z >> 11) / _TWO_POW_53


def uniform_from_seed(seed: int) -> float:
    return to_unit_interval(splitmix64(seed & MASK64))


class SplitMix64:
    """Sequential splitmix64 stream.

    >>> rng = SplitMix64(1234567)
    >>> rng.next_u64()
    6457827717110365317
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + SPLITMIX_GAMMA) & MASK64
        return _mix64(self.state)

    def random(self) -> float:
        return to_unit_interval(self.next_u64())

    def below(self, n: int) -> int:
        """Integer in ``[0, n)``; plain modulo reduction (bias < n / 2**64)."""
        return self.next_u64() % n


def context_hash(window: Sequence[int], h: int | None = None) -> int:
    """FNV-1a 64 of the window's token ids, 4 bytes each, least significant first."""
    if h is not None and len(window) != h:
        raise ParameterError(f"window length mismatch: expected {h}, got {len(window)}")
    data = b"".join(int(t).to_bytes(4, "little") for t in window)
    return fnv1a64(data)


@dataclass(frozen=True)
class WatermarkParams:
    """Temperature watermark configuration.

    The per-token temperature is ``T0 * (m + (M - m) * U)`` with ``U`` in
    [0, 1) derived from the hash of the previous ``h`` tokens.
    """

    T0: float = 1.0
    m: float = 0.3
    M: float = 3.0
    h: int = 2

    def __post_init__(self):
        for name in ("T0", "m", "M"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ParameterError(f"{name} must be a finite number")
        if self.T0 <= 0:
            raise ParameterError("T0 must be > 0")
        if self.m <= 0:
            raise ParameterError("m must be > 0")
        if not self.m < self.M:
            raise ParameterError("m must be < M")
        if int(self.h) != self.h or self.h < 1:
            raise ParameterError("h must be an integer >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def temperature_from_uniform(params: WatermarkParams, u: float) -> float:
    t = params.T0 * (params.m + (params.M - params.m) * u)
    upper = params.T0 * params.M
    # Rounding can land exactly on the upper bound when u is within 2**-53 of 1.
    if t >= upper:
        t = math.nextafter(upper, 0.0)
    return t


def sample_temperature(params: WatermarkParams, window: Sequence[int]) -> float:
    return temperature_from_uniform(params, uniform_from_seed(context_hash(window, params.h)))


@dataclass(frozen=True)
class GreenMask:
    bits: np.ndarray
    gamma: float

    @property
    def green_ids(self) -> np.ndarray:
        return np.flatnonzero(self.bits)


def _check_partition_args(vocab_size: int, gamma: float) -> None:
    if not 0.0 < gamma < 1.0:
        raise ParameterError("gamma must be in (0, 1)")
    if vocab_size < 2:
        raise ParameterError("vocab_size must be >= 2")


def shuffled_ids(seed: int, vocab_size: int) -> np.ndarray:
    """Fisher-Yates permutation of ``range(vocab_size)`` driven by splitmix64.

    For i = n-1 down to 1, the i-th draw of the stream picks j = draw mod (i+1)
    and ids[i], ids[j] are swapped.
    """
    n = int(vocab_size)
    # Draw k is splitmix64 applied to state seed + k*gamma, so all draws vectorize.
    steps = np.arange(1, n, dtype=np.uint64) * np.uint64(SPLITMIX_GAMMA)
    z = steps + np.uint64(int(seed) & MASK64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    bounds = np.arange(n, 1, -1, dtype=np.uint64)
    js = (z % bounds).tolist()
    ids = list(range(n))
    for i, j in zip(range(n - 1, 0, -1), js):
        ids[i], ids[j] = ids[j], ids[i]
    return np.asarray(ids, dtype=np.int64)


@lru_cache(maxsize=8192)
def _green_bits(seed: int, vocab_size: int, gamma: float) -> np.ndarray:
    perm = shuffled_ids(seed, vocab_size)
    bits = np.zeros(vocab_size, dtype=bool)
    bits[perm[: int(math.floor(gamma * vocab_size))]] = True
    bits.flags.writeable = False
    return bits


def green_partition(seed: int, vocab_size: int, gamma: float) -> GreenMask:
    """Seeded split of the vocabulary; the first ``floor(gamma*|V|)`` shuffled ids are green."""
    _check_partition_args(vocab_size, gamma)
    return GreenMask(_green_bits(int(seed) & MASK64, int(vocab_size), float(gamma)), float(gamma))
