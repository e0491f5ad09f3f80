"""Seeded hash pair shared by every measurement switch.

``slot_of`` picks the slot an identifier competes for and ``rank_of`` gives
its sampling rank. Both are pure functions of ``(seed, m, id)`` so any two
switches built from the same seed agree bit-for-bit.

Identifiers are byte strings. They are zero-padded on the right to a
multiple of 8 bytes and consumed as big-endian 64-bit words, which is what
lets the scalar path (Python ints) and the vectorized path (numpy uint64)
produce identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# domain separation for the two sub-seeds
_SLOT_DOMAIN = 0x5A17_0F5E_ED00_0001
_RANK_DOMAIN = 0x2A4B_C0DE_ED00_0002

RANK_BITS = 32
RANK_ONE = 1 << RANK_BITS  # encodes 1.0; also the empty-slot sentinel
MAX_M = 30


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def id_words(data: bytes) -> list[int]:
    """Split identifier bytes into big-endian 64-bit words (right zero-pad)."""
    if not data:
        return [0]
    pad = (-len(data)) % 8
    padded = data + b"\x00" * pad
    return [int.from_bytes(padded[i:i + 8], "big") for i in range(0, len(padded), 8)]


def hash64(key: int, data: bytes) -> int:
    h = mix64(key + len(data) * GOLDEN)
    for w in id_words(data):
        h = mix64(h ^ w)
    return mix64(h + key)


def hash64_words(key: int, words: np.ndarray, nbytes: int) -> np.ndarray:
    """Vectorized :func:`hash64` over rows of pre-split words.

    ``words`` is a uint64 array of shape ``(n,)`` (one word per id) or
    ``(n, w)``; every row encodes an identifier of exactly ``nbytes`` bytes.
    """
    words = np.asarray(words, dtype=np.uint64)
    if words.ndim == 1:
        words = words[:, None]
    start = mix64(key + nbytes * GOLDEN)
    h = np.full(words.shape[0], start, dtype=np.uint64)
    for j in range(words.shape[1]):
        h = _mix64_np(h ^ words[:, j])
    return _mix64_np(h + np.uint64(key))


@dataclass(frozen=True)
class HashPair:
    """The shared ``(h1, h2)`` pair: slot selector and sampling rank."""

    seed: int
    m: int

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or not 1 <= self.m <= MAX_M:
            raise ValueError(f"slot bit-width m must be in [1, {MAX_M}], got {self.m!r}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    @property
    def slot_key(self) -> int:
        return mix64(self.seed ^ _SLOT_DOMAIN)

    @property
    def rank_key(self) -> int:
        return mix64(self.seed ^ _RANK_DOMAIN)

    @property
    def slots(self) -> int:
        return 1 << self.m

    def slot_of(self, data: bytes) -> int:
        return hash64(self.slot_key, data) >> (64 - self.m)

    def rank_of(self, data: bytes) -> int:
        """Fixed-point rank ``r`` in ``[1, 2**32]``, read as ``r / 2**32``."""
        return (hash64(self.rank_key, data) >> 32) + 1

    def slots_of_words(self, words: np.ndarray, nbytes: int) -> np.ndarray:
        return hash64_words(self.slot_key, words, nbytes) >> np.uint64(64 - self.m)

    def ranks_of_words(self, words: np.ndarray, nbytes: int) -> np.ndarray:
        return (hash64_words(self.rank_key, words, nbytes) >> np.uint64(32)) + np.uint64(1)


def new_hash_pair(seed: int, m: int) -> HashPair:
    return HashPair(seed, m)


def slot_of(hp: HashPair, data: bytes) -> int:
    return hp.slot_of(data)


def rank_of(hp: HashPair, data: bytes) -> int:
    return hp.rank_of(data)


def rank_to_float(r) -> float:
    return r / RANK_ONE


def u64_bytes(x: int) -> bytes:
    return int(x).to_bytes(8, "big")


def pair_fid(src: int, dst: int) -> bytes:
    """Canonical 8-byte flow id for a (srcIP, dstIP) pair."""
    return src.to_bytes(4, "big") + dst.to_bytes(4, "big")


def five_tuple_fid(src: int, dst: int, sport: int, dport: int, proto: int) -> bytes:
    """Canonical 13-byte flow id: srcIP, dstIP, sport, dport, proto."""
    return (
        src.to_bytes(4, "big")
        + dst.to_bytes(4, "big")
        + sport.to_bytes(2, "big")
        + dport.to_bytes(2, "big")
        + proto.to_bytes(1, "big")
    )
