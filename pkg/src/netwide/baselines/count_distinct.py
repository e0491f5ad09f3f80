"""Mergeable distinct counter (log-log registers with linear counting).

Items are byte strings, or rows of pre-split 64-bit words on the vectorized
path. Merging takes the register-wise maximum, so the merged sketch is the
sketch of the union stream, bit for bit.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from netwide.hashing import MASK64, hash64, hash64_words, mix64

MAGIC = b"ACDS"
VERSION = 1
_HEADER = struct.Struct("<4sBBBBQ")
_ITEM_DOMAIN = 0xC0DE_D15C_0000_0001

MIN_BITS, MAX_BITS = 4, 20


class IncompatibleSketches(ValueError):
    pass


def register_bits_for(eps: float) -> int:
    """Smallest ``b`` with standard error ``1.04 / sqrt(2**b) <= eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    b = max(MIN_BITS, math.ceil(2 * math.log2(1.04 / eps)))
    while b > MIN_BITS and 1.04 / math.sqrt(2 ** (b - 1)) <= eps:
        b -= 1
    return b


def _alpha(R: int) -> float:
    if R == 16:
        return 0.673
    if R == 32:
        return 0.697
    if R == 64:
        return 0.709
    return 0.7213 / (1 + 1.079 / R)


def estimate_registers(regs: np.ndarray) -> np.ndarray | float:
    """Distinct-count estimate of register vectors along the last axis."""
    regs = np.asarray(regs)
    R = regs.shape[-1]
    raw = _alpha(R) * R * R / np.sum(np.exp2(-regs.astype(np.float64)), axis=-1)
    zeros = np.count_nonzero(regs == 0, axis=-1)
    with np.errstate(divide="ignore"):
        linear = R * np.log(R / np.maximum(zeros, 1))
    out = np.where((raw <= 2.5 * R) & (zeros > 0), linear, raw)
    return float(out) if out.ndim == 0 else out


def _bit_length(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    bl = np.zeros(v.shape, dtype=np.int64)
    for s in (32, 16, 8, 4, 2, 1):
        big = v >= (np.uint64(1) << np.uint64(s))
        bl += s * big
        v = np.where(big, v >> np.uint64(s), v)
    return bl + (v > 0)


def register_updates(h: np.ndarray, b: int) -> tuple[np.ndarray, np.ndarray]:
    """Register index and rho value for each 64-bit hash."""
    h = np.asarray(h, dtype=np.uint64)
    rest_bits = 64 - b
    idx = (h >> np.uint64(rest_bits)).astype(np.int64)
    rest = h & np.uint64((1 << rest_bits) - 1)
    rho = (rest_bits - _bit_length(rest) + 1).astype(np.uint8)
    return idx, rho


class CountDistinctSketch:
    def __init__(self, b: int = 12, seed: int = 0):
        if not MIN_BITS <= b <= MAX_BITS:
            raise ValueError(f"register bits must be in [{MIN_BITS}, {MAX_BITS}], got {b}")
        if not 0 <= seed <= MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.b = int(b)
        self.seed = int(seed)
        self.registers = np.zeros(1 << b, dtype=np.uint8)

    @classmethod
    def for_error(cls, eps: float, seed: int = 0) -> CountDistinctSketch:
        return cls(register_bits_for(eps), seed)

    @property
    def key(self) -> int:
        return mix64(self.seed ^ _ITEM_DOMAIN)

    def params(self) -> tuple[int, int]:
        return self.b, self.seed

    def __eq__(self, other):
        if not isinstance(other, CountDistinctSketch):
            return NotImplemented
        return self.params() == other.params() and np.array_equal(self.registers, other.registers)

    def __repr__(self):
        return f"CountDistinctSketch(b={self.b}, seed={self.seed})"

    def copy(self) -> CountDistinctSketch:
        out = CountDistinctSketch(self.b, self.seed)
        out.registers = self.registers.copy()
        return out

    def add(self, item: bytes) -> None:
        h = hash64(self.key, bytes(item))
        rest_bits = 64 - self.b
        j = h >> rest_bits
        rho = rest_bits - (h & ((1 << rest_bits) - 1)).bit_length() + 1
        if rho > self.registers[j]:
            self.registers[j] = rho

    def add_words(self, words: np.ndarray, nbytes: int) -> None:
        """Vectorized :meth:`add` over items given as rows of 64-bit words."""
        words = np.asarray(words, dtype=np.uint64)
        if words.shape[0] == 0:
            return
        idx, rho = register_updates(hash64_words(self.key, words, nbytes), self.b)
        np.maximum.at(self.registers, idx, rho)

    def add_packets(self, pids, fids) -> None:
        """Add ``<fid, pid>`` packet identities (16-byte items ``pid || fid``)."""
        self.add_words(packet_items(pids, fids), 16)

    def query(self) -> float:
        return estimate_registers(self.registers)

    def merge(self, other: CountDistinctSketch) -> CountDistinctSketch:
        return cds_merge(self, other)

    def to_bytes(self) -> bytes:
        return _HEADER.pack(MAGIC, VERSION, self.b, 0, 0, self.seed) + self.registers.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> CountDistinctSketch:
        if len(data) < _HEADER.size:
            raise ValueError("truncated header")
        magic, version, b, _, _, seed = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"unsupported version {version}")
        sk = cls(b, seed)
        body = data[_HEADER.size:]
        if len(body) != sk.registers.size:
            raise ValueError(f"expected {sk.registers.size} registers, got {len(body)} bytes")
        regs = np.frombuffer(body, dtype=np.uint8)
        if regs.max(initial=0) > 64 - b + 1:
            raise ValueError("register value out of range")
        sk.registers = regs.copy()
        return sk


def packet_items(pids, fids) -> np.ndarray:
    pids = np.asarray(pids, dtype=np.uint64)
    fids = np.asarray(fids, dtype=np.uint64)
    if pids.shape != fids.shape:
        raise ValueError("pids and fids must have the same shape")
    return np.stack([pids, fids], axis=1) if pids.size else np.empty((0, 2), dtype=np.uint64)


def cds_add(s: CountDistinctSketch, item: bytes) -> None:
    s.add(item)


def cds_query(s: CountDistinctSketch) -> float:
    return s.query()


def cds_merge(a: CountDistinctSketch, b: CountDistinctSketch) -> CountDistinctSketch:
    if a.params() != b.params():
        raise IncompatibleSketches(f"cannot merge {a!r} with {b!r}")
    out = a.copy()
    np.maximum(out.registers, b.registers, out=out.registers)
    return out


def volume_estimate(sketches) -> float:
    """Distinct packets seen network-wide.

    Each router feeds its sketch with packet identities; duplicates seen by
    several routers collapse in the merge, so every packet counts once.
    """
    sketches = list(sketches)
    if not sketches:
        return 0.0
    merged = sketches[0].copy()
    for s in sketches[1:]:
        merged = cds_merge(merged, s)
    return merged.query()
