"""Per-switch slot sampler.

Each of the ``2**m`` slots keeps the identifier with the smallest rank among
all identifiers hashed to it. Merging two sketches slot-wise by minimum rank
gives exactly the sketch a single switch would hold after seeing the union
of both streams, which is what makes the sample routing oblivious.

Packet mode competes on the packet id and stores ``pid || fid`` so the
controller can count sampled packets per flow. Flow mode competes on, and
stores, the flow id.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from netwide.hashing import RANK_ONE, HashPair, hash64, id_words, u64_bytes

PACKET = "packet"
FLOW = "flow"
MODES = (PACKET, FLOW)

MAX_ID_BYTES = 16
MAGIC = b"ARMS"
VERSION = 1
_HEADER = struct.Struct("<4sBBBBQ")
_RECORD = np.dtype([("rank", "<u4"), ("id_len", "u1"), ("id", "S16")])
_EMPTY_RANK_FIELD = 0xFFFFFFFF

_FOLD_KEY = 0xF01D_F1D5_0000_0001


class FormatError(ValueError):
    """Raised when serialized sketch bytes cannot be decoded."""


class IncompatibleSketches(ValueError):
    """Raised when merging sketches built with different parameters."""


@dataclass(frozen=True)
class PacketRecord:
    fid: bytes
    pid: int


def packet_fid_word(fid: bytes) -> int:
    """The 8-byte flow field kept next to the pid in packet mode.

    Ids up to 8 bytes are right zero-padded. Longer ids (5-tuples) keep their
    leading 4 bytes, the source address, and replace the rest by a 32-bit
    digest so source-prefix queries still work.
    """
    if len(fid) <= 8:
        return int.from_bytes(fid.ljust(8, b"\x00"), "big")
    return (int.from_bytes(fid[:4], "big") << 32) | (hash64(_FOLD_KEY, fid) >> 32)


def _mode_code(mode: str) -> int:
    return MODES.index(mode)


class SampleSketch:
    def __init__(self, mode: str, m: int, seed: int):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.mode = mode
        self.hp = HashPair(seed, m)
        n = self.hp.slots
        self.ranks = np.full(n, RANK_ONE, dtype=np.uint64)
        self.id_hi = np.zeros(n, dtype=np.uint64)
        self.id_lo = np.zeros(n, dtype=np.uint64)
        self.id_len = np.zeros(n, dtype=np.uint8)

    @property
    def m(self) -> int:
        return self.hp.m

    @property
    def seed(self) -> int:
        return self.hp.seed

    @property
    def num_slots(self) -> int:
        return self.hp.slots

    def params(self) -> tuple:
        return (self.mode, self.m, self.seed)

    def __repr__(self):
        return f"SampleSketch(mode={self.mode!r}, m={self.m}, seed={self.seed}, filled={self.filled_count()})"

    def __eq__(self, other):
        if not isinstance(other, SampleSketch):
            return NotImplemented
        return (
            self.params() == other.params()
            and np.array_equal(self.ranks, other.ranks)
            and np.array_equal(self.id_hi, other.id_hi)
            and np.array_equal(self.id_lo, other.id_lo)
            and np.array_equal(self.id_len, other.id_len)
        )

    def copy(self) -> SampleSketch:
        out = SampleSketch(self.mode, self.m, self.seed)
        out.ranks = self.ranks.copy()
        out.id_hi = self.id_hi.copy()
        out.id_lo = self.id_lo.copy()
        out.id_len = self.id_len.copy()
        return out

    # -- updates -----------------------------------------------------------

    def _key_and_payload(self, p: PacketRecord):
        if self.mode == PACKET:
            return u64_bytes(p.pid), p.pid, packet_fid_word(p.fid), 16
        fid = bytes(p.fid)
        if not 0 < len(fid) <= MAX_ID_BYTES:
            raise ValueError(f"flow id must be 1 to {MAX_ID_BYTES} bytes")
        hi, lo = id_words(fid.ljust(MAX_ID_BYTES, b"\x00"))
        return fid, hi, lo, len(fid)

    def add(self, p: PacketRecord) -> None:
        key, hi, lo, ln = self._key_and_payload(p)
        j = self.hp.slot_of(key)
        r = self.hp.rank_of(key)
        # strict less: ties and the rank-1.0 sentinel keep the incumbent
        if r < int(self.ranks[j]):
            self.ranks[j] = r
            self.id_hi[j] = hi
            self.id_lo[j] = lo
            self.id_len[j] = ln

    def add_packets(self, pids, fids) -> None:
        """Vectorized add of packets given as uint64 arrays, in arrival order.

        ``fids`` holds canonical 8-byte flow ids as big-endian integers (the
        simulator's pair-mode ids). Equivalent to calling :meth:`add` on each
        packet in order.
        """
        pids = np.asarray(pids, dtype=np.uint64)
        fids = np.asarray(fids, dtype=np.uint64)
        if pids.shape != fids.shape:
            raise ValueError("pids and fids must have the same shape")
        if pids.size == 0:
            return
        if self.mode == PACKET:
            keys, hi, lo, ln = pids, pids, fids, 16
        else:
            keys, hi, lo, ln = fids, fids, np.zeros_like(fids), 8
        slots = self.hp.slots_of_words(keys, 8)
        ranks = self.hp.ranks_of_words(keys, 8)
        self._offer_many(slots, ranks, hi, lo, ln)

    def _offer_many(self, slots, ranks, hi, lo, ln) -> None:
        order = np.arange(slots.size)
        idx = np.lexsort((order, ranks, slots))
        s = slots[idx]
        first = np.ones(s.size, dtype=bool)
        first[1:] = s[1:] != s[:-1]
        win = idx[first]
        ws = slots[win].astype(np.int64)
        better = ranks[win] < self.ranks[ws]
        win, ws = win[better], ws[better]
        self.ranks[ws] = ranks[win]
        self.id_hi[ws] = hi[win]
        self.id_lo[ws] = lo[win]
        self.id_len[ws] = ln if np.isscalar(ln) else ln[win]

    # -- queries -----------------------------------------------------------

    def filled_count(self) -> int:
        return int(np.count_nonzero(self.id_len))

    def occupied(self) -> np.ndarray:
        return np.flatnonzero(self.id_len)

    def slot_id(self, j: int) -> bytes | None:
        ln = int(self.id_len[j])
        if ln == 0:
            return None
        raw = u64_bytes(int(self.id_hi[j])) + u64_bytes(int(self.id_lo[j]))
        return raw[:ln]

    def sample_ids(self) -> list[tuple[int, int, bytes]]:
        return [(int(j), int(self.ranks[j]), self.slot_id(j)) for j in self.occupied()]

    def rank_fractions(self) -> np.ndarray:
        return self.ranks.astype(np.float64) / RANK_ONE

    # -- merge & wire format -----------------------------------------------

    def merge(self, other: SampleSketch) -> SampleSketch:
        return merge(self, other)

    def to_bytes(self) -> bytes:
        return serialize(self)

    @classmethod
    def from_bytes(cls, data: bytes) -> SampleSketch:
        return deserialize(data)


def new_sketch(mode: str, m: int, seed: int) -> SampleSketch:
    return SampleSketch(mode, m, seed)


def check_compatible(a: SampleSketch, b: SampleSketch) -> None:
    if a.params() != b.params():
        raise IncompatibleSketches(f"cannot merge {a.params()} with {b.params()}")


def merge(a: SampleSketch, b: SampleSketch) -> SampleSketch:
    """Slot-wise minimum by rank; ``a`` keeps the slot on an exact tie."""
    check_compatible(a, b)
    out = a.copy()
    take = b.ranks < a.ranks
    out.ranks[take] = b.ranks[take]
    out.id_hi[take] = b.id_hi[take]
    out.id_lo[take] = b.id_lo[take]
    out.id_len[take] = b.id_len[take]
    return out


def serialize(sk: SampleSketch) -> bytes:
    header = _HEADER.pack(MAGIC, VERSION, _mode_code(sk.mode), sk.m, 0, sk.seed)
    rec = np.zeros(sk.num_slots, dtype=_RECORD)
    empty = sk.id_len == 0
    rec["rank"] = np.where(empty, _EMPTY_RANK_FIELD, sk.ranks - np.uint64(1)).astype(np.uint32)
    rec["id_len"] = sk.id_len
    ids = np.empty((sk.num_slots, 2), dtype=">u8")
    ids[:, 0] = sk.id_hi
    ids[:, 1] = sk.id_lo
    raw = ids.view(np.uint8).reshape(sk.num_slots, 16)
    # zero padding past id_len keeps the encoding canonical
    raw = np.where(np.arange(16)[None, :] < sk.id_len[:, None], raw, 0).astype(np.uint8)
    rec["id"] = raw.view("S16").reshape(-1)
    return header + rec.tobytes()


def deserialize(data: bytes) -> SampleSketch:
    if len(data) < _HEADER.size:
        raise FormatError("truncated header")
    magic, version, mode_code, m, _reserved, seed = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if mode_code >= len(MODES):
        raise FormatError(f"unknown mode code {mode_code}")
    try:
        sk = SampleSketch(MODES[mode_code], m, seed)
    except ValueError as e:
        raise FormatError(str(e)) from e
    body = data[_HEADER.size:]
    if len(body) != sk.num_slots * _RECORD.itemsize:
        raise FormatError(f"expected {sk.num_slots} records, got {len(body)} bytes")
    rec = np.frombuffer(body, dtype=_RECORD)
    id_len = rec["id_len"].astype(np.uint8)
    rank_field = rec["rank"].astype(np.uint64)
    empty = id_len == 0
    if np.any(id_len > MAX_ID_BYTES):
        raise FormatError("id_len exceeds 16 bytes")
    if np.any(rank_field[empty] != _EMPTY_RANK_FIELD):
        raise FormatError("empty slot with a rank")
    # strict-less insertion means no id ever lands with the 1.0 rank
    if np.any(rank_field[~empty] == _EMPTY_RANK_FIELD):
        raise FormatError("occupied slot with the empty-slot rank")
    if sk.mode == PACKET and np.any(id_len[~empty] != 16):
        raise FormatError("packet-mode slot without pid and fid")
    raw = np.frombuffer(rec["id"].tobytes(), dtype=np.uint8).reshape(-1, 16)
    if np.any(raw[np.arange(16)[None, :] >= id_len[:, None]]):
        raise FormatError("non-zero padding past id_len")
    words = raw.copy().view(">u8").reshape(-1, 2)
    sk.ranks = np.where(empty, RANK_ONE, rank_field + np.uint64(1)).astype(np.uint64)
    sk.id_hi = words[:, 0].astype(np.uint64)
    sk.id_lo = words[:, 1].astype(np.uint64)
    sk.id_len = id_len
    return sk
