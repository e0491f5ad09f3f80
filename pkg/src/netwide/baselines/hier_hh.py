"""Distributed heavy hitters over a binary prefix hierarchy.

Level ``q`` keeps a :class:`CMDistinct` over the flow ids with their low
``q`` bits cleared. After merging, the controller walks down from the root:
at every level it expands the surviving prefixes by one bit and keeps the
``ceil(1/eps_A)`` with the largest estimates. The survivors at level 0 are
the heavy-hitter candidates.
"""

from __future__ import annotations

import math
import struct
import warnings

import numpy as np

from netwide.baselines.cm_distinct import CMDistinct, packet_items
from netwide.baselines.count_distinct import IncompatibleSketches
from netwide.hashing import MASK64, mix64

MAGIC = b"AHHH"
VERSION = 1
_HEADER = struct.Struct("<4sBBBBQdd")


def prefix_mask(u: int, q: int) -> int:
    """``1^(u-q) 0^q``: keeps the top ``u - q`` of ``u`` bits."""
    return ((1 << u) - 1) & ~((1 << q) - 1)


def hhh_descendants(S, q: int) -> set[int]:
    """Both one-bit extensions, at level ``q``, of each level-``q+1`` prefix."""
    out = set()
    for p in S:
        if p & ((1 << (q + 1)) - 1):
            raise ValueError(f"prefix {p:#x} has set bits below level {q + 1}")
        out.add(p)
        out.add(p | (1 << q))
    return out


def psi_hh(epsilon: float, delta: float, u: int) -> float:
    return (1 / epsilon) * u * math.log2(1 / delta)


class HierHH:
    def __init__(self, u: int, epsilon: float, delta: float, seed: int = 0, register_bits: int | None = None):
        if not 1 <= u <= 64:
            raise ValueError("u must be in [1, 64]")
        if not 0 < epsilon < 1 or not 0 < delta < 1:
            raise ValueError("epsilon and delta must be in (0, 1)")
        if not 0 <= seed <= MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.u = int(u)
        self.epsilon = float(epsilon)
        self.delta = float(delta)
        self.seed = int(seed)
        self.eps_A = self.epsilon / 2
        self.psi = psi_hh(self.epsilon, self.delta, self.u)
        # with a tiny psi the per-instance failure target would exceed 1
        self.delta_A = min(0.5, 1 / self.psi)
        self.top_size = math.ceil(1 / self.eps_A)
        self.levels = [
            CMDistinct(self.eps_A, self.delta_A, mix64(self.seed + q), register_bits)
            for q in range(self.u + 1)
        ]
        self.v_hat: float | None = None
        self.top: dict[int, list[int]] = {}
        self.candidates: dict[int, float] = {}
        self.threshold_warning = False

    def params(self) -> tuple:
        return self.u, self.epsilon, self.delta, self.seed, self.levels[0].b

    def __eq__(self, other):
        if not isinstance(other, HierHH):
            return NotImplemented
        return self.params() == other.params() and all(a == b for a, b in zip(self.levels, other.levels))

    def __repr__(self):
        return f"HierHH(u={self.u}, epsilon={self.epsilon}, delta={self.delta})"

    def copy(self) -> HierHH:
        out = HierHH.__new__(HierHH)
        out.__dict__.update(self.__dict__)
        out.levels = [c.copy() for c in self.levels]
        out.top = {q: list(v) for q, v in self.top.items()}
        out.candidates = dict(self.candidates)
        return out

    def add_packets(self, pids, fids) -> None:
        fids = np.asarray(fids, dtype=np.uint64)
        if self.u < 64 and fids.size and int(fids.max()) >> self.u:
            raise ValueError(f"flow id outside the {self.u}-bit universe")
        # the serial number of <x, i> is the pair (i, x) itself
        items = packet_items(pids, fids)
        for q, inst in enumerate(self.levels):
            inst.add_items(fids & np.uint64(prefix_mask(self.u, q)), items)
        self.v_hat = None

    def add(self, fid: int, pid: int) -> None:
        self.add_packets([pid], [fid])

    def finalize(self) -> tuple[float, dict[int, float]]:
        self.v_hat = float(self.levels[self.u].query(0))
        self.top = {self.u: [0]}
        for q in range(self.u - 1, -1, -1):
            cand = sorted(hhh_descendants(self.top[q + 1], q))
            est = self.levels[q].query_many(cand)
            order = sorted(range(len(cand)), key=lambda i: (-est[i], cand[i]))
            keep = order[: self.top_size]
            self.top[q] = sorted(cand[i] for i in keep)
            if q == 0:
                self.candidates = {cand[i]: float(est[i]) for i in keep}
        return self.v_hat, dict(self.candidates)

    def threshold(self, theta: float) -> float:
        if self.v_hat is None:
            raise RuntimeError("finalize() must run before querying")
        e = self.eps_A
        return self.v_hat * (theta / (1 + e) - e * (1 + e))

    def query(self, theta: float) -> set[int]:
        if not 0 < theta < 1:
            raise ValueError("theta must be in (0, 1)")
        T = self.threshold(theta)
        self.threshold_warning = T < 0
        if T < 0:
            warnings.warn(
                f"reporting threshold is negative for theta={theta}, eps_A={self.eps_A}; "
                "reporting every candidate",
                stacklevel=2,
            )
            return set(self.candidates)
        return {x for x, f in self.candidates.items() if f >= T}

    def freq_est(self, x: int) -> float:
        if self.v_hat is None:
            raise RuntimeError("finalize() must run before querying")
        return self.candidates.get(int(x), 0.0)

    def to_bytes(self) -> bytes:
        head = _HEADER.pack(MAGIC, VERSION, self.u, self.levels[0].b, 0, self.seed, self.epsilon, self.delta)
        return head + b"".join(c.grid.tobytes() for c in self.levels)

    @classmethod
    def from_bytes(cls, data: bytes) -> HierHH:
        if len(data) < _HEADER.size:
            raise ValueError("truncated header")
        magic, version, u, b, _, seed, eps, delta = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"unsupported version {version}")
        h = cls(u, eps, delta, seed, register_bits=b)
        body = memoryview(data)[_HEADER.size:]
        size = h.levels[0].grid.size
        if len(body) != size * len(h.levels):
            raise ValueError("body length does not match the level grids")
        for q, c in enumerate(h.levels):
            c.grid = np.frombuffer(body[q * size:(q + 1) * size], dtype=np.uint8).reshape(c.grid.shape).copy()
        return h


def hhh_add(h: HierHH, fid: int, pid: int) -> None:
    h.add(fid, pid)


def hhh_merge(instances) -> HierHH:
    instances = list(instances)
    if not instances:
        raise ValueError("hhh_merge needs at least one instance")
    out = instances[0].copy()
    for h in instances[1:]:
        if h.params() != out.params():
            raise IncompatibleSketches(f"cannot merge {out!r} with {h!r}")
        for a, b in zip(out.levels, h.levels):
            np.maximum(a.grid, b.grid, out=a.grid)
    out.v_hat = None
    out.top, out.candidates = {}, {}
    return out


def hhh_finalize(h: HierHH) -> tuple[float, dict[int, float]]:
    return h.finalize()


def hhh_query(h: HierHH, theta: float) -> set[int]:
    return h.query(theta)


def hhh_freq_est(h: HierHH, x: int) -> float:
    return h.freq_est(x)
