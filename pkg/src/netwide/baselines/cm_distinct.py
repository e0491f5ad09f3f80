"""Count-Min grid whose cells are distinct counters.

Cell ``(l, h_l(x))`` absorbs the packet identity ``<x, pid>``. Because a cell
counts distinct identities, a packet reported by several routers is counted
once after merging. A flow's estimate is the smallest of its ``d`` cells,
inflated by ``1 + 2 eps_A``.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from netwide.baselines.count_distinct import (
    IncompatibleSketches,
    estimate_registers,
    packet_items,
    register_bits_for,
    register_updates,
)
from netwide.hashing import MASK64, hash64_words, mix64

MAGIC = b"ACMD"
VERSION = 1
_HEADER = struct.Struct("<4sBBHIQdd")
_ROW_DOMAIN = 0xC3D0_0000_0000_0001
_CELL_DOMAIN = 0xC3D0_0000_0000_0002

MAX_GRID_BYTES = 1 << 30


def grid_shape(epsilon: float, delta: float) -> tuple[int, int]:
    """``(d, w)`` for target error ``epsilon`` and failure probability ``delta``."""
    if not 0 < epsilon < 1 or not 0 < delta < 1:
        raise ValueError("epsilon and delta must be in (0, 1)")
    d = math.ceil(1 + math.log2(1 / delta))
    w = math.ceil(4 / epsilon)
    return d, w


class CMDistinct:
    def __init__(self, epsilon: float, delta: float, seed: int = 0, register_bits: int | None = None):
        self.epsilon = float(epsilon)
        self.delta = float(delta)
        self.d, self.w = grid_shape(self.epsilon, self.delta)
        self.eps_A = self.epsilon / 8
        self.delta_A = self.delta / (2 * self.d)
        if not 0 <= seed <= MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.b = register_bits_for(self.eps_A) if register_bits is None else int(register_bits)
        size = self.d * self.w * (1 << self.b)
        if size > MAX_GRID_BYTES:
            raise ValueError(
                f"grid of {self.d}x{self.w} cells with 2**{self.b} registers needs {size} bytes; "
                "pass a smaller register_bits"
            )
        self.grid = np.zeros((self.d, self.w, 1 << self.b), dtype=np.uint8)

    def params(self) -> tuple:
        return self.epsilon, self.delta, self.seed, self.b

    def __eq__(self, other):
        if not isinstance(other, CMDistinct):
            return NotImplemented
        return self.params() == other.params() and np.array_equal(self.grid, other.grid)

    def __repr__(self):
        return f"CMDistinct(epsilon={self.epsilon}, delta={self.delta}, d={self.d}, w={self.w}, b={self.b})"

    def copy(self) -> CMDistinct:
        out = CMDistinct.__new__(CMDistinct)
        out.__dict__.update(self.__dict__)
        out.grid = self.grid.copy()
        return out

    def _row_key(self, l: int) -> int:
        return mix64(self.seed ^ _ROW_DOMAIN ^ (l * 0x9E3779B97F4A7C15 & MASK64))

    def _cell_key(self, l: int) -> int:
        return mix64(self.seed ^ _CELL_DOMAIN ^ (l * 0x9E3779B97F4A7C15 & MASK64))

    def columns(self, keys) -> np.ndarray:
        """``h_l(x)`` for every row ``l``; shape ``(d, n)``."""
        keys = np.asarray(keys, dtype=np.uint64)
        out = np.empty((self.d, keys.size), dtype=np.int64)
        for l in range(self.d):
            h = hash64_words(self._row_key(l), keys, 8) >> np.uint64(32)
            out[l] = ((h * np.uint64(self.w)) >> np.uint64(32)).astype(np.int64)
        return out

    def column(self, l: int, x: int) -> int:
        return int(self.columns([x])[l, 0])

    def add_items(self, keys, items: np.ndarray) -> None:
        """Route item ``items[i]`` (rows of two words) to the cells of ``keys[i]``."""
        keys = np.asarray(keys, dtype=np.uint64)
        if keys.size == 0:
            return
        cols = self.columns(keys)
        R = 1 << self.b
        flat = self.grid.reshape(-1)
        for l in range(self.d):
            idx, rho = register_updates(hash64_words(self._cell_key(l), items, 16), self.b)
            np.maximum.at(flat, (l * self.w + cols[l]) * R + idx, rho)

    def add_packets(self, pids, fids) -> None:
        self.add_items(fids, packet_items(pids, fids))

    def add(self, fid: int, pid: int) -> None:
        self.add_packets([pid], [fid])

    def cell_estimates(self) -> np.ndarray:
        return estimate_registers(self.grid)

    def query(self, x: int) -> float:
        return float(self.query_many([x])[0])

    def query_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.uint64)
        if xs.size == 0:
            return np.zeros(0)
        cols = self.columns(xs)
        # one estimate per cell, then a lookup per (row, x)
        cells = self.cell_estimates()
        est = cells[np.arange(self.d)[:, None], cols]
        return (1 + 2 * self.eps_A) * est.min(axis=0)

    def merge(self, other: CMDistinct) -> CMDistinct:
        return cmd_merge([self, other])

    def to_bytes(self) -> bytes:
        head = _HEADER.pack(MAGIC, VERSION, self.b, self.d, self.w, self.seed, self.epsilon, self.delta)
        return head + self.grid.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> CMDistinct:
        if len(data) < _HEADER.size:
            raise ValueError("truncated header")
        magic, version, b, d, w, seed, eps, delta = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"unsupported version {version}")
        c = cls(eps, delta, seed, register_bits=b)
        if (c.d, c.w) != (d, w):
            raise ValueError("grid shape does not match epsilon/delta")
        body = data[_HEADER.size:]
        if len(body) != c.grid.size:
            raise ValueError(f"expected {c.grid.size} register bytes, got {len(body)}")
        c.grid = np.frombuffer(body, dtype=np.uint8).reshape(c.grid.shape).copy()
        return c


def cmd_add(c: CMDistinct, fid: int, pid: int) -> None:
    c.add(fid, pid)


def cmd_merge(instances) -> CMDistinct:
    instances = list(instances)
    if not instances:
        raise ValueError("cmd_merge needs at least one instance")
    out = instances[0].copy()
    for c in instances[1:]:
        if c.params() != out.params():
            raise IncompatibleSketches(f"cannot merge {out!r} with {c!r}")
        np.maximum(out.grid, c.grid, out=out.grid)
    return out


def cmd_query(c: CMDistinct, x: int) -> float:
    return c.query(x)
