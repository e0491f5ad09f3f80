"""Synthetic packet traces and the text trace format.

Flow ids are 64-bit ``src << 32 | dst`` pairs, i.e. the canonical 8-byte
pair encoding read as a big-endian integer. Packet ids are the packet's
position in the stream, which makes them unique by construction.
"""

from __future__ import annotations

import gzip
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from netwide.sample_sketch import PacketRecord

HEADER_PREFIX = "#aroma-trace v1"


class TraceFormatError(ValueError):
    pass


@dataclass
class Trace:
    pids: np.ndarray
    fids: np.ndarray
    universe_bits: int = 64
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.pids = np.asarray(self.pids, dtype=np.uint64)
        self.fids = np.asarray(self.fids, dtype=np.uint64)
        if self.pids.shape != self.fids.shape or self.pids.ndim != 1:
            raise ValueError("pids and fids must be 1-d arrays of equal length")

    def __len__(self):
        return int(self.pids.size)

    def __iter__(self):
        for p, f in zip(self.pids.tolist(), self.fids.tolist()):
            yield PacketRecord(f.to_bytes(8, "big"), p)

    @property
    def srcs(self) -> np.ndarray:
        return self.fids >> np.uint64(32)

    @property
    def dsts(self) -> np.ndarray:
        return self.fids & np.uint64(0xFFFFFFFF)

    def head(self, n: int) -> Trace:
        return Trace(self.pids[:n], self.fids[:n], self.universe_bits, dict(self.meta))

    def validate(self) -> None:
        if self.pids.size and np.any(np.diff(self.pids.astype(np.int64) if self.pids.max() < 2**63 else self.pids) <= 0):
            raise TraceFormatError("pids must be strictly increasing")
        if self.universe_bits < 64 and self.fids.size and int(self.fids.max()) >> self.universe_bits:
            raise TraceFormatError("flow id outside the declared universe")


def _flow_table(universe_size: int, rng: np.random.Generator) -> np.ndarray:
    """Unique (src, dst) flow ids with shared source prefixes.

    Sources cluster into a handful of /8 and /16 networks so prefix
    aggregation has structure to find.
    """
    n_src = max(1, universe_size // 4)
    a = rng.choice(np.arange(1, 224), size=16, replace=False)
    src = (
        (rng.choice(a, n_src).astype(np.uint64) << np.uint64(24))
        | (rng.integers(0, 64, n_src).astype(np.uint64) << np.uint64(16))
        | (rng.integers(0, 256, n_src).astype(np.uint64) << np.uint64(8))
        | rng.integers(0, 256, n_src).astype(np.uint64)
    )
    fids = np.empty(0, dtype=np.uint64)
    while fids.size < universe_size:
        need = universe_size - fids.size
        s = src[rng.integers(0, n_src, need)]
        d = rng.integers(0, 2**32, need, dtype=np.uint64)
        cand = np.concatenate([fids, (s << np.uint64(32)) | d])
        _, first = np.unique(cand, return_index=True)
        fids = cand[np.sort(first)]
    return fids


def zipf_probabilities(universe_size: int, skew: float) -> np.ndarray:
    w = np.arange(1, universe_size + 1, dtype=np.float64) ** -float(skew)
    return w / w.sum()


def gen_zipf_trace(n: int, skew: float, universe_size: int, seed: int) -> Trace:
    """``n`` packets whose flows follow Zipf(``skew``) over ``universe_size`` flows.

    Flow rank ``r`` (1-based) is drawn with probability proportional to
    ``r ** -skew``; ``meta['ranked_fids']`` maps rank-1 to the flow id.
    """
    n = int(n)
    universe_size = int(universe_size)
    if n < 1:
        raise ValueError("n must be >= 1")
    if skew < 0:
        raise ValueError("skew must be >= 0")
    if universe_size < 1:
        raise ValueError("universe_size must be >= 1")
    rng = np.random.default_rng(seed)
    table = _flow_table(universe_size, rng)
    ranks = rng.choice(universe_size, size=n, p=zipf_probabilities(universe_size, skew))
    meta = {"generator": "zipf", "n": n, "skew": skew, "universe_size": universe_size, "seed": seed}
    trace = Trace(np.arange(n, dtype=np.uint64), table[ranks], 64, meta)
    trace.meta["ranked_fids"] = table
    return trace


def gen_superspreader_trace(
    n_background: int,
    skew: float,
    universe_size: int,
    spreaders: int,
    fanout: int,
    seed: int,
    packets_per_flow: int = 1,
) -> Trace:
    """Zipf background plus ``spreaders`` sources that each contact
    ``fanout`` distinct destinations. Packets are shuffled together.
    """
    rng = np.random.default_rng(seed)
    bg = gen_zipf_trace(n_background, skew, universe_size, int(rng.integers(0, 2**63)))
    used = set((bg.meta["ranked_fids"] >> np.uint64(32)).tolist())
    planted = []
    while len(planted) < spreaders:
        s = int(rng.integers(1 << 24, 224 << 24))
        if s not in used:
            used.add(s)
            planted.append(s)
    parts = [bg.fids]
    for s in planted:
        dsts = rng.choice(2**32, size=fanout, replace=False).astype(np.uint64)
        fl = (np.uint64(s) << np.uint64(32)) | dsts
        parts.append(np.repeat(fl, packets_per_flow))
    fids = np.concatenate(parts)
    fids = fids[rng.permutation(fids.size)]
    meta = {
        "generator": "superspreader",
        "n_background": n_background,
        "skew": skew,
        "universe_size": universe_size,
        "spreaders": spreaders,
        "fanout": fanout,
        "seed": seed,
        "planted": planted,
    }
    return Trace(np.arange(fids.size, dtype=np.uint64), fids, 64, meta)


def _open_text(path: Path, mode: str):
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, mode + "b"), encoding="ascii", newline="\n")
    return open(path, mode, encoding="ascii", newline="\n")


def save_trace(trace: Trace, path, with_endpoints: bool = False) -> None:
    path = Path(path)
    width = max(1, (trace.universe_bits + 3) // 4)
    with _open_text(path, "w") as fh:
        fh.write(f"{HEADER_PREFIX} universe={trace.universe_bits}\n")
        for p, f in zip(trace.pids.tolist(), trace.fids.tolist()):
            if with_endpoints:
                fh.write(f"{p},{f:0{width}x},{f >> 32:08x},{f & 0xFFFFFFFF:08x}\n")
            else:
                fh.write(f"{p},{f:0{width}x}\n")


def load_trace(path) -> Trace:
    path = Path(path)
    with _open_text(path, "r") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(HEADER_PREFIX + " universe="):
            raise TraceFormatError(f"{path}: missing '{HEADER_PREFIX} universe=<bits>' header")
        try:
            bits = int(header.split("universe=", 1)[1])
        except ValueError:
            raise TraceFormatError(f"{path}: bad universe width in header") from None
        if not 1 <= bits <= 64:
            raise TraceFormatError(f"{path}: universe width must be in [1, 64]")
        pids, fids = [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cols = line.split(",")
            if len(cols) not in (2, 4):
                raise TraceFormatError(f"{path}:{lineno}: expected 2 or 4 columns")
            try:
                pid = int(cols[0])
                fid = int(cols[1], 16)
                if len(cols) == 4 and (int(cols[2], 16) << 32 | int(cols[3], 16)) != fid:
                    raise TraceFormatError(f"{path}:{lineno}: src/dst do not match fid")
            except ValueError as e:
                raise TraceFormatError(f"{path}:{lineno}: {e}") from None
            if not 0 <= pid < 2**64 or fid >> bits:
                raise TraceFormatError(f"{path}:{lineno}: value out of range")
            pids.append(pid)
            fids.append(fid)
    pid_arr = np.array(pids, dtype=np.uint64)
    if np.unique(pid_arr).size != pid_arr.size:
        raise TraceFormatError(f"{path}: duplicate pid")
    return Trace(pid_arr, np.array(fids, dtype=np.uint64), bits, {"source": str(path)})
