from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from netwide.estimators import source_prefix
from netwide.sim.traces import Trace


@dataclass
class GroundTruth:
    stream_size: int
    distinct_flows: int
    freqs: dict[int, int]
    heavy_hitters: set[int]
    hhh: set[tuple[int, int]]
    superspreaders: set[int]
    size_hist: dict[int, int]
    theta: float
    psi: float
    prefix_lengths: tuple[int, ...]

    def check(self) -> None:
        assert sum(self.freqs.values()) == self.stream_size
        assert sum(i * c for i, c in self.size_hist.items()) == self.stream_size
        assert sum(self.size_hist.values()) == self.distinct_flows

    def as_dict(self, with_freqs: bool = True) -> dict:
        out = {
            "stream_size": self.stream_size,
            "distinct_flows": self.distinct_flows,
            "theta": self.theta,
            "psi": self.psi,
            "prefix_lengths": list(self.prefix_lengths),
            "heavy_hitters": sorted(f"{x:016x}" for x in self.heavy_hitters),
            "hhh": sorted(f"{p:08x}/{L}" for p, L in self.hhh),
            "superspreaders": sorted(f"{s:08x}" for s in self.superspreaders),
            "size_hist": {str(i): c for i, c in sorted(self.size_hist.items())},
        }
        if with_freqs:
            out["freqs"] = {f"{x:016x}": c for x, c in sorted(self.freqs.items())}
        return out


def compute_ground_truth(trace: Trace, theta: float = 0.001, psi: float = 1000, prefix_lengths=(8, 16, 24, 32)) -> GroundTruth:
    """Exact answers for every measurement task on ``trace``.

    Heavy hitters use ``f_x >= theta |S|``, HHH prefixes need more than
    ``theta |S|`` packets, superspreaders more than ``psi`` distinct
    destinations.
    """
    n = len(trace)
    flows, counts = np.unique(trace.fids, return_counts=True)
    freqs = dict(zip(flows.tolist(), counts.tolist()))
    hh = {x for x, c in freqs.items() if c >= theta * n}
    hhh = set()
    for L in prefix_lengths:
        prefixes, pc = np.unique(source_prefix(trace.fids, L), return_counts=True)
        hhh.update((int(p), int(L)) for p, c in zip(prefixes, pc) if c > theta * n)
    srcs, fanout = np.unique(flows >> np.uint64(32), return_counts=True)
    ss = {int(s) for s, c in zip(srcs, fanout) if c > psi}
    hist = dict(sorted(Counter(counts.tolist()).items()))
    gt = GroundTruth(n, int(flows.size), freqs, hh, hhh, ss, hist, theta, psi, tuple(prefix_lengths))
    gt.check()
    return gt
