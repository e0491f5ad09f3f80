"""Assign every packet of a trace to one or more of K measurement switches."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from netwide.sim.hopcount import hop_count_distribution
from netwide.sim.traces import Trace

KINDS = ("single-switch", "uniform-subset", "hop-count", "fixed-path")


@dataclass(frozen=True)
class RoutingModel:
    """``kind`` is one of :data:`KINDS`.

    ``hop_nodes`` is the network size N of the hop-count model;
    ``subset_prob`` the per-switch inclusion probability of uniform-subset.
    ``fixed-path`` draws one switch set per flow from the hop-count model.
    """

    kind: str = "single-switch"
    K: int = 1
    hop_nodes: float = 98400
    subset_prob: float = 0.5
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"routing kind must be one of {KINDS}, got {self.kind!r}")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.kind == "uniform-subset" and not 0 < self.subset_prob <= 1:
            raise ValueError("subset_prob must be in (0, 1]")


def clamped_hops(model: RoutingModel) -> np.ndarray:
    """Distribution of the number of switches visited, supported on 1..K."""
    probs = hop_count_distribution(model.hop_nodes, k_max=max(40, model.K))
    out = np.zeros(model.K + 1)
    out[1:model.K] = probs[1:model.K]
    out[1] += probs[0]
    out[model.K] += probs[model.K:].sum() if model.K > 1 else 0.0
    if model.K == 1:
        out[1] = 1.0
    return out / out.sum()


def _choose_switches(h: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """Membership matrix: row i picks ``h[i]`` distinct switches uniformly."""
    out = np.empty((h.size, K), dtype=bool)
    step = 1 << 17
    for lo in range(0, h.size, step):
        hh = h[lo:lo + step]
        # rank of each switch in a random permutation; keep the first h
        pos = np.argsort(np.argsort(rng.random((hh.size, K)), axis=1), axis=1)
        out[lo:lo + step] = pos < hh[:, None]
    return out


def membership(trace: Trace, model: RoutingModel, seed: int) -> np.ndarray:
    n, K = len(trace), model.K
    rng = np.random.default_rng(seed)
    if model.kind == "single-switch":
        mem = np.zeros((n, K), dtype=bool)
        mem[:, 0] = True
    elif model.kind == "uniform-subset":
        mem = rng.random((n, K)) < model.subset_prob
        lonely = np.flatnonzero(~mem.any(axis=1))
        mem[lonely, rng.integers(0, K, lonely.size)] = True
    elif model.kind == "hop-count":
        dist = clamped_hops(model)
        h = rng.choice(K + 1, size=n, p=dist)
        mem = _choose_switches(h, K, rng)
    else:
        flows, inverse = np.unique(trace.fids, return_inverse=True)
        dist = clamped_hops(model)
        h = rng.choice(K + 1, size=flows.size, p=dist)
        mem = _choose_switches(h, K, rng)[inverse]
    if n and not mem.any(axis=1).all():
        raise AssertionError("routing left a packet unobserved")
    return mem


def route(trace: Trace, model: RoutingModel, seed: int) -> list[np.ndarray]:
    """Per-switch packet indices, each in stream order.

    Every packet lands on at least one switch, so the union of the
    substreams is the whole trace.
    """
    mem = membership(trace, model, seed)
    return [np.flatnonzero(mem[:, k]) for k in range(model.K)]


def duplication(parts: list[np.ndarray], n: int) -> float:
    return sum(p.size for p in parts) / n if n else 0.0
