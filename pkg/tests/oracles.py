"""Slow, obviously-correct reference implementations used by the tests.

Nothing here shares code with the vectorized paths under test beyond the
scalar hash pair itself.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict

MASK64 = (1 << 64) - 1


def splitmix64_stream(state: int, count: int) -> list[int]:
    """Reference splitmix64 generator (Vigna), written from the published recipe."""
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


def slot_min_oracle(hp, keys):
    """Per-slot (rank, key) of the minimum-rank key; ties keep the earliest."""
    best = {}
    for k in keys:
        j, r = hp.slot_of(k), hp.rank_of(k)
        if j not in best or r < best[j][0]:
            best[j] = (r, k)
    return best


def exact_flow_counts(fids) -> dict[int, int]:
    return dict(Counter(int(f) for f in fids))


def exact_size_hist(fids) -> dict[int, int]:
    return dict(Counter(exact_flow_counts(fids).values()))


def exact_hh(fids, theta) -> set[int]:
    counts = exact_flow_counts(fids)
    n = sum(counts.values())
    return {x for x, c in counts.items() if c >= theta * n}


def exact_superspreaders(fids, psi) -> set[int]:
    dsts = defaultdict(set)
    for f in fids:
        f = int(f)
        dsts[f >> 32].add(f & 0xFFFFFFFF)
    return {s for s, d in dsts.items() if len(d) > psi}


def exact_hhh(fids, theta, lengths) -> set[tuple[int, int]]:
    n = len(fids)
    out = set()
    for L in lengths:
        c = Counter((int(f) >> 32) >> (32 - L) << (32 - L) for f in fids)
        out.update((p, L) for p, v in c.items() if v > theta * n)
    return out


def cmd_cell_sets(c, fids, pids):
    """Exact set of packet identities landing in every (row, column) cell."""
    cells = defaultdict(set)
    for f, p in zip(fids, pids):
        for l in range(c.d):
            cells[(l, c.column(l, int(f)))].add((int(p), int(f)))
    return cells


def wmrd_by_hand(F, G) -> float:
    sizes = set(F) | set(G)
    num = sum(abs(F.get(i, 0) - G.get(i, 0)) for i in sizes)
    den = sum((F.get(i, 0) + G.get(i, 0)) / 2 for i in sizes)
    return num / den


def ceil_sample_size(eps, delta) -> int:
    return math.ceil(3 * eps ** -2 * math.log2(4 / delta))
