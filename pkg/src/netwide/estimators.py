"""Controller-side merge and measurement queries over the global sample.

Also carries the sample-size and convergence formulas used to size the
per-switch sketches.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import reduce

import numpy as np

from netwide.hashing import RANK_ONE
from netwide.sample_sketch import FLOW, PACKET, SampleSketch, merge, packet_fid_word


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class GlobalSample:
    merged: SampleSketch
    m_tilde: int
    v_hat: float
    p_hat: float | None  # None when the sample is empty

    @property
    def mode(self) -> str:
        return self.merged.mode


def merge_all(sketches) -> GlobalSample:
    sketches = list(sketches)
    if not sketches:
        raise EstimationError("merge_all needs at least one sketch")
    merged = reduce(merge, sketches[1:], sketches[0].copy())
    return global_sample(merged)


def global_sample(merged: SampleSketch) -> GlobalSample:
    v = _cardinality(merged)
    m_tilde = merged.filled_count()
    p = min(1.0, m_tilde / v) if v > 0 else None
    return GlobalSample(merged, m_tilde, v, p)


def _cardinality(sk: SampleSketch) -> float:
    if sk.filled_count() == 0:
        return 0.0
    # empty slots still contribute their stored 1.0
    total = float(np.sum(sk.ranks, dtype=np.float64)) / RANK_ONE
    return float(sk.num_slots) ** 2 / total


def estimate_cardinality(gs: GlobalSample | SampleSketch) -> float:
    """Harmonic-mean distinct count over slot ranks, 0 for an empty sample."""
    sk = gs.merged if isinstance(gs, GlobalSample) else gs
    return _cardinality(sk)


def sampling_probability(gs: GlobalSample) -> float:
    if gs.v_hat <= 0:
        raise EstimationError("sampling probability undefined on an empty sample")
    return min(1.0, gs.m_tilde / gs.v_hat)


def _require(gs: GlobalSample, mode: str) -> None:
    if gs.mode != mode:
        raise EstimationError(f"{mode}-mode sample required, got {gs.mode}-mode")


def _fid_key(x) -> int:
    if isinstance(x, (bytes, bytearray)):
        return packet_fid_word(bytes(x))
    return int(x)


def flow_key_bytes(word: int) -> bytes:
    return int(word).to_bytes(8, "big")


def sampled_flow_words(gs: GlobalSample) -> np.ndarray:
    """Flow field of every sampled packet (packet mode), as uint64 words."""
    _require(gs, PACKET)
    sk = gs.merged
    return sk.id_lo[sk.occupied()]


def sample_counts(gs: GlobalSample) -> dict[int, int]:
    """T_x for every flow present in the packet sample, keyed by flow word."""
    words, counts = np.unique(sampled_flow_words(gs), return_counts=True)
    return dict(zip(words.tolist(), counts.tolist()))


def estimate_frequency(gs: GlobalSample, x) -> float:
    _require(gs, PACKET)
    if gs.m_tilde == 0:
        return 0.0
    t = int(np.count_nonzero(sampled_flow_words(gs) == np.uint64(_fid_key(x))))
    if t == 0:
        return 0.0
    return t / sampling_probability(gs)


def frequency_estimates(gs: GlobalSample) -> dict[int, float]:
    """f_x estimate for each sampled flow; every other flow estimates to 0."""
    if gs.m_tilde == 0:
        return {}
    p = sampling_probability(gs)
    return {x: t / p for x, t in sample_counts(gs).items()}


def _check_theta(theta: float) -> None:
    if not 0 < theta < 1:
        raise EstimationError(f"theta must be in (0, 1), got {theta}")


def heavy_hitters(gs: GlobalSample, theta: float) -> set[int]:
    _require(gs, PACKET)
    _check_theta(theta)
    cut = theta * gs.m_tilde
    return {x for x, t in sample_counts(gs).items() if t >= cut}


def source_prefix(words: np.ndarray, length: int) -> np.ndarray:
    """Source-address prefix of length ``length`` from 8-byte flow words."""
    src = np.asarray(words, dtype=np.uint64) >> np.uint64(32)
    shift = np.uint64(32 - length)
    return (src >> shift) << shift


def _check_lengths(prefix_lengths) -> list[int]:
    lengths = list(prefix_lengths)
    if not lengths or any(not isinstance(L, (int, np.integer)) or not 1 <= L <= 32 for L in lengths):
        raise EstimationError(f"prefix lengths must be integers in [1, 32], got {lengths}")
    return lengths


def hierarchical_heavy_hitters(gs: GlobalSample, theta: float, prefix_lengths=(8, 16, 24, 32)) -> set[tuple[int, int]]:
    """Source prefixes seen in more than ``theta * M~`` sampled packets."""
    _require(gs, PACKET)
    _check_theta(theta)
    lengths = _check_lengths(prefix_lengths)
    words = sampled_flow_words(gs)
    cut = theta * gs.m_tilde
    out = set()
    for L in lengths:
        prefixes, counts = np.unique(source_prefix(words, L), return_counts=True)
        out.update((int(p), int(L)) for p, c in zip(prefixes, counts) if c > cut)
    return out


def flow_sample_sources(gs: GlobalSample) -> np.ndarray:
    """Leading 4 bytes (source address) of every sampled flow id."""
    _require(gs, FLOW)
    sk = gs.merged
    return (sk.id_hi[sk.occupied()] >> np.uint64(32)).astype(np.uint64)


def superspreaders(gs: GlobalSample, psi: float) -> set[int]:
    """Sources appearing in more than ``psi * p_hat`` sampled flows."""
    _require(gs, FLOW)
    if gs.m_tilde == 0:
        return set()
    cut = psi * sampling_probability(gs)
    srcs, counts = np.unique(flow_sample_sources(gs), return_counts=True)
    return {int(s) for s, c in zip(srcs, counts) if c > cut}


# -- flow size distribution ---------------------------------------------------


def flow_size_distribution_scaled(gs_packet: GlobalSample, gs_flow: GlobalSample) -> dict[int, float]:
    """Histogram of rounded ``T_x / p_hat`` over sampled flows, rescaled so
    the total flow count matches the flow-sample cardinality estimate.

    Only sensible when most flows are much larger than ``1 / p_hat``; see
    :func:`flow_size_distribution` for the default estimator.
    """
    _require(gs_packet, PACKET)
    _require(gs_flow, FLOW)
    if gs_packet.m_tilde == 0 or gs_flow.m_tilde == 0:
        return {}
    hist = Counter(max(1, round(f)) for f in frequency_estimates(gs_packet).values())
    scale = gs_flow.v_hat / sum(hist.values())
    return {i: c * scale for i, c in sorted(hist.items())}


def _binom_pmf_matrix(max_size: int, max_obs: int, p: float) -> np.ndarray:
    """B[i-1, k] = P(k of i packets sampled) for sizes 1..max_size."""
    from scipy.stats import binom

    sizes = np.arange(1, max_size + 1)[:, None]
    ks = np.arange(0, max_obs + 1)[None, :]
    return binom.pmf(ks, sizes, p)


def flow_size_distribution(
    gs_packet: GlobalSample,
    gs_flow: GlobalSample,
    small_count: int = 16,
    iterations: int = 2000,
) -> dict[int, float]:
    """Estimated number of flows of each size.

    Flows with more than ``small_count`` sampled packets are placed at
    ``round(T_x / p_hat)``. The rest, including flows that left no packet in
    the sample, are recovered by EM inversion of binomial thinning with rate
    ``p_hat``; their total is pinned by the flow-sample cardinality estimate.
    """
    _require(gs_packet, PACKET)
    _require(gs_flow, FLOW)
    if gs_packet.m_tilde == 0 or gs_flow.m_tilde == 0:
        return {}
    p = sampling_probability(gs_packet)
    counts = np.fromiter(sample_counts(gs_packet).values(), dtype=np.int64)
    big = counts[counts > small_count]
    small = counts[counts <= small_count]
    hist = Counter(max(1, round(t / p)) for t in big.tolist())

    n_small = max(gs_flow.v_hat - big.size, float(small.size))
    obs = np.bincount(small, minlength=small_count + 1).astype(np.float64)
    obs[0] = n_small - small.size
    if p >= 1.0:
        for k, c in enumerate(obs):
            if k > 0 and c > 0:
                hist[k] += c
        return {i: float(c) for i, c in sorted(hist.items())}

    max_size = max(2, int(math.ceil((small_count + 1) / p)))
    B = _binom_pmf_matrix(max_size, small_count, p)
    phi = np.full(max_size, 1.0 / max_size)
    for _ in range(iterations):
        joint = phi[:, None] * B
        denom = joint.sum(axis=0)
        denom[denom == 0] = np.inf
        new = (joint / denom[None, :] * obs[None, :]).sum(axis=1)
        new /= new.sum()
        done = np.max(np.abs(new - phi)) < 1e-12
        phi = new
        if done:
            break
    for i, c in enumerate(phi * n_small, start=1):
        if c > 0:
            hist[i] += float(c)
    return {i: float(c) for i, c in sorted(hist.items())}


# -- analysis formulas --------------------------------------------------------


def _check_unit(name: str, v: float) -> None:
    if not 0 < v < 1:
        raise ValueError(f"{name} must be in (0, 1), got {v}")


def required_sample_size(epsilon: float, delta: float) -> int:
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    return math.ceil(3 * epsilon**-2 * math.log2(4 / delta))


def beta(M: int, alpha: float, delta: float) -> float:
    if alpha <= 1:
        raise ValueError("beta is defined for alpha > 1")
    la = math.log(alpha)
    return 1 + 1 / la + math.log(2 / delta) / (M * la)


def convergence_bound(M: int, alpha: float, delta: float) -> int:
    """Packets after which at least ``M`` slots are filled w.h.p.

    ``alpha == 1`` is the coupon-collector bound ``M ln(2M/delta)``;
    ``alpha > 1`` is ``beta * M``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    _check_unit("delta", delta)
    if alpha == 1:
        return math.ceil(M * math.log(2 * M / delta))
    return math.ceil(beta(M, alpha, delta) * M)


def slot_bits(M: int, alpha: float) -> int:
    """Smallest ``m`` with ``2**m >= alpha * M``."""
    return max(1, math.ceil(math.log2(alpha * M) - 1e-12))


@dataclass(frozen=True)
class AnalysisParams:
    epsilon: float
    delta: float
    alpha: float

    @property
    def M(self) -> int:
        return required_sample_size(self.epsilon, self.delta)

    @property
    def beta(self) -> float | None:
        return beta(self.M, self.alpha, self.delta) if self.alpha > 1 else None

    @property
    def m(self) -> int:
        return slot_bits(self.M, self.alpha)

    @property
    def convergence(self) -> int:
        return convergence_bound(self.M, self.alpha, self.delta)

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "alpha": self.alpha,
            "M": self.M,
            "beta": self.beta,
            "m": self.m,
            "slots": 1 << self.m,
            "convergence_packets": self.convergence,
        }
