import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import exact_hh, exact_hhh, exact_size_hist, exact_superspreaders, wmrd_by_hand
from netwide.sim.metrics import metric_f1, metric_rmse, metric_wmrd
from netwide.sim.traces import Trace, gen_superspreader_trace, gen_zipf_trace
from netwide.sim.truth import compute_ground_truth

A = (0x0A000001 << 32) | 1
B = (0x0A000001 << 32) | 2
C = (0x0B000001 << 32) | 1


def test_hand_built_trace():
    fids = [A, A, A, A, A, B, B, B, C, C]
    t = Trace(np.arange(10), np.array(fids, dtype=np.uint64))
    gt = compute_ground_truth(t, theta=0.3, psi=1, prefix_lengths=(8, 32))
    assert gt.freqs == {A: 5, B: 3, C: 2}
    assert gt.heavy_hitters == {A, B}  # 3 >= 0.3 * 10
    assert gt.size_hist == {5: 1, 3: 1, 2: 1}
    assert gt.hhh == {(0x0A000000, 8), (0x0A000001, 32)}
    assert gt.superspreaders == {0x0A000001}
    assert gt.distinct_flows == 3 and gt.stream_size == 10


def test_truth_against_oracles():
    t = gen_superspreader_trace(20_000, 1.1, 3000, spreaders=4, fanout=300, seed=2)
    fids = t.fids.tolist()
    gt = compute_ground_truth(t, theta=0.002, psi=250)
    assert gt.heavy_hitters == exact_hh(fids, 0.002)
    assert gt.size_hist == exact_size_hist(fids)
    assert gt.hhh == exact_hhh(fids, 0.002, (8, 16, 24, 32))
    assert gt.superspreaders == exact_superspreaders(fids, 250) == set(t.meta["planted"])
    assert sum(i * c for i, c in gt.size_hist.items()) == len(t)


def test_truth_dict_shape():
    gt = compute_ground_truth(gen_zipf_trace(1000, 1.0, 100, 0))
    d = gt.as_dict()
    assert set(d) >= {"stream_size", "distinct_flows", "heavy_hitters", "hhh", "superspreaders", "size_hist", "freqs"}
    assert "freqs" not in gt.as_dict(with_freqs=False)


def test_wmrd_hand_example():
    assert metric_wmrd({1: 1, 2: 2}, {1: 2, 2: 1}) == pytest.approx(2 / 3)


def test_f1_hand_example():
    p, r, f = metric_f1({1, 2}, {1})
    assert (p, r) == (0.5, 1.0) and f == pytest.approx(2 / 3)


def test_perfect_estimates():
    truth = {1: 10, 2: 3}
    assert metric_rmse(dict(truth), truth) == 0
    assert metric_f1({1, 2}, {1, 2}) == (1.0, 1.0, 1.0)
    assert metric_wmrd({3: 1}, {3: 1}) == 0


def test_rmse_counts_missing_as_zero():
    assert metric_rmse({}, {1: 3, 2: 4}) == pytest.approx(math.sqrt((9 + 16) / 2))
    assert metric_rmse({9: 100}, {}) == 0


def test_metric_edge_cases():
    assert metric_wmrd({}, {}) == 0
    assert metric_wmrd({1: 5}, {}) == 2
    assert metric_f1(set(), set()) == (1.0, 1.0, 1.0)
    assert metric_f1({1}, set())[2] == 0
    assert metric_f1(set(), {1})[2] == 0


hists = st.dictionaries(st.integers(1, 50), st.floats(0, 1e4), max_size=20)


@given(hists, hists)
def test_wmrd_bounds_and_oracle(F, G):
    w = metric_wmrd(F, G)
    assert 0 <= w <= 2 + 1e-12
    if sum(F.values()) + sum(G.values()) > 0:
        assert w == pytest.approx(wmrd_by_hand(F, G))


@given(st.sets(st.integers(0, 30)), st.sets(st.integers(0, 30)))
def test_f1_bounds(a, b):
    p, r, f = metric_f1(a, b)
    assert 0 <= f <= 1 and 0 <= p <= 1 and 0 <= r <= 1


@given(st.dictionaries(st.integers(0, 20), st.floats(-1e3, 1e3)), st.dictionaries(st.integers(0, 20), st.integers(0, 1000)))
def test_rmse_nonnegative(est, truth):
    assert metric_rmse(est, truth) >= 0
