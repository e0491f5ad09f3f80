import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netwide.sim.hopcount import hop_count_distribution
from netwide.sim.routing import KINDS, RoutingModel, clamped_hops, duplication, membership, route
from netwide.sim.traces import gen_zipf_trace

TRACE = gen_zipf_trace(20_000, 1.0, 500, 0)


def test_single_switch_gets_everything():
    parts = route(TRACE, RoutingModel("single-switch", 1), 0)
    assert len(parts) == 1 and np.array_equal(parts[0], np.arange(len(TRACE)))


def test_uniform_subset_p1_is_full_duplication():
    parts = route(TRACE, RoutingModel("uniform-subset", 5, subset_prob=1.0), 0)
    assert all(p.size == len(TRACE) for p in parts)
    assert duplication(parts, len(TRACE)) == 5


@given(st.sampled_from(KINDS), st.integers(1, 16), st.integers(0, 1000))
def test_coverage_always_holds(kind, K, seed):
    t = TRACE.head(2000)
    mem = membership(t, RoutingModel(kind, K), seed)
    assert mem.shape == (2000, K) and mem.any(axis=1).all()


def test_hop_count_duplication_matches_clamped_mean():
    model = RoutingModel("hop-count", 16)
    dist = clamped_hops(model)
    expected = float(np.dot(np.arange(17), dist))
    parts = route(TRACE, model, 3)
    assert abs(duplication(parts, len(TRACE)) - expected) / expected < 0.05


def test_clamped_distribution():
    d = clamped_hops(RoutingModel("hop-count", 8))
    assert d[0] == 0 and d.sum() == pytest.approx(1)
    raw = hop_count_distribution(98400)
    assert d[8] == pytest.approx(raw[8:].sum())
    assert clamped_hops(RoutingModel("hop-count", 1)).tolist() == [0.0, 1.0]


def test_fixed_path_is_per_flow():
    mem = membership(TRACE, RoutingModel("fixed-path", 8), 1)
    for f in np.unique(TRACE.fids)[:50]:
        rows = mem[TRACE.fids == f]
        assert (rows == rows[0]).all()


def test_routing_deterministic_per_seed():
    m = RoutingModel("hop-count", 6)
    assert np.array_equal(membership(TRACE, m, 4), membership(TRACE, m, 4))


def test_invalid_models():
    with pytest.raises(ValueError):
        RoutingModel("teleport", 2)
    with pytest.raises(ValueError):
        RoutingModel("single-switch", 0)
    with pytest.raises(ValueError):
        RoutingModel("uniform-subset", 2, subset_prob=0)
