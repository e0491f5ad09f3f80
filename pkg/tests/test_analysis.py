import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import ceil_sample_size
from netwide.estimators import AnalysisParams, beta, convergence_bound, required_sample_size, slot_bits
from netwide.sample_sketch import FLOW, new_sketch


def test_required_sample_size_values():
    assert required_sample_size(0.01, 0.01) == 259316
    assert required_sample_size(0.05, 0.05) == 7587
    assert required_sample_size(0.05, 0.05) == math.ceil(1200 * math.log2(80))


@pytest.mark.parametrize("eps,delta", [(1, 0.1), (0.1, 1), (0, 0.1), (0.1, 0), (1.5, 0.1)])
def test_required_sample_size_rejects(eps, delta):
    with pytest.raises(ValueError):
        required_sample_size(eps, delta)


@given(st.floats(0.005, 0.99), st.floats(0.001, 0.99))
def test_required_sample_size_oracle(eps, delta):
    assert required_sample_size(eps, delta) == ceil_sample_size(eps, delta)


def test_convergence_alpha2_near_published_figure():
    b = convergence_bound(259316, 2, 0.01)
    assert b == 633438
    assert abs(b - 630_000) / 630_000 < 0.01


def test_convergence_alpha1():
    b = convergence_bound(259316, 1, 0.01)
    assert b == math.ceil(259316 * math.log(2 * 259316 / 0.01))
    assert 4.6e6 < b < 4.62e6
    assert abs(b - 4.4e6) / 4.4e6 < 0.10


def test_beta_small_example():
    assert beta(1, 2, 0.5) == pytest.approx(1 + 1 / math.log(2) + math.log(4) / math.log(2))
    assert beta(1, 2, 0.5) == pytest.approx(4.4427, abs=1e-4)
    assert convergence_bound(1, 2, 0.5) == 5


def test_convergence_errors():
    with pytest.raises(ValueError):
        convergence_bound(10, 0.5, 0.1)
    with pytest.raises(ValueError):
        convergence_bound(0, 2, 0.1)
    with pytest.raises(ValueError):
        beta(10, 1, 0.1)


def test_analysis_params():
    p = AnalysisParams(0.01, 0.01, 2.0)
    assert p.M == 259316 and p.m == 19 and 2**p.m >= 2 * p.M
    assert p.convergence == 633438
    assert AnalysisParams(0.05, 0.05, 1.0).beta is None
    d = p.as_dict()
    assert d["slots"] == 2**19 and d["convergence_packets"] == 633438


@given(st.integers(1, 10**7), st.floats(1, 64))
def test_slot_bits_is_smallest_cover(M, alpha):
    m = slot_bits(M, alpha)
    assert 2**m >= alpha * M * (1 - 1e-9)
    assert m == 1 or 2 ** (m - 1) < alpha * M


def test_slot_fill_after_beta_m_arrivals():
    M, alpha, delta = 256, 2, 0.1
    n = convergence_bound(M, alpha, delta)
    m = slot_bits(M, alpha)
    ok = 0
    runs = 400
    for seed in range(runs):
        sk = new_sketch(FLOW, m, seed)
        ids = np.random.default_rng(seed).integers(0, 2**64, n, dtype=np.uint64)
        sk.add_packets(np.zeros_like(ids), ids)
        ok += sk.filled_count() >= M
    assert ok / runs >= 1 - delta / 2
