import gzip

import numpy as np
import pytest

from netwide.sim.traces import (
    Trace,
    TraceFormatError,
    gen_superspreader_trace,
    gen_zipf_trace,
    load_trace,
    save_trace,
    zipf_probabilities,
)


def test_deterministic_and_unique_pids():
    a = gen_zipf_trace(5000, 1.0, 1000, 3)
    b = gen_zipf_trace(5000, 1.0, 1000, 3)
    assert np.array_equal(a.fids, b.fids) and np.array_equal(a.pids, b.pids)
    assert np.array_equal(a.pids, np.arange(5000))
    a.validate()
    assert not np.array_equal(a.fids, gen_zipf_trace(5000, 1.0, 1000, 4).fids)


def test_single_packet():
    t = gen_zipf_trace(1, 1.0, 100, 0)
    assert len(t) == 1 and np.unique(t.fids).size == 1


def test_skew_zero_is_flat():
    t = gen_zipf_trace(100_000, 0.0, 100, 1)
    _, c = np.unique(t.fids, return_counts=True)
    assert c.size == 100
    assert c.max() / c.min() < 1.5


def test_rank_curve_matches_analytic():
    n, U, s = 10**6, 10_000, 1.0
    t = gen_zipf_trace(n, s, U, 2)
    table = t.meta["ranked_fids"]
    expected = zipf_probabilities(U, s)[:10] * n
    got = np.array([np.count_nonzero(t.fids == table[r]) for r in range(10)])
    assert np.all(np.abs(got - expected) / expected < 0.05)


@pytest.mark.parametrize("args", [(0, 1.0, 10, 0), (10, -1.0, 10, 0), (10, 1.0, 0, 0)])
def test_invalid_generator_args(args):
    with pytest.raises(ValueError):
        gen_zipf_trace(*args)


def test_flow_ids_are_pairs_with_shared_prefixes():
    t = gen_zipf_trace(20_000, 1.0, 4000, 5)
    srcs = t.srcs
    assert np.unique(srcs >> np.uint64(24)).size <= 16
    assert np.all(t.dsts < 2**32)


def test_superspreader_trace():
    t = gen_superspreader_trace(10_000, 1.0, 1000, spreaders=3, fanout=400, seed=1)
    assert len(t) == 10_000 + 3 * 400
    for s in t.meta["planted"]:
        mine = t.fids[t.srcs == s]
        assert np.unique(mine).size == 400
    t.validate()


@pytest.mark.parametrize("suffix", [".csv", ".csv.gz"])
@pytest.mark.parametrize("endpoints", [False, True])
def test_round_trip(tmp_path, suffix, endpoints):
    t = gen_zipf_trace(300, 1.1, 50, 9)
    path = tmp_path / f"t{suffix}"
    save_trace(t, path, with_endpoints=endpoints)
    back = load_trace(path)
    assert np.array_equal(back.pids, t.pids) and np.array_equal(back.fids, t.fids)
    assert back.universe_bits == 64


def test_same_args_same_bytes(tmp_path):
    for name in ("a", "b"):
        save_trace(gen_zipf_trace(200, 1.0, 30, 1), tmp_path / name)
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_header_and_rows(tmp_path):
    t = Trace(np.array([0, 1]), np.array([0x0A000001C0A80001, 5]), universe_bits=64)
    save_trace(t, tmp_path / "x.csv", with_endpoints=True)
    lines = (tmp_path / "x.csv").read_text().splitlines()
    assert lines[0] == "#aroma-trace v1 universe=64"
    assert lines[1] == "0,0a000001c0a80001,0a000001,c0a80001"


@pytest.mark.parametrize(
    "body",
    [
        "no header\n0,1\n",
        "#aroma-trace v1 universe=abc\n0,1\n",
        "#aroma-trace v1 universe=99\n0,1\n",
        "#aroma-trace v1 universe=64\n0\n",
        "#aroma-trace v1 universe=64\nx,1\n",
        "#aroma-trace v1 universe=64\n0,zz\n",
        "#aroma-trace v1 universe=8\n0,1ff\n",
        "#aroma-trace v1 universe=64\n0,1\n0,2\n",
        "#aroma-trace v1 universe=64\n0,0000000100000002,00000001,00000003\n",
        "#aroma-trace v1 universe=64\n-1,1\n",
    ],
)
def test_malformed_files(tmp_path, body):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(TraceFormatError):
        load_trace(p)


def test_gzip_transparent(tmp_path):
    p = tmp_path / "g.csv.gz"
    with gzip.open(p, "wt") as fh:
        fh.write("#aroma-trace v1 universe=16\n3,00ff\n")
    t = load_trace(p)
    assert t.pids.tolist() == [3] and t.fids.tolist() == [255] and t.universe_bits == 16


def test_validate_rejects_bad_traces():
    with pytest.raises(TraceFormatError):
        Trace(np.array([1, 1]), np.array([0, 0])).validate()
    with pytest.raises(TraceFormatError):
        Trace(np.array([0]), np.array([300]), universe_bits=8).validate()
    with pytest.raises(ValueError):
        Trace(np.array([0, 1]), np.array([0]))


def test_iteration_yields_packet_records():
    t = gen_zipf_trace(5, 1.0, 3, 0)
    recs = list(t)
    assert [r.pid for r in recs] == list(range(5))
    assert all(len(r.fid) == 8 for r in recs)
    assert len(t.head(2)) == 2
