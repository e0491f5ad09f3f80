import json

import pytest

from netwide.cli import EXIT_CONFIG, EXIT_IO, EXIT_TRACE, EXIT_USAGE, main


def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_generate_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["generate", "--n", "1e4", "--skew", "1.0", "--universe", "1e3", "--seed", "1"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("#aroma-trace v1 universe=64\n")


def test_generate_rejects_bad_skew(tmp_path, capsys):
    code = main(["generate", "--n", "10", "--skew", "-1", "--universe", "5", "--out", str(tmp_path / "x")])
    assert code == EXIT_USAGE and _err(capsys)["error"] == "usage"


def test_generate_rejects_fractional_count(tmp_path):
    with pytest.raises(SystemExit):
        main(["generate", "--n", "1.5", "--universe", "5", "--out", str(tmp_path / "x")])


def test_params(capsys):
    assert main(["params", "--epsilon", "0.01", "--delta", "0.01", "--alpha", "2", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["M"] == 259316 and abs(out["convergence_packets"] - 633440) < 10
    assert main(["params", "--epsilon", "0.05", "--delta", "0.05", "--alpha", "1"]) == 0
    assert "7587" in capsys.readouterr().out
    assert main(["params", "--epsilon", "1.5", "--delta", "0.1"]) == EXIT_USAGE
    assert _err(capsys)["error"] == "usage"


def _config(tmp_path, **kw):
    data = {"generate": {"kind": "zipf", "n": 10000, "skew": 1.0, "universe": 2000, "seed": 3}, "m": 9}
    data.update(kw)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return p


def test_run_writes_report_and_csv(tmp_path):
    cfg = _config(tmp_path)
    outs = []
    for i in range(2):
        rep, series = tmp_path / f"r{i}.json", tmp_path / f"s{i}.csv"
        assert main(["run", str(cfg), "--out", str(rep), "--csv", str(series)]) == 0
        outs.append((rep.read_bytes(), series.read_bytes()))
    assert outs[0] == outs[1]
    report = json.loads(outs[0][0])
    assert report["trace"]["packets"] == 10000
    assert outs[0][1].startswith(b"task,x,metric,value\n")


def test_run_overrides_and_config_outputs(tmp_path):
    cfg = _config(tmp_path, report=str(tmp_path / "out" / "r.json"))
    assert main(["run", str(cfg), "--set", "K=3", "--set", "routing=uniform-subset"]) == 0
    rep = json.loads((tmp_path / "out" / "r.json").read_text())
    assert rep["config"]["K"] == 3 and len(rep["trace"]["switch_loads"]) == 3


def test_run_missing_trace(tmp_path, capsys):
    cfg = _config(tmp_path)
    data = json.loads(cfg.read_text())
    del data["generate"]
    data["trace_path"] = str(tmp_path / "nope.csv")
    cfg.write_text(json.dumps(data))
    assert main(["run", str(cfg)]) == EXIT_IO
    e = _err(capsys)
    assert e["error"] == "io" and "nope.csv" in e["message"]


def test_run_bad_config(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert _err(capsys)["error"] == "config"
    cfg = _config(tmp_path, routing="warp")
    assert main(["run", str(cfg)]) == EXIT_CONFIG


def test_run_malformed_trace(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("garbage\n")
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"trace_path": str(bad), "m": 8}))
    assert main(["run", str(p)]) == EXIT_TRACE
    assert _err(capsys)["error"] == "trace"


def test_truth_command(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    main(["generate", "--n", "5000", "--universe", "300", "--out", str(trace)])
    capsys.readouterr()
    assert main(["truth", "--trace", str(trace), "--theta", "0.01"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["stream_size"] == 5000 and out["theta"] == 0.01
    assert main(["truth", "--n", "100", "--universe", "10", "--freqs", "--out", str(tmp_path / "g.json")]) == 0
    assert "freqs" in json.loads((tmp_path / "g.json").read_text())
    assert main(["truth"]) == EXIT_USAGE


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0
    out = capsys.readouterr().out
    for cmd in ("generate", "params", "run", "truth"):
        assert cmd in out
