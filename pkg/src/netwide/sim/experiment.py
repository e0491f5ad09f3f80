"""End-to-end runs: route a trace, sketch per switch, merge, estimate, score."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from netwide.baselines.cm_distinct import CMDistinct, cmd_merge
from netwide.baselines.count_distinct import CountDistinctSketch, register_bits_for, volume_estimate
from netwide.config import ExperimentConfig
from netwide.estimators import (
    estimate_frequency,
    flow_size_distribution,
    frequency_estimates,
    heavy_hitters,
    hierarchical_heavy_hitters,
    merge_all,
    superspreaders,
)
from netwide.hashing import HashPair
from netwide.sample_sketch import FLOW, PACKET, SampleSketch
from netwide.sim.metrics import metric_f1, metric_rmse, metric_wmrd
from netwide.sim.routing import RoutingModel, duplication, route
from netwide.sim.traces import Trace, gen_superspreader_trace, gen_zipf_trace, load_trace
from netwide.sim.truth import GroundTruth, compute_ground_truth


def library_version() -> str:
    from netwide import __version__

    return __version__


@dataclass
class ExperimentReport:
    config: dict
    version: str
    seeds: dict
    trace: dict
    truth: dict
    estimates: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    convergence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "version": self.version,
            "seeds": self.seeds,
            "trace": self.trace,
            "truth": self.truth,
            "estimates": self.estimates,
            "metrics": self.metrics,
            "convergence": self.convergence,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def series_rows(self) -> list[tuple]:
        """Long-format rows ``(task, x, metric, value)`` for plotting."""
        rows = []
        for task, ms in sorted(self.metrics.items()):
            for name, v in sorted(ms.items()):
                rows.append((task, "", name, v))
        for name, points in sorted(self.convergence.items()):
            for t, v in points:
                rows.append(("convergence", t, name, v))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["task", "x", "metric", "value"])
        w.writerows(self.series_rows())
        return buf.getvalue()


def build_trace(cfg: ExperimentConfig) -> Trace:
    if cfg.trace_path is not None:
        return load_trace(cfg.trace_path)
    g = dict(cfg.generate)
    kind = g.pop("kind", "zipf")
    if kind == "zipf":
        return gen_zipf_trace(int(float(g["n"])), float(g.get("skew", 1.0)), int(float(g["universe"])), int(g.get("seed", 0)))
    return gen_superspreader_trace(
        int(float(g["n"])),
        float(g.get("skew", 1.0)),
        int(float(g["universe"])),
        int(g.get("spreaders", 50)),
        int(g.get("fanout", 2000)),
        int(g.get("seed", 0)),
        int(g.get("packets_per_flow", 1)),
    )


def checkpoint_schedule(points, n: int) -> list[int]:
    if points == "pow2":
        pts = [1 << j for j in range(max(1, n).bit_length()) if 1 << j <= n]
    else:
        pts = sorted({int(t) for t in points if 0 < int(t) <= n})
    if n and (not pts or pts[-1] != n):
        pts.append(n)
    return pts


def fill_curve(slots: np.ndarray, checkpoints: list[int]) -> list[tuple[int, int]]:
    """Filled-slot count after each checkpoint, from first arrivals per slot."""
    if slots.size == 0:
        return [(t, 0) for t in checkpoints]
    _, first = np.unique(slots, return_index=True)
    first.sort()
    return [(t, int(np.searchsorted(first, t))) for t in checkpoints]


def _sketch_switch(idx, trace: Trace, m: int, seed: int, baseline: dict | None):
    pids, fids = trace.pids[idx], trace.fids[idx]
    pk = SampleSketch(PACKET, m, seed)
    fl = SampleSketch(FLOW, m, seed)
    pk.add_packets(pids, fids)
    fl.add_packets(pids, fids)
    out = {"packet": pk, "flow": fl}
    if baseline is not None:
        cds = CountDistinctSketch(baseline["cds_bits"], baseline["seed"])
        cds.add_packets(pids, fids)
        cmd = CMDistinct(baseline["epsilon"], baseline["delta"], baseline["seed"], baseline["register_bits"])
        cmd.add_packets(pids, fids)
        out["volume"] = cds
        out["cmd"] = cmd
    return out


def _hex_flow(x: int) -> str:
    return f"{x:016x}"


def _clean(v: float) -> float:
    # JSON has no inf/nan; keep reports parseable
    v = float(v)
    return v if math.isfinite(v) else None


def run_experiment(cfg: ExperimentConfig, trace: Trace | None = None, truth: GroundTruth | None = None) -> ExperimentReport:
    cfg.validate()
    trace = build_trace(cfg) if trace is None else trace
    trace.validate()
    n = len(trace)
    if n == 0:
        raise ValueError("trace is empty")
    m = cfg.slot_bits()
    truth = truth or compute_ground_truth(trace, cfg.theta, cfg.psi, tuple(cfg.prefix_lengths))

    model = RoutingModel(cfg.routing, cfg.K, cfg.hop_nodes, cfg.subset_prob)
    parts = route(trace, model, cfg.routing_seed)
    covered = np.zeros(n, dtype=bool)
    for p in parts:
        covered[p] = True
    assert covered.all(), "routing must cover every packet"

    baseline = None
    if cfg.baselines:
        baseline = {
            "epsilon": cfg.baseline_epsilon,
            "delta": cfg.baseline_delta,
            "register_bits": cfg.baseline_register_bits,
            "seed": cfg.baseline_seed,
            "cds_bits": min(16, register_bits_for(cfg.baseline_epsilon / 8)),
        }
    job = lambda idx: _sketch_switch(idx, trace, m, cfg.sketch_seed, baseline)  # noqa: E731
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            per_switch = list(pool.map(job, parts))
    else:
        per_switch = [job(p) for p in parts]

    gp = merge_all(s["packet"] for s in per_switch)
    gf = merge_all(s["flow"] for s in per_switch)

    est, met = {}, {}
    tasks = set(cfg.tasks)
    if "cardinality" in tasks:
        est["cardinality"] = {"packets": gp.v_hat, "flows": gf.v_hat, "m_tilde_packet": gp.m_tilde, "m_tilde_flow": gf.m_tilde, "p_hat": gp.p_hat}
        met["cardinality"] = {
            "packets_rel_error": abs(gp.v_hat - n) / n,
            "flows_rel_error": abs(gf.v_hat - truth.distinct_flows) / truth.distinct_flows,
        }
    if "frequency" in tasks and gp.p_hat is not None:
        fe = frequency_estimates(gp)
        est["frequency"] = {_hex_flow(x): v for x, v in sorted(fe.items())}
        errs = [abs(estimate_frequency(gp, x) - f) for x, f in truth.freqs.items() if f >= cfg.theta * n]
        met["frequency"] = {
            "rmse": metric_rmse(fe, truth.freqs),
            "max_abs_error_hh": max(errs, default=0.0),
        }
    if "heavy_hitters" in tasks:
        hh = heavy_hitters(gp, cfg.theta)
        est["heavy_hitters"] = sorted(_hex_flow(x) for x in hh)
        met["heavy_hitters"] = dict(zip(("precision", "recall", "f1"), metric_f1(hh, truth.heavy_hitters)))
    if "hhh" in tasks:
        hhh = hierarchical_heavy_hitters(gp, cfg.theta, cfg.prefix_lengths)
        est["hhh"] = sorted(f"{p:08x}/{L}" for p, L in hhh)
        met["hhh"] = dict(zip(("precision", "recall", "f1"), metric_f1(hhh, truth.hhh)))
    if "superspreaders" in tasks and gf.p_hat is not None:
        ss = superspreaders(gf, cfg.psi)
        est["superspreaders"] = sorted(f"{s:08x}" for s in ss)
        met["superspreaders"] = dict(zip(("precision", "recall", "f1"), metric_f1(ss, truth.superspreaders)))
    if "flow_size" in tasks and gp.p_hat is not None and gf.p_hat is not None:
        fsd = flow_size_distribution(gp, gf)
        est["flow_size"] = {str(i): c for i, c in fsd.items()}
        met["flow_size"] = {"wmrd": metric_wmrd(fsd, truth.size_hist)}

    if baseline is not None:
        vol = volume_estimate(s["volume"] for s in per_switch)
        cmd = cmd_merge(s["cmd"] for s in per_switch)
        flows = np.fromiter(truth.freqs.keys(), dtype=np.uint64, count=len(truth.freqs))
        cmd_est = dict(zip(flows.tolist(), cmd.query_many(flows).tolist()))
        cmd_hh = {x for x, f in cmd_est.items() if f >= cfg.theta * vol}
        est["baseline_volume"] = vol
        est["baseline_cmd_heavy_hitters"] = sorted(_hex_flow(x) for x in cmd_hh)
        met["baseline_volume"] = {"rel_error": abs(vol - n) / n}
        met["baseline_cmd"] = {
            "rmse": metric_rmse(cmd_est, truth.freqs),
            **dict(zip(("hh_precision", "hh_recall", "hh_f1"), metric_f1(cmd_hh, truth.heavy_hitters))),
        }

    cps = checkpoint_schedule(cfg.checkpoints, n)
    hp = HashPair(cfg.sketch_seed, m)
    convergence = {
        "m_tilde_packet": fill_curve(hp.slots_of_words(trace.pids, 8), cps),
        "m_tilde_flow": fill_curve(hp.slots_of_words(trace.fids, 8), cps),
    }
    assert convergence["m_tilde_packet"][-1][1] == gp.m_tilde
    assert convergence["m_tilde_flow"][-1][1] == gf.m_tilde

    met = {task: {k: _clean(v) for k, v in ms.items()} for task, ms in met.items()}
    trace_info = {
        "packets": n,
        "distinct_flows": truth.distinct_flows,
        "duplication": duplication(parts, n),
        "switch_loads": [int(p.size) for p in parts],
        "meta": {k: v for k, v in trace.meta.items() if k != "ranked_fids"},
    }
    return ExperimentReport(
        config=cfg.to_dict(),
        version=library_version(),
        seeds={"routing": cfg.routing_seed, "sketch": cfg.sketch_seed, "baseline": cfg.baseline_seed},
        trace=trace_info,
        truth=truth.as_dict(with_freqs=False),
        estimates=est,
        metrics=met,
        convergence={k: [list(p) for p in v] for k, v in convergence.items()},
    )
