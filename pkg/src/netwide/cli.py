"""Command-line entry point: ``netwide {generate,params,run,truth}``.

Errors go to stderr as one JSON object ``{"error": <category>, "message": ...}``
and map to fixed exit codes so scripts can tell them apart.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from netwide.config import ConfigError, load_config
from netwide.estimators import AnalysisParams
from netwide.sim.traces import TraceFormatError, gen_superspreader_trace, gen_zipf_trace, load_trace, save_trace
from netwide.sim.truth import compute_ground_truth

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_IO = 4
EXIT_TRACE = 5
EXIT_INTERNAL = 6


class UsageError(ValueError):
    pass


def _count(text: str) -> int:
    """Accept counts like ``1e6`` as long as they are whole numbers."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if v != int(v) or v < 0:
        raise argparse.ArgumentTypeError(f"not a non-negative integer: {text!r}")
    return int(v)


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


def cmd_generate(args) -> int:
    if args.skew < 0:
        raise UsageError("--skew must be >= 0")
    if args.n < 1 or args.universe < 1:
        raise UsageError("--n and --universe must be >= 1")
    if args.kind == "zipf":
        trace = gen_zipf_trace(args.n, args.skew, args.universe, args.seed)
    else:
        trace = gen_superspreader_trace(args.n, args.skew, args.universe, args.spreaders, args.fanout, args.seed)
    save_trace(trace, args.out, with_endpoints=args.endpoints)
    print(json.dumps({"out": str(args.out), "packets": len(trace)}))
    return EXIT_OK


def cmd_params(args) -> int:
    try:
        p = AnalysisParams(args.epsilon, args.delta, args.alpha)
        info = p.as_dict()
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.json:
        print(json.dumps(info, sort_keys=True))
    else:
        for k in ("epsilon", "delta", "alpha", "M", "beta", "m", "slots", "convergence_packets"):
            print(f"{k:20s} {info[k]}")
    return EXIT_OK


def cmd_run(args) -> int:
    from netwide.sim.experiment import run_experiment

    overrides = list(args.set or [])
    if args.workers is not None:
        overrides.append(f"workers={args.workers}")
    cfg = load_config(args.config, overrides)
    report = run_experiment(cfg)
    out = args.out or cfg.report
    csv_path = args.csv or cfg.csv
    _write(out, report.to_json())
    if csv_path:
        _write(csv_path, report.to_csv())
    return EXIT_OK


def cmd_truth(args) -> int:
    if args.trace:
        trace = load_trace(args.trace)
    else:
        if args.n is None or args.universe is None:
            raise UsageError("give --trace or generation parameters --n and --universe")
        trace = gen_zipf_trace(args.n, args.skew, args.universe, args.seed)
    gt = compute_ground_truth(trace, args.theta, args.psi, tuple(args.prefix_lengths))
    _write(args.out, json.dumps(gt.as_dict(with_freqs=args.freqs), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="netwide", description="Network-wide measurement experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic trace file")
    g.add_argument("--n", type=_count, required=True, help="packet count (1e6 style accepted)")
    g.add_argument("--skew", type=float, default=1.0, help="Zipf skew")
    g.add_argument("--universe", type=_count, required=True, help="number of distinct flows to draw from")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--kind", choices=("zipf", "superspreader"), default="zipf")
    g.add_argument("--spreaders", type=int, default=50, help="planted sources (superspreader kind)")
    g.add_argument("--fanout", type=int, default=2000, help="destinations per planted source")
    g.add_argument("--endpoints", action="store_true", help="also write src/dst columns")
    g.add_argument("--out", required=True, help="output path; .gz compresses")
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("params", help="sample size, slot count and convergence bound")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_params)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    r.add_argument("--out", help="report path (default: config 'report', else stdout)")
    r.add_argument("--csv", help="long-format CSV path for plotting")
    r.add_argument("--workers", type=int, help="per-switch worker threads")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("truth", help="exact ground truth for a trace")
    t.add_argument("--trace")
    t.add_argument("--n", type=_count)
    t.add_argument("--skew", type=float, default=1.0)
    t.add_argument("--universe", type=_count)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--theta", type=float, default=0.001)
    t.add_argument("--psi", type=float, default=1000)
    t.add_argument("--prefix-lengths", type=int, nargs="+", default=[8, 16, 24, 32])
    t.add_argument("--freqs", action="store_true", help="include per-flow counts")
    t.add_argument("--out", default="-")
    t.set_defaults(func=cmd_truth)
    return ap


def _fail(category: str, code: int, msg: str) -> int:
    print(json.dumps({"error": category, "message": msg}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        return _fail("usage", EXIT_USAGE, str(e))
    except ConfigError as e:
        return _fail("config", EXIT_CONFIG, str(e))
    except TraceFormatError as e:
        return _fail("trace", EXIT_TRACE, str(e))
    except OSError as e:
        return _fail("io", EXIT_IO, f"{e.filename or ''}: {e.strerror or e}")
    except AssertionError as e:
        return _fail("internal", EXIT_INTERNAL, str(e) or "internal check failed")


if __name__ == "__main__":
    sys.exit(main())
