"""Command line interface.

Subcommands map one-to-one onto pipeline stages and talk through files::

    robotraffic fit access.log.gz --out model.json
    robotraffic generate --model model.json --requests 100000 --seed 7 --out trace.csv
    robotraffic summarize access.log.gz
    robotraffic cache-sim trace.csv --out curves.csv
    robotraffic compare access.log.gz trace.csv --out-dir report/

Every option can also come from a JSON file given with ``--config``; flags
given on the command line win.

Exit codes: 0 success, 2 I/O or usage error, 3 fitting error, 4 invalid
model file, 5 bad cache grid or empty trace.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .cache_sim import CachePolicy, default_capacity_grid, sweep, write_curves_csv
from .evalcmp import compare, write_bundle
from .exceptions import FitError, InvalidModel, NonPositiveCapacity, RobotTrafficError
from .generator import (
    DEFAULT_MAX_SESSION_LENGTH,
    FittedModel,
    RequestCount,
    TimeHorizon,
    file_sha256,
    fit_model,
    generate,
    is_trace_csv,
    read_trace_csv,
    write_combined_log,
    write_trace_csv,
)
from .ingest import (
    DEFAULT_TIMEOUT,
    LogFormat,
    UserAgentDatabase,
    filter_robots,
    read_log,
    sessionize,
    summarize,
    to_requests,
)
from .log_model import AgentMode, Origin, Trace

logger = logging.getLogger("robotraffic")

EXIT_IO, EXIT_FIT, EXIT_MODEL, EXIT_GRID = 2, 3, 4, 5


class CommandError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _add_log_options(p, *, filter_flag=False):
    p.add_argument("--format", choices=[f.value for f in LogFormat], default=LogFormat.COMBINED.value,
                   help="access log format (default: combined)")
    p.add_argument("--ua-db", metavar="PATH",
                   help="robot User-Agent substrings, one per line (default: bundled list)")
    p.add_argument("--agent-mode", choices=[m.value for m in AgentMode], default=AgentMode.UA_IP.value,
                   help="fields identifying an agent (default: UA+IP)")
    if filter_flag:
        p.add_argument("--all-agents", action="store_true",
                       help="keep every log entry instead of only robot traffic")


def _add_timeout(p):
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT,
                   help="session timeout in seconds (default: 1800)")


def _capacities(text):
    try:
        return [int(c) for c in text.split(",") if c.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad capacity list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robotraffic", description="Fit, generate and evaluate synthetic web-robot traffic.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", metavar="JSON", help="read option defaults from a JSON file")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes for parallel stages (default: serial)")
        return p

    p = add("fit", "fit a traffic model from access logs")
    p.add_argument("logs", nargs="+", help="access log files (.gz accepted)")
    _add_log_options(p)
    _add_timeout(p)
    p.add_argument("--alpha", type=float, default=1.0, help="type prior strength (default: 1)")
    p.add_argument("--gamma", type=float, default=1.0, help="resource prior strength (default: 1)")
    p.add_argument("--strength-mode", choices=["constant", "data"], default="constant",
                   help="'data' scales prior strengths by the global observation counts")
    p.add_argument("--pool-size", type=int, default=None, help="override the estimated pool size N")
    p.add_argument("--max-session-length", type=int, default=DEFAULT_MAX_SESSION_LENGTH)
    p.add_argument("--out", help="model JSON output path (required)")

    p = add("generate", "generate a synthetic trace from a fitted model")
    p.add_argument("--model", help="fitted model JSON (required)")
    p.add_argument("--seed", type=int, help="random seed (required)")
    stop = p.add_mutually_exclusive_group()
    stop.add_argument("--requests", type=int, help="stop after this many requests")
    stop.add_argument("--horizon", type=float, help="stop at this time in seconds")
    p.add_argument("--max-session-length", type=int, default=None,
                   help="cap on session lengths (default: the model's setting)")
    p.add_argument("--out", help="trace CSV output path (required)")
    p.add_argument("--log-out", help="also write the trace as Combined Log Format")

    p = add("summarize", "print summary statistics of robot traffic in access logs")
    p.add_argument("logs", nargs="+")
    _add_log_options(p)
    _add_timeout(p)
    p.add_argument("--out", help="write the JSON summary here as well as to stdout")

    p = add("cache-sim", "simulate LFU/LRU caches over a trace")
    p.add_argument("trace", help="generated trace CSV or access log")
    _add_log_options(p, filter_flag=True)
    p.add_argument("--policy", choices=["LFU", "LRU", "both"], default="both")
    p.add_argument("--capacities", type=_capacities, help="comma-separated capacities (default: log grid)")
    p.add_argument("--grid-points", type=int, default=16)
    p.add_argument("--label", help="trace label written to the CSV (default: file name)")
    p.add_argument("--out", help="curve CSV output path (required)")

    p = add("compare", "compare an original and a generated trace")
    p.add_argument("original")
    p.add_argument("generated")
    _add_log_options(p, filter_flag=True)
    _add_timeout(p)
    p.add_argument("--capacities", type=_capacities)
    p.add_argument("--out-dir", help="report directory (required)")
    return parser


REQUIRED = {
    "fit": ("out",),
    "generate": ("model", "seed", "out"),
    "cache-sim": ("out",),
    "compare": ("out_dir",),
}


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CommandError(EXIT_IO, f"config: cannot read {args.config}: {exc}") from None
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        subparser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    # checked after merging so a config file can supply them
    missing = [o for o in REQUIRED.get(args.command, ()) if getattr(args, o, None) is None]
    if missing:
        subparser.error("missing required option(s): " + ", ".join("--" + o.replace("_", "-") for o in missing))
    if args.command == "generate" and (args.requests is None) == (args.horizon is None):
        subparser.error("exactly one of --requests or --horizon is required")
    return args


def _echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose",)}


def _load_db(args):
    if getattr(args, "all_agents", False):
        return None
    try:
        return UserAgentDatabase.from_file(args.ua_db) if args.ua_db else UserAgentDatabase.default()
    except OSError as exc:
        raise CommandError(EXIT_IO, f"ingest: cannot read UA database {args.ua_db}: {exc}") from None
    except ValueError as exc:
        raise CommandError(EXIT_IO, f"ingest: bad UA database {args.ua_db}: {exc}") from None


def _read_robot_requests(paths, args):
    db = _load_db(args)
    entries = []
    for path in paths:
        try:
            entries.extend(read_log(path, args.format))
        except OSError as exc:
            raise CommandError(EXIT_IO, f"ingest: cannot read {path}: {exc.strerror or exc}") from None
    if db is not None:
        entries = filter_robots(entries, db)
    return to_requests(entries, args.agent_mode)


def _read_trace(path, args) -> Trace:
    try:
        if is_trace_csv(path):
            return read_trace_csv(path).to_trace(os.path.basename(path))
    except OSError as exc:
        raise CommandError(EXIT_IO, f"input: cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise CommandError(EXIT_IO, f"input: {path}: {exc}") from None
    reqs = _read_robot_requests([path], args)
    return Trace.from_requests(reqs, Origin.OBSERVED, os.path.basename(path))


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_fit(args):
    requests = _read_robot_requests(args.logs, args)
    if not requests:
        raise CommandError(EXIT_FIT, "fit: no robot traffic after filtering")
    sessions = sessionize(requests, args.timeout)
    stats = summarize(sessions)
    try:
        model = fit_model(
            sessions, timeout=args.timeout, alpha=args.alpha, gamma=args.gamma,
            strength_mode=args.strength_mode, pool_size=args.pool_size,
            extra_config={
                "tool_version": __version__,
                "max_session_length": args.max_session_length,
                "seed": None,
                "inputs": [os.path.basename(p) for p in args.logs],
                "format": args.format,
                "ua_db": os.path.basename(args.ua_db) if args.ua_db else "bundled",
            },
        )
    except (FitError, ValueError) as exc:
        raise CommandError(EXIT_FIT, f"fit: {type(exc).__name__}: {exc}") from None
    try:
        model.save(args.out)
    except OSError as exc:
        raise CommandError(EXIT_IO, f"fit: cannot write {args.out}: {exc.strerror or exc}") from None
    print(json.dumps(stats.to_dict(), sort_keys=True))


def cmd_generate(args):
    try:
        model = FittedModel.load(args.model)
    except OSError as exc:
        raise CommandError(EXIT_IO, f"generate: cannot read {args.model}: {exc.strerror or exc}") from None
    except InvalidModel as exc:
        raise CommandError(EXIT_MODEL, f"generate: invalid model {args.model}: {exc}") from None
    cap = args.max_session_length or model.config.get("max_session_length", DEFAULT_MAX_SESSION_LENGTH)
    try:
        stop = RequestCount(args.requests) if args.requests is not None else TimeHorizon(args.horizon)
    except ValueError as exc:
        raise CommandError(EXIT_IO, f"generate: {exc}") from None
    trace = generate(model, stop, args.seed, max_session_length=cap)
    meta = {
        "tool_version": __version__,
        "model_sha256": file_sha256(args.model),
        "seed": args.seed,
        "config": _echo(args),
        **{k: v for k, v in trace.metadata.items() if k != "session_targets"},
    }
    try:
        write_trace_csv(trace, args.out)
        _write_json(args.out + ".meta.json", meta)
        if args.log_out:
            write_combined_log(trace, args.log_out)
    except OSError as exc:
        raise CommandError(EXIT_IO, f"generate: cannot write output: {exc.strerror or exc}") from None


def cmd_summarize(args):
    requests = _read_robot_requests(args.logs, args)
    stats = summarize(sessionize(requests, args.timeout)) if requests else summarize([])
    text = json.dumps(stats.to_dict(), sort_keys=True)
    print(text)
    if args.out:
        try:
            _write_json(args.out, stats.to_dict())
        except OSError as exc:
            raise CommandError(EXIT_IO, f"summarize: cannot write {args.out}: {exc.strerror or exc}") from None


def cmd_cache_sim(args):
    trace = _read_trace(args.trace, args)
    paths = trace.paths
    if not paths:
        raise CommandError(EXIT_GRID, f"cache-sim: trace {args.trace} is empty")
    capacities = args.capacities or default_capacity_grid(paths, args.grid_points)
    policies = [CachePolicy.LFU, CachePolicy.LRU] if args.policy == "both" else [CachePolicy(args.policy)]
    label = args.label or trace.label
    try:
        curves = [sweep(paths, capacities, p, label=label, n_jobs=args.threads) for p in policies]
    except (ValueError, NonPositiveCapacity) as exc:
        raise CommandError(EXIT_GRID, f"cache-sim: bad capacity grid: {exc}") from None
    try:
        write_curves_csv(curves, args.out)
        _write_json(args.out + ".meta.json", {
            "tool_version": __version__, "seed": None, "config": _echo(args),
            "capacities": capacities, "num_requests": len(paths),
        })
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cache-sim: cannot write {args.out}: {exc.strerror or exc}") from None


def cmd_compare(args):
    original = _read_trace(args.original, args)
    generated = _read_trace(args.generated, args)
    if not len(original) or not len(generated):
        raise CommandError(EXIT_FIT, "compare: an input trace has no requests")
    try:
        result = compare(original, generated, args.timeout, args.capacities, n_jobs=args.threads)
    except (ValueError, NonPositiveCapacity) as exc:
        raise CommandError(EXIT_GRID, f"compare: {exc}") from None
    try:
        write_bundle(result, args.out_dir, extra={
            "tool_version": __version__, "seed": None, "config": _echo(args),
        })
    except OSError as exc:
        raise CommandError(EXIT_IO, f"compare: cannot write {args.out_dir}: {exc.strerror or exc}") from None
    print(json.dumps({m: r.ks_original_vs_generated for m, r in
                      ((r.metric_name, r) for r in result.reports)}, sort_keys=True))


COMMANDS = {
    "fit": cmd_fit,
    "generate": cmd_generate,
    "summarize": cmd_summarize,
    "cache-sim": cmd_cache_sim,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    try:
        args = _parse(argv)
    except CommandError as exc:
        print(f"robotraffic: {exc}", file=sys.stderr)
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except CommandError as exc:
        print(f"robotraffic: {exc}", file=sys.stderr)
        return exc.code
    except RobotTrafficError as exc:
        print(f"robotraffic: {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FIT
    return 0


if __name__ == "__main__":
    sys.exit(main())
