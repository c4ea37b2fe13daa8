"""``forge`` command line: gen, extract, crux, find, verify, bench, config.

Exit codes: 0 success, 1 verification or extraction failure, 2 bad input
(parse errors, bad config), 3 ``find`` produced no certificate.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import rows_to_csv, run_bench
from .crux import crux_bounded, crux_exact
from .expander import ExpansionParams, ExtractionError, PreconditionError, extract_expander
from .generators import generate
from .graph import GraphError, average_degree
from .io import format_edge_list, graph_to_json, read_graph
from .pipeline import PipelineConfig, dispatch
from .structures import SubdivisionCertificate, verify_certificate

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SHORTFALL = 0, 1, 2, 3


class InputError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_graph(path: str):
    try:
        return read_graph(path)
    except (GraphError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise InputError(str(exc)) from exc


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def load_config(path: str | None, overrides: list[str] = ()) -> PipelineConfig:
    """Config file (JSON object) with ``key=value`` overrides applied on top."""
    obj: dict = {}
    if path:
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"config {path}: {exc}") from exc
        if not isinstance(obj, dict):
            raise InputError(f"config {path}: expected a JSON object")
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise InputError(f"override {item!r} is not key=value")
        obj[key.strip()] = _parse_value(raw.strip())
    try:
        return PipelineConfig.from_dict(obj)
    except (TypeError, ValueError) as exc:
        raise InputError(f"config: {exc}") from exc


def cmd_gen(args) -> int:
    try:
        g = generate(args.spec)
    except (GraphError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    _emit(_dump(graph_to_json(g)) if args.json else format_edge_list(g), args.output)
    return EXIT_OK


def cmd_extract(args) -> int:
    g = _load_graph(args.input)
    k = args.k if args.k is not None else max(1.0, args.eps * float(average_degree(g)))
    try:
        params = ExpansionParams(args.eps, k)
        wit = extract_expander(g, params, trials=args.trials, seed=args.seed)
    except (ExtractionError, PreconditionError, ValueError) as exc:
        print(f"forge extract: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(_dump(wit.to_dict()), args.output)
    return EXIT_OK


def cmd_crux(args) -> int:
    g = _load_graph(args.input)
    try:
        res = crux_exact(g, args.alpha) if args.exact else crux_bounded(g, args.alpha, budget=args.budget)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit(_dump(res.to_dict(g)), args.output)
    return EXIT_OK


def cmd_find(args) -> int:
    g = _load_graph(args.input)
    cfg = load_config(args.config, args.set or [])
    trace = dispatch(g, cfg)
    if args.trace:
        Path(args.trace).write_text(trace.dumps() + "\n")
    cert = trace.certificate
    if cert is None:
        print(f"forge find: no certificate (case {trace.case})", file=sys.stderr)
        return EXIT_SHORTFALL
    rep = verify_certificate(g, cert)
    if not rep.ok:
        print(f"forge find: certificate rejected: {rep.message}", file=sys.stderr)
        return EXIT_SHORTFALL
    _emit(cert.dumps() + "\n", args.output)
    print(f"t={cert.t} case={trace.case} source={trace.source} seconds={trace.seconds:.2f}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    g = _load_graph(args.input)
    try:
        cert = SubdivisionCertificate.from_json(json.loads(Path(args.certificate).read_text()))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.certificate}: {exc}") from exc
    rep = verify_certificate(g, cert)
    out = {"ok": rep.ok, "rule": rep.rule, "message": rep.message, "stats": rep.stats}
    sys.stdout.write(_dump(out))
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_bench(args) -> int:
    cfg = load_config(args.config, args.set or [])
    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError as exc:
        raise InputError(f"bad seed list {args.seeds!r}") from exc
    rows = run_bench(args.family or [], seeds, cfg.to_dict(), timing=args.timing)
    _emit(rows_to_csv(rows), args.output)
    return EXIT_OK


def cmd_config(args) -> int:
    cfg = load_config(args.config, args.set or [])
    sys.stdout.write(cfg.dumps() + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="forge", description="Clique subdivisions in graphs of given crux.")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")

    p = sub.add_parser("gen", help="generate a graph from a family string")
    p.add_argument("spec")
    p.add_argument("-o", "--output")
    p.add_argument("--json", action="store_true", help="emit {n, edges} JSON instead of an edge list")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("extract", help="extract an expander subgraph")
    p.add_argument("input")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--k", type=float)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("crux", help="compute or bound the crux")
    p.add_argument("input")
    p.add_argument("--alpha", default="1/2")
    p.add_argument("--exact", action="store_true")
    p.add_argument("--budget", type=int, default=10**7)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_crux)

    p = sub.add_parser("find", help="build and verify a clique subdivision")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="certificate JSON (default stdout)")
    p.add_argument("--trace", help="write the build trace JSON here")
    with_config(p)
    p.set_defaults(func=cmd_find)

    p = sub.add_parser("verify", help="check a certificate against a graph")
    p.add_argument("input")
    p.add_argument("certificate")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run the benchmark table")
    p.add_argument("--family", action="append", help="generator string, {seed} is substituted")
    p.add_argument("--seeds", default="0")
    p.add_argument("--timing", action="store_true", help="fill runtime_ms (breaks byte stability)")
    p.add_argument("-o", "--output")
    with_config(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("config", help="show the effective configuration")
    p.add_argument("--dump", action="store_true", help="print every key with its value")
    with_config(p)
    p.set_defaults(func=cmd_config)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"forge {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
