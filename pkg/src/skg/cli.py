"""Command-line front end.

One executable, subcommand per operation, files in and text out, so the
whole elicitation-to-federation loop can be driven from a shell script.
Store mutations take an exclusive advisory lock on ``<store>.lock``;
reads take a shared one.

Exit codes: 0 success, 1 rejected input (parse or validation), 2 usage,
3 I/O failure, 4 violated graph invariant or missing record.
"""

from __future__ import annotations

import argparse
import fcntl
import json
import os
import sys
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

from . import queries
from .annotator import (
    apply_plan,
    approve_pending,
    compile_seo,
    emit_cypher,
    load_plan,
    plan_to_bytes,
)
from .canonical import render_number, render_record, render_value
from .errors import (
    ArityError,
    CrossSubgraphViolation,
    DanglingEdge,
    MalformedKey,
    NoHedgeDetected,
    RangeError,
    RegistryMismatch,
    Rejected,
    SeoParseError,
    SubgraphMismatch,
    TypeConflict,
)
from .graph_core import (
    Graph,
    digest_path,
    graph_hash,
    load_store,
    parse_node_key,
    save_store,
)
from .metrics import (
    ALIAS_ENV_VAR,
    compare_extractions,
    f1,
    load_aliases,
    match_failure_modes,
)
from .ontology import builtin_registry, schema_listing, validate_graph
from .seo import parse_seo, validate_seo

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INVARIANT = 4


def _aliases():
    path = os.environ.get(ALIAS_ENV_VAR)
    return load_aliases(path) if path else None


def _read_doc(path: str):
    return parse_seo(Path(path).read_bytes())


@contextmanager
def _store_lock(store: Path, exclusive: bool):
    lock_path = Path(str(store) + ".lock")
    with open(lock_path, "w") as handle:
        fcntl.flock(handle, fcntl.LOCK_EX if exclusive else fcntl.LOCK_SH)
        try:
            yield
        finally:
            fcntl.flock(handle, fcntl.LOCK_UN)


def _load(store: str) -> Graph:
    path = Path(store)
    with _store_lock(path, exclusive=False):
        return load_store(path, builtin_registry())


# -- subcommands ---------------------------------------------------------


def cmd_validate(args) -> int:
    report = validate_seo(_read_doc(args.document))
    sys.stdout.write(report.to_text())
    return EXIT_OK if report.ok else EXIT_REJECTED


def cmd_compile(args) -> int:
    plan = compile_seo(_read_doc(args.document), args.subgraph, aliases=_aliases())
    if args.emit_cypher:
        Path(args.emit_cypher).write_text(emit_cypher(plan), encoding="utf-8")
    sys.stdout.write(plan_to_bytes(plan).decode("utf-8"))
    return EXIT_OK


def cmd_apply(args) -> int:
    raw = Path(args.input).read_bytes()
    # route on document shape: compiled plans are single merge_plan records
    if isinstance(sniffed := json.loads(raw), dict) and sniffed.get("kind") == "merge_plan":
        plan = load_plan(raw)
        if args.subgraph and args.subgraph != plan.provenance.subgraph:
            raise SubgraphMismatch(
                f"plan targets {plan.provenance.subgraph}, not {args.subgraph}"
            )
    else:
        doc = parse_seo(raw)
        subgraph = args.subgraph or (doc.protocol.subgraph if doc.protocol else None)
        if not subgraph:
            print(
                "error: --subgraph is required for documents without a protocol layer",
                file=sys.stderr,
            )
            return EXIT_USAGE
        plan = compile_seo(doc, subgraph, aliases=_aliases())
    store = Path(args.graph)
    with _store_lock(store, exclusive=True):
        graph = load_store(store, builtin_registry()) if store.exists() else Graph(builtin_registry())
        graph = apply_plan(graph, plan)
        digest = save_store(graph, store)
    print(digest)
    return EXIT_OK


def cmd_converge(args) -> int:
    selectors = None
    if args.edge:
        selectors = [
            (edge_type, parse_node_key(src), parse_node_key(dst))
            for edge_type, src, dst in args.edge
        ]
    store = Path(args.graph)
    with _store_lock(store, exclusive=True):
        graph = load_store(store, builtin_registry())
        graph, approved = approve_pending(graph, selectors)
        digest = save_store(graph, store)
    for edge_type, src, dst in approved:
        print(f"approved {edge_type} {src.to_text()} -> {dst.to_text()}", file=sys.stderr)
    print(digest)
    return EXIT_OK


def cmd_check(args) -> int:
    report = validate_graph(_load(args.graph), builtin_registry())
    sys.stdout.write(report.to_text())
    return EXIT_OK if report.ok else EXIT_REJECTED


def cmd_query(args) -> int:
    name = args.name
    if name != "reuse" and not args.subgraph:
        print("error: --subgraph is required for this query", file=sys.stderr)
        return EXIT_USAGE
    if name == "decision-points" and not args.step:
        print("error: decision-points needs --step", file=sys.stderr)
        return EXIT_USAGE
    if name == "cascades" and not args.root:
        print("error: cascades needs --root", file=sys.stderr)
        return EXIT_USAGE
    graph = _load(args.graph)
    if name == "cascades":
        paths = queries.cascade_paths(
            graph, args.subgraph, args.root, args.depth, args.direction
        )
        if args.format == "json":
            sys.stdout.write(render_value([list(p) for p in paths]) + "\n")
        else:
            for path in paths:
                print(" -> ".join(path))
        return EXIT_OK
    if name == "silent":
        rows = queries.ranked_silent_failures(graph, args.subgraph)
    elif name == "ranked":
        rows = queries.ranked_failures(graph, args.subgraph)
    elif name == "decision-points":
        rows = queries.step_decision_points(graph, args.subgraph, args.step)
    elif name == "gaps":
        rows = queries.elicitation_gaps(graph, args.subgraph)
    elif name == "low-confidence":
        rows = queries.low_confidence_claims(graph, args.subgraph, args.threshold)
    elif name == "masking":
        rows = queries.masking_exposures(graph, args.subgraph)
    else:  # reuse; argparse limits the choices
        rows = queries.automation_reuse(graph)
    text = queries.rows_to_json(rows) if args.format == "json" else queries.rows_to_tsv(rows)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_stats(args) -> int:
    stats = queries.subgraph_stats(_load(args.graph), args.subgraph)
    sys.stdout.write(render_record(asdict(stats)) + "\n")
    return EXIT_OK


def cmd_f1(args) -> int:
    reference = Path(args.reference).read_text(encoding="utf-8").splitlines()
    candidate = Path(args.candidate).read_text(encoding="utf-8").splitlines()
    aliases = load_aliases(args.alias) if args.alias else _aliases()
    match = match_failure_modes(
        [line for line in reference if line.strip()],
        [line for line in candidate if line.strip()],
        aliases,
    )
    precision, recall, score = f1(match)
    print("precision\trecall\tf1")
    print(f"{render_number(precision)}\t{render_number(recall)}\t{render_number(score)}")
    return EXIT_OK


def cmd_consistency(args) -> int:
    runs = [_read_doc(path) for path in args.runs]
    reference = _read_doc(args.reference) if args.reference else None
    report = compare_extractions(runs, reference=reference, aliases=_aliases())
    sys.stdout.write(render_record(report.to_jsonable()) + "\n")
    return EXIT_OK


def cmd_schema(args) -> int:
    sys.stdout.write(schema_listing(builtin_registry()))
    return EXIT_OK


def cmd_hash(args) -> int:
    graph = _load(args.graph)
    digest = graph_hash(graph)
    if args.verify:
        sidecar = digest_path(Path(args.graph))
        recorded = sidecar.read_text(encoding="utf-8").split()[0]
        if recorded != digest:
            print(f"digest mismatch: sidecar {recorded}, computed {digest}", file=sys.stderr)
            return EXIT_INVARIANT
    print(digest)
    return EXIT_OK


# -- wiring ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skg",
        description="Semantic knowledge-graph engine for laboratory workflow twins.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate an extraction document")
    p.add_argument("document")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compile", help="compile a document into a merge plan on stdout")
    p.add_argument("document")
    p.add_argument("--subgraph", required=True)
    p.add_argument("--emit-cypher", help="also write graph-database statements here")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("apply", help="merge a document or compiled plan into a store")
    p.add_argument("input", help="extraction document or compiled plan")
    p.add_argument("--graph", required=True, help="store file, created if absent")
    p.add_argument("--subgraph", help="target; defaults to the protocol layer's subgraph")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("converge", help="approve pending cross-subgraph edges")
    p.add_argument("--graph", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--all", action="store_true", help="approve every pending edge (default)")
    group.add_argument(
        "--edge",
        nargs=3,
        action="append",
        metavar=("TYPE", "SRC", "DST"),
        help="approve one edge (keys as subgraph:Label:id); repeatable",
    )
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("check", help="validate a store against the registry")
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("query", help="run a read query against a store")
    p.add_argument(
        "name",
        choices=[
            "silent",
            "ranked",
            "decision-points",
            "cascades",
            "gaps",
            "low-confidence",
            "masking",
            "reuse",
        ],
    )
    p.add_argument("--graph", required=True)
    p.add_argument("--subgraph", help="required by every query except reuse")
    p.add_argument("--step", help="step id for decision-points")
    p.add_argument("--root", help="failure mode id for cascades")
    p.add_argument("--depth", type=int, default=3, help="cascade depth limit")
    p.add_argument(
        "--direction",
        choices=["down", "up"],
        default="down",
        help="cascade direction: effects (down) or causes (up)",
    )
    p.add_argument("--threshold", type=float, default=0.7, help="low-confidence cutoff")
    p.add_argument("--format", choices=["tsv", "json"], default="tsv")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("stats", help="confidence profile of one subgraph")
    p.add_argument("--graph", required=True)
    p.add_argument("--subgraph", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("f1", help="score candidate failure-mode names against a reference")
    p.add_argument("--reference", required=True, help="file with one reference name per line")
    p.add_argument("--candidate", required=True, help="file with one candidate name per line")
    p.add_argument("--alias", help="alias table; overrides " + ALIAS_ENV_VAR)
    p.set_defaults(func=cmd_f1)

    p = sub.add_parser("consistency", help="cross-run extraction agreement report")
    p.add_argument("--runs", nargs="+", required=True, help="documents from repeated runs")
    p.add_argument("--reference", help="gold document; switches to cross-agent mode")
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("schema", help="print the registry")
    p.set_defaults(func=cmd_schema)

    p = sub.add_parser("hash", help="print the content hash of a store")
    p.add_argument("--graph", required=True)
    p.add_argument("--verify", action="store_true", help="compare against the digest sidecar")
    p.set_defaults(func=cmd_hash)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Rejected as exc:
        sys.stderr.write(exc.report.to_text())
        return EXIT_REJECTED
    except (SeoParseError, SubgraphMismatch, RegistryMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except json.JSONDecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except (
        MalformedKey,
        TypeConflict,
        DanglingEdge,
        CrossSubgraphViolation,
        RangeError,
        ArityError,
        NoHedgeDetected,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except KeyError as exc:
        print(f"error: not found: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
