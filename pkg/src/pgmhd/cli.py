"""Command-line interface.

Commands: train, classify, related, stats, validate, merge, synth, eval.
Every command's stdout is deterministic for a fixed model and arguments:
stable sort orders everywhere, scores printed with 4 decimals (or full
precision under ``--precise``). Timing goes to the human-readable text,
never the machine-readable line.

Exit codes:

    0  success
    2  usage error (bad flags or arguments)
    3  input parse error (training data, pair file)
    4  I/O failure
    5  unknown node or term
    6  model file rejected (bad format, corrupt, or invalid model)
    7  validation found violations
    8  domain error (schema mismatch, level mismatch, bad parameters)

``PGMHD_THREADS`` caps shard worker processes during training.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass

from . import persist
from .errors import (
    InvalidModelError,
    InvalidSchemaError,
    LevelMismatchError,
    ModelFormatError,
    NoSharedParentError,
    ObservationError,
    ParseError,
    PGMHDError,
    SchemaMismatchError,
    UnknownNodeError,
    ZeroEvidenceError,
)
from .ingest import IngestConfig, train_sharded
from .model import Model, ModelSchema, NodeRef
from .scoring import classify, related, similarity_log_score
from .synth import generate_synthetic


class UsageError(Exception):
    pass


# -- stats ---------------------------------------------------------------


@dataclass
class StatsReport:
    """Shape of a model: per-level node counts, per-boundary arc counts,
    observation count, and the highest-degree nodes."""

    level_names: tuple[str, ...]
    n: int
    level_sizes: list[int]  # index i -> nodes at level i, 0..m
    boundary_edges: list[int]  # index i -> arcs L_{i-1} -> L_i, 1..m
    top_nodes: list[tuple[NodeRef, int]]  # (node, degree), highest first


def compute_stats(model: Model, top: int = 5) -> StatsReport:
    m = model.schema.num_levels
    sizes = [0] * (m + 1)
    for ref in model.nodes:
        sizes[ref.level] += 1
    boundaries = [0] * (m + 1)
    degrees: dict[NodeRef, int] = {}
    for parent, child, _freq in model.edges():
        boundaries[child.level] += 1
        degrees[parent] = degrees.get(parent, 0) + 1
        degrees[child] = degrees.get(child, 0) + 1
    ranked = sorted(
        ((ref, deg) for ref, deg in degrees.items() if ref.level > 0),
        key=lambda item: (-item[1], item[0]),
    )
    return StatsReport(
        level_names=model.schema.level_names,
        n=model.n,
        level_sizes=sizes,
        boundary_edges=boundaries[1:],
        top_nodes=ranked[:top],
    )


def stats_line(model: Model) -> str:
    """One machine-readable line: per-level node counts, the count of
    arcs below level 1 (root arcs are bookkeeping, not data), and n."""
    report = compute_stats(model, top=0)
    parts = [
        f"level{i}={size}" for i, size in enumerate(report.level_sizes[1:], start=1)
    ]
    parts.append(f"edges={sum(report.boundary_edges[1:])}")
    parts.append(f"n={report.n}")
    return " ".join(parts)


def _print_stats(model: Model) -> None:
    report = compute_stats(model)
    print(stats_line(model))
    named = ", ".join(
        f"{name}={size}"
        for name, size in zip(report.level_names, report.level_sizes[1:])
    )
    print(f"levels: {named}")
    bounds = ["ROOT->" + report.level_names[0] + f"={report.boundary_edges[0]}"]
    for i in range(1, len(report.boundary_edges)):
        bounds.append(
            f"{report.level_names[i - 1]}->{report.level_names[i]}"
            f"={report.boundary_edges[i]}"
        )
    print(f"boundaries: {', '.join(bounds)}")
    print(f"nodes: {model.num_nodes} (including ROOT), arcs: {model.num_edges}")
    for ref, degree in report.top_nodes:
        print(f"top-degree: level {ref.level} {ref.label!r} degree={degree}")


# -- commands ------------------------------------------------------------


def cmd_train(args: argparse.Namespace) -> int:
    config = IngestConfig(
        mode=args.format,
        min_distinct_users=args.min_users,
        shards=args.shards,
        dedupe_user_term=not args.no_dedupe,
        fail_fast=not args.keep_going,
    )
    existing = persist.load(args.continue_from) if args.continue_from else None
    if args.levels:
        schema = ModelSchema(tuple(args.levels.split(",")))
        if existing is not None and schema != existing.schema:
            raise SchemaMismatchError(
                f"--levels {args.levels!r} does not match the model being "
                f"continued ({','.join(existing.schema.level_names)})"
            )
    elif existing is not None:
        schema = existing.schema
    elif args.format == "userlog":
        schema = ModelSchema(("class", "term"))
    else:
        raise UsageError("--levels is required for --format paths")

    started = time.perf_counter()
    model = train_sharded(args.input, config, schema)
    if existing is not None:
        model = existing.merge(model)
    persist.save(model, args.out)
    elapsed = time.perf_counter() - started
    print(stats_line(model))
    print(
        f"trained {model.n} observations into {model.num_nodes} nodes and "
        f"{model.num_edges} arcs in {elapsed:.2f}s -> {args.out}"
    )
    return 0


def _node_arg(model: Model, label: str, level: int | None) -> NodeRef:
    return NodeRef(model.schema.num_levels if level is None else level, label)


def cmd_classify(args: argparse.Namespace) -> int:
    model = persist.load(args.model)
    child = _node_arg(model, args.node, args.level)
    for result in classify(model, child, args.k):
        print(f"{result.label}\t{_fmt(result.score, args.precise)}")
    return 0


def cmd_related(args: argparse.Namespace) -> int:
    model = persist.load(args.model)
    term = _node_arg(model, args.term, args.level)
    for result in related(model, term, args.k):
        print(f"{result.label}\t{_fmt(result.score, args.precise)}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    _print_stats(persist.load(args.model))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    # check=False: report the violations instead of refusing the file.
    violations = persist.load(args.model, check=False).validate()
    for violation in violations:
        print(violation)
    return 7 if violations else 0


def cmd_merge(args: argparse.Namespace) -> int:
    model = persist.load(args.inputs[0])
    for path in args.inputs[1:]:
        model = model.merge(persist.load(path))
    persist.save(model, args.out)
    print(stats_line(model))
    print(f"merged {len(args.inputs)} models -> {args.out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    lines = generate_synthetic(
        args.out,
        num_classes=args.classes,
        num_terms=args.terms,
        num_users=args.users,
        zipf_exponent=args.zipf,
        seed=args.seed,
        shared_fraction=args.shared_fraction,
        min_terms_per_user=args.min_terms,
        max_terms_per_user=args.max_terms,
    )
    print(
        f"lines={lines} classes={args.classes} terms={args.terms} "
        f"users={args.users} seed={args.seed}"
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    model = persist.load(args.model)
    level = model.schema.num_levels if args.level is None else args.level
    pairs = _read_pairs(args.pairs)
    retrieved = 0
    correct = 0
    for a, b, label in pairs:
        try:
            score = similarity_log_score(
                model, NodeRef(level, a), NodeRef(level, b)
            )
        except (UnknownNodeError, NoSharedParentError):
            print(f"{a}\t{b}\t{label}\tnot-retrieved\t-")
            continue
        retrieved += 1
        if label == "related":
            correct += 1
        print(f"{a}\t{b}\t{label}\tretrieved\t{_fmt(score, args.precise)}")
    precision = correct / retrieved if retrieved else float("nan")
    print(f"precision={precision:.4f} retrieved={retrieved} correct={correct}")
    return 0


def _read_pairs(path: str) -> list[tuple[str, str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(
                    f"expected 'termA<TAB>termB<TAB>label', got {len(fields)} fields",
                    line_no,
                )
            a, b, label = fields
            if label not in ("related", "unrelated"):
                raise ParseError(
                    f"label must be 'related' or 'unrelated', got {label!r}", line_no
                )
            if not a or not b:
                raise ParseError("empty term", line_no)
            pairs.append((a, b, label))
    return pairs


def _fmt(score: float, precise: bool) -> str:
    return repr(score) if precise else f"{score:.4f}"


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgmhd",
        description="Train and query a leveled frequency-graph model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a text corpus")
    p.add_argument("input", help="corpus file")
    p.add_argument("--format", choices=("paths", "userlog"), default="paths")
    p.add_argument("--levels", help="comma-separated level names")
    p.add_argument(
        "--min-users",
        type=int,
        default=10,
        metavar="N",
        help="drop terms searched by fewer than N distinct users (userlog only)",
    )
    p.add_argument("--shards", type=int, default=1, metavar="P")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--continue-from", metavar="MODEL", help="merge new data into MODEL")
    p.add_argument("--no-dedupe", action="store_true", help="count repeat searches")
    p.add_argument(
        "--keep-going",
        action="store_true",
        help="collect all parse errors instead of stopping at the first",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="rank the parents of a node")
    p.add_argument("model")
    p.add_argument("--node", required=True, help="child node label")
    p.add_argument("--level", type=int, help="child level (default: leaf level)")
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--precise", action="store_true", help="full-precision scores")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("related", help="rank nodes related to a term")
    p.add_argument("model")
    p.add_argument("--term", required=True, help="query node label")
    p.add_argument("--level", type=int, help="query level (default: leaf level)")
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--precise", action="store_true")
    p.set_defaults(func=cmd_related)

    p = sub.add_parser("stats", help="print model statistics")
    p.add_argument("model")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("validate", help="check model invariants")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("merge", help="merge models trained on data slices")
    p.add_argument("inputs", nargs="+", help="model files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("synth", help="generate a synthetic user-log corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--terms", type=int, default=100)
    p.add_argument("--users", type=int, default=1000)
    p.add_argument("--zipf", type=float, default=1.1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--shared-fraction", type=float, default=0.2)
    p.add_argument("--min-terms", type=int, default=1)
    p.add_argument("--max-terms", type=int, default=8)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="precision of retrieval against labeled pairs")
    p.add_argument("model")
    p.add_argument("--pairs", required=True, help="termA<TAB>termB<TAB>related|unrelated")
    p.add_argument("--level", type=int, help="term level (default: leaf level)")
    p.add_argument("--precise", action="store_true")
    p.set_defaults(func=cmd_eval)

    return parser


_ERROR_EXIT_CODES: list[tuple[type[BaseException], int]] = [
    (UsageError, 2),
    (ParseError, 3),
    (UnknownNodeError, 5),
    (ModelFormatError, 6),
    (InvalidModelError, 6),
    (InvalidSchemaError, 8),
    (SchemaMismatchError, 8),
    (LevelMismatchError, 8),
    (ZeroEvidenceError, 8),
    (ObservationError, 8),
    (NoSharedParentError, 8),
    (PGMHDError, 8),
    (ValueError, 8),
    (OSError, 4),
]


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except tuple(t for t, _ in _ERROR_EXIT_CODES) as e:
        print(f"pgmhd {args.command}: {e}", file=sys.stderr)
        for etype, code in _ERROR_EXIT_CODES:
            if isinstance(e, etype):
                return code
        return 1  # unreachable


if __name__ == "__main__":
    sys.exit(main())
