"""Input parsing and the deterministic shard-train-merge executor.

Two input formats, both UTF-8 text, one logical record per line:

* paths — m tab-separated labels, one observation per line.
* userlog — ``user_id<TAB>classification<TAB>t1, t2, ...``; every term
  expands to one (classification, term) observation against a fixed
  two-level schema.

The user-log pipeline deduplicates repeated (user, classification, term)
triples, so arc frequencies count distinct users, and can drop terms
searched by fewer than a configured number of distinct users before any
training happens (exact two-pass count-then-filter, no approximations).
Root arcs carry the distinct-user count of each class and are injected
after training, which is why a user-log model's root mass undershoots
its observation count.

Training writes the final (parsed, deduplicated, prefiltered)
observation stream to a temporary spool file split into ``shards``
contiguous chunks aligned to line breaks, trains one partial model per
chunk, and merges the partials with a left fold. With more than one
shard and more than one CPU the chunks run in worker processes, and
each chunk is dispatched as soon as it is fully spooled, overlapping
training with the spool pass. The merged model is field-identical to
single-shard training on the same stream, whatever the shard count.
"""

from __future__ import annotations

import multiprocessing
import os
import sys
import tempfile
from collections.abc import Iterable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .errors import AggregatedParseError, EmptyTermsError, ParseError
from .model import ROOT, Model, ModelSchema, NodeRef, NodeStat, Observation

#: Caps the number of shard worker processes.
THREADS_ENV_VAR = "PGMHD_THREADS"

_READ_BLOCK = 1 << 22  # workers stream the spool in 4 MiB slabs
_WRITE_BATCH = 1 << 16  # spool lines buffered between writes


@dataclass(frozen=True)
class UserLogRecord:
    """One user-log line: who searched, their class, what they searched."""

    user_id: str
    classification: str
    terms: tuple[str, ...]


@dataclass
class IngestConfig:
    """Knobs of one training run.

    ``min_distinct_users`` and ``dedupe_user_term`` only apply in
    userlog mode; the paths format carries no user identity. A parse
    failure aborts the run immediately unless ``fail_fast`` is off, in
    which case all failures are collected and raised together.
    """

    mode: str = "paths"
    min_distinct_users: int = 10
    shards: int = 1
    dedupe_user_term: bool = True
    fail_fast: bool = True

    def __post_init__(self):
        if self.mode not in ("paths", "userlog"):
            raise ValueError(f"mode must be 'paths' or 'userlog', got {self.mode!r}")
        if self.shards < 1:
            raise ValueError(f"shards must be >= 1, got {self.shards}")
        if self.min_distinct_users < 0:
            raise ValueError("min_distinct_users must be >= 0")


# -- line parsing ------------------------------------------------------------


def parse_path_line(line: str, num_levels: int, line_no: int | None = None) -> Observation:
    """Parse one tab-separated observation line. Labels are kept byte-exact."""
    labels = line.split("\t")
    if len(labels) != num_levels:
        raise ParseError(
            f"expected {num_levels} tab-separated labels, got {len(labels)}", line_no
        )
    for i, label in enumerate(labels):
        if not label:
            raise ParseError(f"empty label in column {i + 1}", line_no)
    return Observation(tuple(labels))


def format_path_line(obs: Observation) -> str:
    """Inverse of :func:`parse_path_line` for tab-free labels."""
    return "\t".join(obs.labels)


def parse_userlog_line(line: str, line_no: int | None = None) -> UserLogRecord:
    """Parse ``user_id<TAB>classification<TAB>t1, t2, ...``.

    Terms are split on commas and trimmed of surrounding whitespace;
    nothing else is normalized (no case folding, no stemming).
    """
    fields = line.split("\t")
    if len(fields) != 3:
        raise ParseError(
            f"expected 3 tab-separated columns, got {len(fields)}", line_no
        )
    user_id, classification, raw_terms = fields
    if not user_id:
        raise ParseError("empty user id", line_no)
    if not classification:
        raise ParseError("empty classification", line_no)
    terms = tuple(t.strip() for t in raw_terms.split(",") if t.strip())
    if not terms:
        raise EmptyTermsError(f"no terms for user {user_id!r}", line_no)
    return UserLogRecord(user_id, classification, terms)


# -- dedupe and prefilter ------------------------------------------------------


def dedupe_triples(
    triples: Iterable[tuple[str, str, str]],
) -> Iterator[tuple[str, str, str]]:
    """Drop repeated (user, classification, term) triples, keeping first
    occurrences in order. Idempotent."""
    seen: set[tuple[str, str, str]] = set()
    for triple in triples:
        if triple not in seen:
            seen.add(triple)
            yield triple


def expand_and_dedupe(records: Iterable[UserLogRecord]) -> Iterator[Observation]:
    """Expand records to (classification, term) observations, one per
    distinct (user, classification, term) triple, in first-seen order."""
    triples = (
        (rec.user_id, rec.classification, term)
        for rec in records
        for term in rec.terms
    )
    for _, classification, term in dedupe_triples(triples):
        yield Observation((classification, term))


def prefilter(
    observations: Iterable[Observation], min_distinct_users: int
) -> list[Observation]:
    """Drop observations whose leaf label occurs fewer than
    ``min_distinct_users`` times across the stream.

    Two passes: count, then filter, preserving order. On a deduplicated
    user-log stream the occurrence count of a term is its distinct-user
    count, which is what the threshold is about. Thresholds 0 and 1
    keep everything.
    """
    observations = list(observations)
    if min_distinct_users <= 1:
        return observations
    counts: dict[str, int] = {}
    for obs in observations:
        leaf = obs.labels[-1]
        counts[leaf] = counts.get(leaf, 0) + 1
    return [o for o in observations if counts[o.labels[-1]] >= min_distinct_users]


# -- sharded training ----------------------------------------------------------


def train_sharded(input_path: str, config: IngestConfig, schema: ModelSchema) -> Model:
    """Train a model from a file, optionally across shard workers.

    ``PGMHD_THREADS`` caps worker processes; chunks never interleave, so
    partial models stay single-writer, and the fold runs in shard order.
    """
    if config.mode == "userlog" and schema.num_levels != 2:
        raise ValueError(
            f"userlog mode trains a two-level model, schema has {schema.num_levels}"
        )
    with tempfile.TemporaryDirectory(prefix="pgmhd-") as tmp:
        if config.mode == "paths":
            spool = os.path.join(tmp, "observations.tsv")
            _spool_paths(input_path, spool, schema, config)
            model, _ = _fold_chunks(spool, config.shards, schema, True, None)
            return model

        triple_spool = os.path.join(tmp, "triples.tsv")
        term_counts = _userlog_pass1(input_path, triple_spool, config)
        threshold = config.min_distinct_users
        survivors = (
            frozenset(
                term.encode()
                for term, count in term_counts.items()
                if count >= threshold
            )
            if threshold
            else None
        )
        # The root scan is one more pool task, so it and the chunk
        # workers share the second pass over the triple spool.
        model, root_counts = _fold_chunks(
            triple_spool,
            config.shards,
            schema,
            False,
            survivors,
            extra=(_userlog_root_scan, (triple_spool, survivors)),
        )
        # Root arcs carry distinct-user counts per class, injected once
        # after the fold so they are independent of sharding.
        for classification in sorted(root_counts):
            model.increment(
                ROOT, NodeRef(1, classification), root_counts[classification]
            )
        return model


def _spool_paths(
    input_path: str, spool: str, schema: ModelSchema, config: IngestConfig
) -> None:
    """Validate path lines and copy them to the spool."""
    m = schema.num_levels
    errors: list[ParseError] = []
    buffer: list[str] = []
    with open(input_path, encoding="utf-8") as src, open(spool, "wb") as dst:
        for line_no, line in enumerate(src, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                parse_path_line(line, m, line_no)
            except ParseError as e:
                if config.fail_fast:
                    raise
                errors.append(e)
                continue
            buffer.append(line)
            if len(buffer) >= _WRITE_BATCH:
                dst.write(("\n".join(buffer) + "\n").encode())
                buffer.clear()
        if buffer:
            dst.write(("\n".join(buffer) + "\n").encode())
    if errors:
        raise AggregatedParseError(errors)


def _userlog_pass1(
    input_path: str, triple_spool: str, config: IngestConfig
) -> dict[str, int]:
    """Parse and dedupe the user log; spool the surviving triples.

    Returns the distinct-user count per term (plain mention counts when
    dedupe is off). The dedupe set holds one entry per distinct triple,
    which is the exactness cost of global first-occurrence dedupe.
    """
    term_counts: dict[str, int] = {}
    seen: set[tuple[str, str, str]] = set()
    dedupe = config.dedupe_user_term
    errors: list[ParseError] = []
    intern = sys.intern
    buffer: list[str] = []
    with open(input_path, encoding="utf-8") as src, open(triple_spool, "wb") as dst:
        for line_no, line in enumerate(src, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                rec = parse_userlog_line(line, line_no)
            except ParseError as e:
                if config.fail_fast:
                    raise
                errors.append(e)
                continue
            user = intern(rec.user_id)
            classification = intern(rec.classification)
            for term in rec.terms:
                term = intern(term)
                if dedupe:
                    triple = (user, classification, term)
                    if triple in seen:
                        continue
                    seen.add(triple)
                term_counts[term] = term_counts.get(term, 0) + 1
                buffer.append(f"{user}\t{classification}\t{term}\n")
                if len(buffer) >= _WRITE_BATCH:
                    dst.write("".join(buffer).encode())
                    buffer.clear()
        if buffer:
            dst.write("".join(buffer).encode())
    if errors:
        raise AggregatedParseError(errors)
    return term_counts


def _userlog_root_scan(
    triple_spool: str, survivors: frozenset[bytes] | None
) -> dict[str, int]:
    """Count each class's distinct users among the surviving triples.

    A record's triples sit consecutively in the spool, so lines arrive
    in runs of one ``user<TAB>class`` prefix; the distinct-pair set is
    consulted once per run, not per line, and keyed by the raw prefix.
    The set is what global distinct-user counting costs; it grows to
    one entry per (user, class) pair.
    """
    root_counts: dict[bytes, int] = {}
    seen_pairs: set[bytes] = set()
    last_prefix = None
    credited = True
    with open(triple_spool, "rb") as src:
        for line in src:
            cut = line.rindex(b"\t")
            prefix = line[:cut]
            if prefix != last_prefix:
                last_prefix = prefix
                credited = False
            if credited:
                continue
            if survivors is not None and line[cut + 1 : -1] not in survivors:
                continue
            credited = True
            if prefix not in seen_pairs:
                seen_pairs.add(prefix)
                classification = prefix[prefix.index(b"\t") + 1 :]
                root_counts[classification] = root_counts.get(classification, 0) + 1
    return {label.decode("utf-8"): count for label, count in root_counts.items()}


def _fold_chunks(
    spool: str,
    shards: int,
    schema: ModelSchema,
    root_edges: bool,
    survivors: frozenset[bytes] | None,
    extra: tuple | None = None,
):
    """Split the spool into byte-range chunks, train them, fold in order.

    Chunk boundaries are plain byte offsets; a line belongs to the chunk
    containing its first byte, so workers need no alignment pass in the
    parent. ``extra`` is an optional (function, args) job that joins the
    chunk tasks on the pool; the parent itself stays off the CPU, only
    folding partial models in shard order as their futures land, which
    overlaps the fold with the remaining chunks. Returns
    (model, extra result).
    """
    size = os.path.getsize(spool)
    bounds = [size * i // shards for i in range(shards + 1)]
    names = schema.level_names
    tasks = [
        (spool, bounds[i], bounds[i + 1], names, root_edges, survivors)
        for i in range(shards)
    ]
    workers = min(shards, _worker_cap())
    extra_result = None
    if workers > 1:
        pool = _shared_pool(workers)
        extra_future = pool.submit(extra[0], *extra[1]) if extra else None
        # Workers ship each partial back as its raw state: unpickling
        # plain tuples and folding them through label caches is several
        # times cheaper for the parent than materializing partial
        # models, and the parent must stay light to leave the CPUs to
        # the workers. Folding eagerly, in shard order, overlaps the
        # fold with the chunks still running.
        futures = [pool.submit(_train_chunk_state, *task) for task in tasks]
        model = Model(schema)
        for future in futures:
            _absorb_state(model, future.result())
        if extra_future is not None:
            extra_result = extra_future.result()
    else:
        if extra is not None:
            extra_result = extra[0](*extra[1])
        model = None
        for task in tasks:
            partial = _train_chunk(*task)
            if model is None:
                model = partial
            else:
                model._absorb(partial)
    return model, extra_result


def _train_chunk_state(*task) -> tuple:
    return _train_chunk(*task).__getstate__()


def _absorb_state(model: Model, state: tuple) -> None:
    """Fold one partial model's pickled state into ``model`` in place."""
    _names, n, _version, nodes, edges = state
    model.n += n
    cache: dict[tuple[int, str], NodeRef] = {}
    def ref_of(level: int, label: str) -> NodeRef:
        key = (level, label)
        ref = cache.get(key)
        if ref is None:
            ref = cache[key] = NodeRef(level, label)
        return ref
    bump = model._bump
    for plevel, plabel, clabel, freq in edges:
        bump(ref_of(plevel, plabel), ref_of(plevel + 1, clabel), freq)
    for level, label, in_total, out_total in nodes:
        if in_total == 0 and out_total == 0:
            model.nodes.setdefault(NodeRef(level, label), NodeStat())


def _worker_cap() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "")
    if raw.strip():
        try:
            cap = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}")
        return max(cap, 1)
    return os.cpu_count() or 1


_pool: ProcessPoolExecutor | None = None
_pool_workers = 0


def _shared_pool(workers: int) -> ProcessPoolExecutor:
    """Worker pool reused across training runs.

    Spawning processes and re-importing the package costs a sizable
    fraction of a desk-scale training run, so the pool stays warm. The
    forkserver context keeps worker startup independent of the parent's
    heap (dedupe sets can be large, and copy-on-write over them is
    expensive in sandboxed kernels).
    """
    global _pool, _pool_workers
    if _pool is not None and _pool_workers != workers:
        _pool.shutdown()
        _pool = None
    if _pool is None:
        context = multiprocessing.get_context("forkserver")
        _pool = ProcessPoolExecutor(workers, mp_context=context)
        _pool_workers = workers
    return _pool


def _train_chunk(
    spool: str,
    start: int,
    end: int,
    level_names: Sequence[str],
    root_edges: bool,
    survivors: frozenset[bytes] | None,
) -> Model:
    """Worker body: ingest one byte range of the spool into a fresh model.

    Processes exactly the lines whose first byte falls in [start, end),
    reading past ``end`` to complete the final line when it straddles
    the boundary. Spool lines were validated when written, so plain
    splitting parses them; labels decode once each through per-level
    caches. Without ``root_edges`` (user-log mode) lines are
    user/class/term triples: the user column is dropped, terms outside
    ``survivors`` are skipped, and root arcs are left to the caller.
    """
    model = Model(ModelSchema(tuple(level_names)))
    if start >= end:
        return model
    bump = model._bump
    caches: list[dict[bytes, NodeRef]] = [dict() for _ in level_names]
    n = 0
    with open(spool, "rb") as f:
        if start > 0:
            # A line starting before the boundary belongs to the
            # previous chunk; skip to the first line start >= start.
            f.seek(start - 1)
            if f.read(1) != b"\n":
                f.readline()
        line_start = f.tell()
        carry = b""
        done = line_start >= end
        while not done:
            block = f.read(_READ_BLOCK)
            if not block:
                break
            lines = (carry + block).split(b"\n")
            carry = lines.pop()
            for line in lines:
                if line_start >= end:
                    done = True
                    break
                line_start += len(line) + 1
                if root_edges:
                    prev = ROOT
                    for level, raw in enumerate(line.split(b"\t"), start=1):
                        cache = caches[level - 1]
                        ref = cache.get(raw)
                        if ref is None:
                            ref = cache[raw] = NodeRef(level, raw.decode("utf-8"))
                        bump(prev, ref, 1)
                        prev = ref
                else:
                    _user, classification, term = line.split(b"\t")
                    if survivors is not None and term not in survivors:
                        continue
                    parent = caches[0].get(classification)
                    if parent is None:
                        parent = caches[0][classification] = NodeRef(
                            1, classification.decode("utf-8")
                        )
                    child = caches[1].get(term)
                    if child is None:
                        child = caches[1][term] = NodeRef(2, term.decode("utf-8"))
                    bump(parent, child, 1)
                n += 1
    model.n = n
    return model
