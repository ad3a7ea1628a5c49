"""Leveled frequency graph: structure, incremental updates, merging.

The model is a directed graph whose nodes are partitioned into a root
level 0 (holding the single synthetic node ``ROOT``) and m named levels.
Arcs only connect a level to the next one, and each arc carries an
integer co-occurrence frequency. Training is progressive: an observation
is a root-to-leaf path of labels, and ingesting it increments every arc
along the path by one. Two models trained on disjoint slices of a stream
merge by pointwise frequency addition, which makes training splittable
across shards.

All counters are exact integers; nothing in this module touches floats.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass
from typing import NamedTuple

from .errors import InvalidSchemaError, ObservationError, SchemaMismatchError

FORMAT_VERSION = 1

ROOT_LABEL = "ROOT"


class NodeRef(NamedTuple):
    """Key of a node: its level index (0..m) and its label.

    Labels are case-preserved and compared byte-exactly; any
    normalization is corpus policy and happens during parsing, never
    here. Level 0 admits only the reserved label ``ROOT``.
    """

    level: int
    label: str


ROOT = NodeRef(0, ROOT_LABEL)

#: An edge key is (parent, child) with parent one level above child.
EdgeKey = tuple[NodeRef, NodeRef]


@dataclass(frozen=True)
class ModelSchema:
    """Declares the number of levels and their names.

    The root level 0 is implicit and not part of ``level_names``;
    ``level_names[0]`` names level 1.
    """

    level_names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.level_names)
        object.__setattr__(self, "level_names", names)
        if not names:
            raise InvalidSchemaError("schema needs at least one level")
        if len(set(names)) != len(names):
            raise InvalidSchemaError(f"duplicate level names in {names!r}")
        for name in names:
            if not name:
                raise InvalidSchemaError("level names must be non-empty")

    @property
    def num_levels(self) -> int:
        return len(self.level_names)


@dataclass
class NodeStat:
    """Cached frequency totals of one node.

    ``in_total`` is the sum of incoming arc frequencies (the normalizer
    of the classification score); ``out_total`` is the sum of outgoing
    arc frequencies. Storing both makes either total an O(1) read.
    """

    in_total: int = 0
    out_total: int = 0


@dataclass(frozen=True)
class Observation:
    """One training path: a label per level, root prefix implied."""

    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))


class Model:
    """The leveled graph with frequency-annotated arcs.

    Mutating entry points are :meth:`ingest` and :meth:`increment`; both
    keep the per-node totals consistent with the arc frequencies at all
    times. A model is single-writer: mutate it from one thread at a
    time. Reads are safe from any number of threads while no writer is
    active, and instances move freely between threads and processes
    (they pickle).

    ``n`` counts ingested observations and is the denominator of the
    similarity score's edge probability f/n.
    """

    def __init__(self, schema: ModelSchema):
        self.schema = schema
        self.n = 0
        self.format_version = FORMAT_VERSION
        self.nodes: dict[NodeRef, NodeStat] = {ROOT: NodeStat()}
        # Frequencies are stored twice, keyed both ways, so parent and
        # child enumerations are O(1). validate() cross-checks the two.
        self._children: dict[NodeRef, dict[NodeRef, int]] = {}
        self._parents: dict[NodeRef, dict[NodeRef, int]] = {}

    # -- training ----------------------------------------------------------

    def ingest(self, obs: Observation) -> None:
        """Fold one observation into the counters.

        Creates missing nodes and arcs along the path
        (ROOT, x1), (x1, x2), ..., increments each arc frequency by 1,
        updates both endpoints' totals and bumps ``n``. Ingesting the
        same observation twice doubles its frequencies; there is no
        deduplication at this layer.
        """
        labels = obs.labels
        m = self.schema.num_levels
        if len(labels) != m:
            raise ObservationError(
                f"observation has {len(labels)} labels, schema expects {m}"
            )
        # Validate before mutating: a rejected observation must not
        # leave partial increments behind.
        for i, label in enumerate(labels):
            if not label:
                raise ObservationError(f"empty label at level {i + 1}")
        prev = ROOT
        level = 0
        for label in labels:
            level += 1
            cur = NodeRef(level, label)
            self._bump(prev, cur, 1)
            prev = cur
        self.n += 1

    def increment(self, parent: NodeRef, child: NodeRef, freq: int = 1) -> None:
        """Add ``freq`` to one arc, creating nodes as needed.

        Lower-level than :meth:`ingest`: does not touch ``n``. Callers
        that batch partial paths (the user-log trainer does, for its
        root arcs) own the bookkeeping of ``n`` themselves.
        """
        if freq < 1:
            raise ValueError(f"freq must be >= 1, got {freq}")
        if parent.level + 1 != child.level:
            raise ValueError(
                f"arc must connect consecutive levels, got {parent.level} -> {child.level}"
            )
        if not 0 <= parent.level < self.schema.num_levels:
            raise ValueError(f"parent level {parent.level} out of range")
        if not parent.label or not child.label:
            raise ValueError("node labels must be non-empty")
        if parent.level == 0 and parent.label != ROOT_LABEL:
            raise ValueError(f"level 0 admits only {ROOT_LABEL!r}")
        self._bump(parent, child, freq)

    def _bump(self, parent: NodeRef, child: NodeRef, freq: int) -> None:
        nodes = self.nodes
        pstat = nodes.get(parent)
        if pstat is None:
            pstat = nodes[parent] = NodeStat()
        cstat = nodes.get(child)
        if cstat is None:
            cstat = nodes[child] = NodeStat()
        row = self._children.get(parent)
        if row is None:
            row = self._children[parent] = {}
        row[child] = row.get(child, 0) + freq
        col = self._parents.get(child)
        if col is None:
            col = self._parents[child] = {}
        col[parent] = col.get(parent, 0) + freq
        pstat.out_total += freq
        cstat.in_total += freq

    def merge(self, other: Model) -> Model:
        """Pointwise sum of two models over the same schema.

        Node set is the union, arc frequencies add, totals are rebuilt
        from the summed arcs, and ``n`` adds. The result does not depend
        on argument order (all fields compare equal either way).
        """
        if self.schema != other.schema:
            raise SchemaMismatchError(
                f"cannot merge schemas {self.schema.level_names!r} "
                f"and {other.schema.level_names!r}"
            )
        out = Model(self.schema)
        out._absorb(self)
        out._absorb(other)
        return out

    def _absorb(self, other: Model) -> None:
        # In-place pointwise add; the shard executor folds partial
        # models through here so an s-way merge stays linear.
        for parent, child, freq in other.edges():
            self._bump(parent, child, freq)
        for ref in other.nodes:
            if ref not in self.nodes:
                self.nodes[ref] = NodeStat()
        self.n += other.n

    # -- queries -----------------------------------------------------------

    def frequency(self, parent: NodeRef, child: NodeRef) -> int:
        """Arc frequency, 0 when the arc (or either node) is absent."""
        row = self._children.get(parent)
        if row is None:
            return 0
        return row.get(child, 0)

    def parents_of(self, ref: NodeRef) -> Mapping[NodeRef, int]:
        """Incoming arcs of ``ref`` as {parent: frequency}. Do not mutate."""
        return self._parents.get(ref, _EMPTY)

    def children_of(self, ref: NodeRef) -> Mapping[NodeRef, int]:
        """Outgoing arcs of ``ref`` as {child: frequency}. Do not mutate."""
        return self._children.get(ref, _EMPTY)

    def edges(self) -> Iterator[tuple[NodeRef, NodeRef, int]]:
        """Iterate all arcs as (parent, child, frequency)."""
        for parent, row in self._children.items():
            for child, freq in row.items():
                yield parent, child, freq

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return sum(len(row) for row in self._children.values())

    # -- integrity ---------------------------------------------------------

    def validate(self) -> list[str]:
        """Check every structural invariant; return violations, [] if none.

        Checked: node level ranges and label rules, the reserved root,
        arcs connecting consecutive levels only, positive frequencies,
        referential integrity, agreement of the two frequency indexes,
        per-node total consistency, per-boundary frequency mass against
        ``n``, and reachability from the root. Integer comparisons
        throughout, no tolerances.
        """
        v: list[str] = []
        m = self.schema.num_levels
        if ROOT not in self.nodes:
            v.append("missing ROOT node at level 0")
        for ref, stat in self.nodes.items():
            if not 0 <= ref.level <= m:
                v.append(f"node {_name(ref)}: level out of range 0..{m}")
            if not ref.label:
                v.append(f"node at level {ref.level}: empty label")
            if ref.level == 0 and ref.label != ROOT_LABEL:
                v.append(f"node {_name(ref)}: level 0 admits only {ROOT_LABEL!r}")
            if stat.in_total < 0 or stat.out_total < 0:
                v.append(f"node {_name(ref)}: negative total")

        in_sums: dict[NodeRef, int] = {}
        out_sums: dict[NodeRef, int] = {}
        boundary = [0] * (m + 1)
        n_forward = 0
        for parent, child, freq in self.edges():
            n_forward += 1
            edge = f"edge {_name(parent)} -> {_name(child)}"
            if freq < 1:
                v.append(f"{edge}: frequency {freq} < 1")
            if parent not in self.nodes:
                v.append(f"{edge}: parent not in node table")
            if child not in self.nodes:
                v.append(f"{edge}: child not in node table")
            if parent.level + 1 != child.level:
                v.append(
                    f"{edge}: skips levels ({parent.level} -> {child.level})"
                )
            elif 1 <= child.level <= m:
                boundary[child.level] += freq
            if self._parents.get(child, _EMPTY).get(parent) != freq:
                v.append(f"{edge}: parent index disagrees with child index")
            out_sums[parent] = out_sums.get(parent, 0) + freq
            in_sums[child] = in_sums.get(child, 0) + freq
        n_reverse = sum(len(col) for col in self._parents.values())
        if n_reverse != n_forward:
            v.append(
                f"frequency indexes disagree: {n_forward} arcs forward, "
                f"{n_reverse} reverse"
            )

        for ref, stat in self.nodes.items():
            want_in = in_sums.get(ref, 0)
            want_out = out_sums.get(ref, 0)
            if stat.in_total != want_in:
                v.append(
                    f"node {_name(ref)}: in_total={stat.in_total} != "
                    f"sum of incoming frequencies {want_in}"
                )
            if stat.out_total != want_out:
                v.append(
                    f"node {_name(ref)}: out_total={stat.out_total} != "
                    f"sum of outgoing frequencies {want_out}"
                )

        if self.n < 0:
            v.append(f"n={self.n} is negative")
        # Boundary 1 may undershoot n: user-log training stores distinct
        # user counts on the root arcs, not observation counts.
        if boundary[1] > self.n:
            v.append(f"boundary 1 mass {boundary[1]} exceeds n={self.n}")
        for i in range(2, m + 1):
            if boundary[i] != self.n:
                v.append(f"boundary {i} mass {boundary[i]} != n={self.n}")

        reached = {ROOT}
        frontier = [ROOT]
        while frontier:
            nxt = []
            for ref in frontier:
                for child in self._children.get(ref, _EMPTY):
                    if child not in reached:
                        reached.add(child)
                        nxt.append(child)
            frontier = nxt
        for ref, stat in self.nodes.items():
            if ref != ROOT and stat.in_total > 0 and ref not in reached:
                v.append(f"node {_name(ref)}: has evidence but unreachable from ROOT")
        return v

    # -- misc ----------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Model):
            return NotImplemented
        return (
            self.schema == other.schema
            and self.n == other.n
            and self.format_version == other.format_version
            and self.nodes == other.nodes
            and self._children == other._children
        )

    __hash__ = None  # mutable

    def __repr__(self) -> str:
        return (
            f"<Model levels={list(self.schema.level_names)!r} "
            f"nodes={self.num_nodes} edges={self.num_edges} n={self.n}>"
        )

    # Pickled state is primitive tuples, not the node/arc maps: shard
    # workers ship partial models back through pickle, and serializing
    # per-arc NamedTuple keys is several times slower than this.
    def __getstate__(self):
        return (
            self.schema.level_names,
            self.n,
            self.format_version,
            [
                (ref.level, ref.label, stat.in_total, stat.out_total)
                for ref, stat in self.nodes.items()
            ],
            [
                (parent.level, parent.label, child.label, freq)
                for parent, child, freq in self.edges()
            ],
        )

    def __setstate__(self, state):
        level_names, n, format_version, nodes, edges = state
        self.schema = ModelSchema(level_names)
        self.n = n
        self.format_version = format_version
        self.nodes = {
            NodeRef(level, label): NodeStat(in_total, out_total)
            for level, label, in_total, out_total in nodes
        }
        self._children = {}
        self._parents = {}
        for plevel, plabel, clabel, freq in edges:
            parent = NodeRef(plevel, plabel)
            child = NodeRef(plevel + 1, clabel)
            self._children.setdefault(parent, {})[child] = freq
            self._parents.setdefault(child, {})[parent] = freq


_EMPTY: Mapping[NodeRef, int] = {}


def _name(ref: NodeRef) -> str:
    return f"{ref.level}:{ref.label!r}"
