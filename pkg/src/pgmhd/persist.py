"""Versioned on-disk model format with a canonical byte layout.

The format is line-oriented UTF-8 text with tab-separated fields, LF
line endings, and labels escaped so that tabs and newlines are
representable. Records are sorted, so serializing the same model value
always produces the same bytes.

Layout (format version 1):

    PGMHD<TAB>1
    levels<TAB><name1>...<TAB><namem>
    n<TAB><observations>
    nodes<TAB><node record count>
    edges<TAB><edge record count>
    node<TAB><level><TAB><label><TAB><in_total><TAB><out_total>   x nodes
    edge<TAB><parent level><TAB><parent label><TAB><child label><TAB><freq>  x edges

Node records are sorted by (level, label); edge records by
(parent level, parent label, child label); the child's level is the
parent's plus one. Labels and level names escape backslash, tab, LF and
CR as ``\\\\``, ``\\t``, ``\\n``, ``\\r``.

Loading is strict: wrong magic or version, malformed records, count
mismatches, duplicate records, arcs referencing missing nodes, trailing
content, or any model-invariant violation (stored totals disagreeing
with arc sums, for instance) fail with :class:`ModelFormatError`.
"""

from __future__ import annotations

from .errors import InvalidModelError, ModelFormatError
from .model import Model, ModelSchema, NodeRef, NodeStat

MAGIC = "PGMHD"
SUPPORTED_VERSIONS = (1,)

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def escape_label(label: str) -> str:
    if "\\" in label or "\t" in label or "\n" in label or "\r" in label:
        return "".join(_ESCAPES.get(c, c) for c in label)
    return label


def unescape_label(field: str) -> str:
    if "\\" not in field:
        return field
    out = []
    it = iter(field)
    for c in it:
        if c != "\\":
            out.append(c)
            continue
        try:
            marker = next(it)
        except StopIteration:
            raise ModelFormatError(f"dangling escape in field {field!r}")
        try:
            out.append(_UNESCAPES[marker])
        except KeyError:
            raise ModelFormatError(f"unknown escape \\{marker} in field {field!r}")
    return "".join(out)


def dumps(model: Model) -> bytes:
    """Canonical serialization; a pure function of the model value."""
    violations = model.validate()
    if violations:
        raise InvalidModelError(
            "refusing to save an invalid model: " + "; ".join(violations[:5])
        )
    lines = [
        f"{MAGIC}\t{model.format_version}",
        "levels\t" + "\t".join(escape_label(s) for s in model.schema.level_names),
        f"n\t{model.n}",
        f"nodes\t{model.num_nodes}",
        f"edges\t{model.num_edges}",
    ]
    for ref in sorted(model.nodes):
        stat = model.nodes[ref]
        lines.append(
            f"node\t{ref.level}\t{escape_label(ref.label)}"
            f"\t{stat.in_total}\t{stat.out_total}"
        )
    for parent, child, freq in sorted(model.edges()):
        lines.append(
            f"edge\t{parent.level}\t{escape_label(parent.label)}"
            f"\t{escape_label(child.label)}\t{freq}"
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def save(model: Model, path: str) -> None:
    """Write the canonical serialization of ``model`` to ``path``."""
    data = dumps(model)
    with open(path, "wb") as f:
        f.write(data)


def loads(data: bytes, *, check: bool = True) -> Model:
    """Parse model bytes; the result always passes ``validate()``.

    ``check=False`` skips the referential and invariant checks (the
    byte-level structure is still enforced) so that a caller can report
    violations itself instead of failing on the first one.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ModelFormatError(f"not UTF-8: {e}")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    cursor = _Cursor(lines)

    magic, version_field = _fields(cursor.take("header"), 2, "header")
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version = _int(version_field, "format version")
    if version not in SUPPORTED_VERSIONS:
        raise ModelFormatError(f"unsupported format version {version}")

    level_fields = cursor.take("levels header").split("\t")
    if level_fields[0] != "levels" or len(level_fields) < 2:
        raise ModelFormatError("expected 'levels' header")
    schema = ModelSchema(tuple(unescape_label(f) for f in level_fields[1:]))
    n = _int(_tagged(cursor.take("n header"), "n", 2, "n header")[1], "n")
    node_count = _int(
        _tagged(cursor.take("nodes header"), "nodes", 2, "nodes header")[1], "node count"
    )
    edge_count = _int(
        _tagged(cursor.take("edges header"), "edges", 2, "edges header")[1], "edge count"
    )

    model = Model(schema)
    model.format_version = version
    model.n = n
    model.nodes.clear()
    for _ in range(node_count):
        tag, level, label, in_total, out_total = _tagged(
            cursor.take("node record"), "node", 5, "node record"
        )
        ref = NodeRef(_int(level, "node level"), unescape_label(label))
        if ref in model.nodes:
            raise ModelFormatError(f"duplicate node record for {ref.label!r}")
        model.nodes[ref] = NodeStat(
            _int(in_total, "in_total"), _int(out_total, "out_total")
        )
    for _ in range(edge_count):
        tag, plevel, plabel, clabel, freq = _tagged(
            cursor.take("edge record"), "edge", 5, "edge record"
        )
        level = _int(plevel, "edge level")
        parent = NodeRef(level, unescape_label(plabel))
        child = NodeRef(level + 1, unescape_label(clabel))
        if check:
            for ref in (parent, child):
                if ref not in model.nodes:
                    raise ModelFormatError(
                        f"edge references node {ref.label!r} at level {ref.level}, "
                        "which has no node record"
                    )
        if model._children.get(parent, {}).get(child) is not None:
            raise ModelFormatError(
                f"duplicate edge record {parent.label!r} -> {child.label!r}"
            )
        model._children.setdefault(parent, {})[child] = _int(freq, "edge frequency")
        model._parents.setdefault(child, {})[parent] = model._children[parent][child]
    if cursor.remaining():
        raise ModelFormatError(
            f"trailing content after {node_count} node and {edge_count} edge records"
        )

    if check:
        violations = model.validate()
        if violations:
            raise ModelFormatError("corrupt model file: " + "; ".join(violations[:5]))
    return model


def load(path: str, *, check: bool = True) -> Model:
    """Read and parse a model file written by :func:`save`."""
    with open(path, "rb") as f:
        return loads(f.read(), check=check)


class _Cursor:
    def __init__(self, lines: list[str]):
        self._lines = lines
        self._i = 0

    def take(self, what: str) -> str:
        if self._i >= len(self._lines):
            raise ModelFormatError(f"truncated file: missing {what}")
        line = self._lines[self._i]
        self._i += 1
        return line

    def remaining(self) -> int:
        return len(self._lines) - self._i


def _fields(line: str, count: int, what: str) -> list[str]:
    fields = line.split("\t")
    if len(fields) != count:
        raise ModelFormatError(
            f"malformed {what}: expected {count} fields, got {len(fields)}"
        )
    return fields


def _tagged(line: str, tag: str, count: int, what: str) -> list[str]:
    fields = _fields(line, count, what)
    if fields[0] != tag:
        raise ModelFormatError(f"expected {what} starting with {tag!r}, got {fields[0]!r}")
    return fields


def _int(field: str, what: str) -> int:
    try:
        value = int(field)
    except ValueError:
        raise ModelFormatError(f"invalid {what}: {field!r}")
    if value < 0:
        raise ModelFormatError(f"negative {what}: {value}")
    return value
