"""Classification and relatedness scores over a trained model.

Two scores, both read-only over the graph:

* classification score: the estimated conditional probability of a
  parent outcome given a child outcome, ``f(parent, child) / T(child)``
  where T is the child's total incoming frequency.
* similarity score: for two same-level outcomes, the product of the
  edge probabilities ``f/n`` over each one's parents. Evaluated and
  returned in natural-log space because the factors shrink with corpus
  size and direct products underflow.

Rankings are total and deterministic: descending score, then ascending
label. Repeated calls against a non-mutating model are byte-identical.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .errors import (
    LevelMismatchError,
    NoSharedParentError,
    UnknownNodeError,
    ZeroEvidenceError,
)
from .model import Model, NodeRef


class ScoredResult(NamedTuple):
    """A node label and its score.

    Classification scores are probabilities in [0, 1]; similarity
    scores are natural logs <= 0.
    """

    label: str
    score: float


def classification_score(model: Model, parent: NodeRef, child: NodeRef) -> float:
    """P(parent | child) estimated as f(parent, child) / T(child).

    Returns 0.0 for an absent arc (including an unknown parent). The
    child must exist and have incoming evidence.
    """
    stat = model.nodes.get(child)
    if stat is None:
        raise UnknownNodeError(f"no node {child.label!r} at level {child.level}")
    if stat.in_total == 0:
        raise ZeroEvidenceError(
            f"node {child.label!r} at level {child.level} has no incoming frequency"
        )
    return model.frequency(parent, child) / stat.in_total


def classify(model: Model, child: NodeRef, k: int) -> list[ScoredResult]:
    """Top-k parents of ``child`` by classification score.

    Scores over all parents sum to 1; the list is truncated to k after
    sorting (descending score, ties by ascending label). A node with no
    parents yields an empty list.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    stat = model.nodes.get(child)
    if stat is None:
        raise UnknownNodeError(f"no node {child.label!r} at level {child.level}")
    incoming = model.parents_of(child)
    if not incoming:
        return []
    t = stat.in_total
    results = [ScoredResult(p.label, f / t) for p, f in incoming.items()]
    results.sort(key=lambda r: (-r.score, r.label))
    return results[:k]


def edge_probability(model: Model, parent: NodeRef, child: NodeRef) -> float:
    """Estimated joint probability of one arc: f(parent, child) / n."""
    if model.n == 0:
        raise ZeroEvidenceError("model has no observations")
    return model.frequency(parent, child) / model.n


def similarity_log_score(model: Model, x: NodeRef, y: NodeRef) -> float:
    """Natural log of the co-occurrence similarity of x and y.

    Computed as sum(ln(f(v, x) / n) for v in parents(x)) plus the same
    sum over parents(y), entirely in log space. Only defined for
    same-level nodes (level >= 1) that share at least one parent;
    disjoint parent sets raise :class:`NoSharedParentError` to signal
    the pair is outside the candidate set.
    """
    for ref in (x, y):
        if ref not in model.nodes:
            raise UnknownNodeError(f"no node {ref.label!r} at level {ref.level}")
    if x.level != y.level or x.level < 1:
        raise LevelMismatchError(
            f"similarity needs two nodes on the same level >= 1, "
            f"got levels {x.level} and {y.level}"
        )
    px = model.parents_of(x)
    py = model.parents_of(y)
    if not px or not py or px.keys().isdisjoint(py.keys()):
        raise NoSharedParentError(
            f"{x.label!r} and {y.label!r} share no parent"
        )
    return _parent_mass(model, px) + _parent_mass(model, py)


def _parent_mass(model: Model, incoming) -> float:
    # Sorted summation: equal models give bit-identical scores no
    # matter what order their arcs were inserted in.
    n = model.n
    log = math.log
    return sum(log(f / n) for _, f in sorted(incoming.items()))


def related(model: Model, x: NodeRef, k: int) -> list[ScoredResult]:
    """Top-k nodes related to ``x``: same level, at least one shared parent.

    Candidates are exactly the other children of x's parents; each is
    scored with the similarity log score. Sorted descending by score,
    ties by ascending label. A node whose parents have no other children
    yields an empty list.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if x not in model.nodes:
        raise UnknownNodeError(f"no node {x.label!r} at level {x.level}")
    if x.level < 1:
        raise LevelMismatchError("relatedness is not defined for the root")
    px = model.parents_of(x)
    base = _parent_mass(model, px) if px else 0.0
    candidates: set[NodeRef] = set()
    for parent in px:
        candidates.update(model.children_of(parent))
    candidates.discard(x)
    results = [
        ScoredResult(c.label, base + _parent_mass(model, model.parents_of(c)))
        for c in candidates
    ]
    results.sort(key=lambda r: (-r.score, r.label))
    return results[:k]
