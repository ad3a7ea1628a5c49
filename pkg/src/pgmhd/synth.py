"""Deterministic synthetic user-log corpora for tests and benchmarks.

Each generated user belongs to one class and draws search terms from a
Zipf distribution over that class's vocabulary: the class's own terms
first (most probable), then a pool of terms shared by every class. The
shared pool provides cross-class overlap; shrink ``shared_fraction`` to
0.0 for fully disjoint per-class vocabularies. The same seed always
produces a byte-identical file.
"""

from __future__ import annotations

from bisect import bisect_right
from itertools import accumulate
from random import Random


def planted_vocabulary(
    num_classes: int, num_terms: int, shared_fraction: float
) -> tuple[list[str], list[list[str]]]:
    """Split the global term list into a shared pool and per-class slices.

    Returns (shared_terms, per_class_terms). The split is what
    :func:`generate_synthetic` plants, so evaluation code can recover
    each term's true class from the same parameters.
    """
    if num_classes < 1:
        raise ValueError(f"num_classes must be >= 1, got {num_classes}")
    if num_terms < 1:
        raise ValueError(f"num_terms must be >= 1, got {num_terms}")
    if not 0.0 <= shared_fraction <= 1.0:
        raise ValueError(f"shared_fraction must be in [0, 1], got {shared_fraction}")
    terms = [f"term{j:06d}" for j in range(num_terms)]
    shared_count = round(num_terms * shared_fraction)
    shared = terms[:shared_count]
    per_class = [terms[shared_count + i :: num_classes] for i in range(num_classes)]
    if any(not own and not shared for own in per_class):
        raise ValueError(
            f"{num_terms} terms at shared_fraction={shared_fraction} leave "
            f"some of the {num_classes} classes without a vocabulary"
        )
    return shared, per_class


def class_label(index: int) -> str:
    return f"class{index:04d}"


def generate_synthetic(
    path: str,
    *,
    num_classes: int,
    num_terms: int,
    num_users: int,
    zipf_exponent: float = 1.1,
    seed: int,
    shared_fraction: float = 0.2,
    min_terms_per_user: int = 1,
    max_terms_per_user: int = 8,
) -> int:
    """Write a user-log corpus to ``path``; returns the number of lines.

    One line per user: ``user<N><TAB><class><TAB>t1, t2, ...``. Term
    ranks are drawn from weights 1/(rank+1)**zipf_exponent over the
    user's class vocabulary; duplicate draws within a user collapse, so
    a user lists each term at most once.
    """
    if num_users < 0:
        raise ValueError(f"num_users must be >= 0, got {num_users}")
    if zipf_exponent <= 0:
        raise ValueError(f"zipf_exponent must be > 0, got {zipf_exponent}")
    if not 1 <= min_terms_per_user <= max_terms_per_user:
        raise ValueError(
            f"invalid terms-per-user range "
            f"[{min_terms_per_user}, {max_terms_per_user}]"
        )
    shared, per_class = planted_vocabulary(num_classes, num_terms, shared_fraction)
    vocabularies = [own + shared for own in per_class]
    cumulative = [
        list(accumulate(1.0 / (r + 1) ** zipf_exponent for r in range(len(vocab))))
        for vocab in vocabularies
    ]

    rng = Random(seed)
    # Only rng.random() is used, the one generator primitive with a
    # cross-version stability guarantee.
    rand = rng.random
    span = max_terms_per_user - min_terms_per_user + 1
    lines = 0
    with open(path, "w", encoding="utf-8") as out:
        for u in range(num_users):
            ci = int(rand() * num_classes)
            vocab = vocabularies[ci]
            cum = cumulative[ci]
            total = cum[-1]
            draws = min_terms_per_user + int(rand() * span)
            picked: list[str] = []
            for _ in range(draws):
                term = vocab[bisect_right(cum, rand() * total)]
                if term not in picked:
                    picked.append(term)
            out.write(f"user{u:08d}\t{class_label(ci)}\t{', '.join(picked)}\n")
            lines += 1
    return lines
