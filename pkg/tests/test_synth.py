"""Synthetic corpus generator: determinism, structure, parameter checks."""

import pytest

from pgmhd import (
    IngestConfig,
    ModelSchema,
    generate_synthetic,
    parse_userlog_line,
    planted_vocabulary,
    train_sharded,
)

SCHEMA2 = ModelSchema(("class", "term"))


def gen(path, **overrides):
    params = dict(
        num_classes=5, num_terms=100, num_users=1000, zipf_exponent=1.1, seed=42
    )
    params.update(overrides)
    return generate_synthetic(str(path), **params)


class TestDeterminism:
    def test_same_seed_same_bytes(self, tmp_path):
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        gen(a)
        gen(b)
        assert a.read_bytes() == b.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        gen(a, seed=1)
        gen(b, seed=2)
        assert a.read_bytes() != b.read_bytes()


class TestOutput:
    def test_zero_users_empty_file(self, tmp_path):
        path = tmp_path / "empty.tsv"
        assert gen(path, num_users=0) == 0
        assert path.read_bytes() == b""

    def test_every_line_parses(self, tmp_path):
        path = tmp_path / "c.tsv"
        lines = gen(path, num_users=50)
        assert lines == 50
        with open(path, encoding="utf-8") as f:
            for i, line in enumerate(f, start=1):
                rec = parse_userlog_line(line.rstrip("\n"), i)
                assert rec.classification.startswith("class")
                assert all(t.startswith("term") for t in rec.terms)

    def test_terms_come_from_class_vocabulary(self, tmp_path):
        path = tmp_path / "v.tsv"
        gen(path, num_users=200, shared_fraction=0.2)
        shared, per_class = planted_vocabulary(5, 100, 0.2)
        allowed = [set(own) | set(shared) for own in per_class]
        with open(path, encoding="utf-8") as f:
            for line in f:
                rec = parse_userlog_line(line.rstrip("\n"))
                ci = int(rec.classification.removeprefix("class"))
                assert set(rec.terms) <= allowed[ci]

    def test_prefilter_shrinks_trained_model(self, tmp_path):
        path = tmp_path / "p.tsv"
        gen(path, num_users=800, num_terms=300)
        full = train_sharded(
            str(path), IngestConfig(mode="userlog", min_distinct_users=0), SCHEMA2
        )
        filtered = train_sharded(
            str(path), IngestConfig(mode="userlog", min_distinct_users=10), SCHEMA2
        )
        assert filtered.num_nodes < full.num_nodes
        assert filtered.num_edges < full.num_edges
        assert filtered.n < full.n


class TestPlantedVocabulary:
    def test_partition_covers_all_terms(self):
        shared, per_class = planted_vocabulary(4, 50, 0.2)
        chunks = [set(shared)] + [set(own) for own in per_class]
        union = set().union(*chunks)
        assert len(union) == 50
        assert sum(len(c) for c in chunks) == 50  # pairwise disjoint

    def test_shared_fraction_zero(self):
        shared, per_class = planted_vocabulary(3, 30, 0.0)
        assert shared == []
        assert all(per_class)


class TestValidation:
    def test_negative_users(self, tmp_path):
        with pytest.raises(ValueError):
            gen(tmp_path / "x.tsv", num_users=-1)

    def test_zero_classes(self, tmp_path):
        with pytest.raises(ValueError):
            gen(tmp_path / "x.tsv", num_classes=0)

    def test_zero_terms(self, tmp_path):
        with pytest.raises(ValueError):
            gen(tmp_path / "x.tsv", num_terms=0)

    def test_bad_exponent(self, tmp_path):
        with pytest.raises(ValueError):
            gen(tmp_path / "x.tsv", zipf_exponent=0.0)

    def test_bad_shared_fraction(self, tmp_path):
        with pytest.raises(ValueError):
            gen(tmp_path / "x.tsv", shared_fraction=1.5)

    def test_bad_terms_per_user(self, tmp_path):
        with pytest.raises(ValueError):
            generate_synthetic(
                str(tmp_path / "x.tsv"),
                num_classes=2,
                num_terms=10,
                num_users=5,
                zipf_exponent=1.1,
                seed=1,
                min_terms_per_user=4,
                max_terms_per_user=2,
            )

    def test_vocabulary_starvation(self, tmp_path):
        # 3 terms over 5 classes with no shared pool: some class ends up
        # with nothing to draw.
        with pytest.raises(ValueError, match="vocabulary"):
            gen(tmp_path / "x.tsv", num_terms=3, shared_fraction=0.0)
