import numpy as np
import pytest

from dataselect.corpus import Vocabulary
from dataselect.embeddings import EmbeddingTable, load_embeddings, lookup
from dataselect.errors import DataError, ParseError


def write_vectors(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


class TestLoadEmbeddings:
    def test_two_line_file(self, tmp_path):
        path = write_vectors(tmp_path / "v.txt", ["a 1 0", "b 0 1"])
        table = load_embeddings(path)
        assert table.dim == 2
        assert len(table) == 2
        assert np.array_equal(table.entries["a"], [1.0, 0.0])

    def test_vocabulary_restriction(self, tmp_path):
        path = write_vectors(tmp_path / "v.txt", ["a 1 0", "b 0 1"])
        vocab = Vocabulary.from_frequencies({"a": 1}, cap=10)
        table = load_embeddings(path, restrict_to=vocab)
        assert len(table) == 1
        assert "b" not in table

    def test_restriction_preserves_vectors(self, tmp_path):
        path = write_vectors(tmp_path / "v.txt", ["a 0.25 -1.5", "b 3 4"])
        full = load_embeddings(path)
        vocab = Vocabulary.from_frequencies({"a": 1}, cap=10)
        restricted = load_embeddings(path, restrict_to=vocab)
        assert np.array_equal(full.entries["a"], restricted.entries["a"])

    def test_inconsistent_dim_reports_line(self, tmp_path):
        path = write_vectors(tmp_path / "v.txt", ["a 1 0", "b 1 2 3"])
        with pytest.raises(ParseError, match="line 2"):
            load_embeddings(path)

    def test_non_numeric_field(self, tmp_path):
        path = write_vectors(tmp_path / "v.txt", ["a 1 zero"])
        with pytest.raises(ParseError, match="non-numeric"):
            load_embeddings(path)

    def test_empty_file_is_error(self, tmp_path):
        path = write_vectors(tmp_path / "v.txt", [])
        with pytest.raises(DataError):
            load_embeddings(path)

    def test_round_trip_exact_parse(self, tmp_path):
        lines = ["w1 0.125 -3.5 2.0", "w2 1e-3 4.25 -0.75", "w3 7 8 9"]
        path = write_vectors(tmp_path / "v.txt", lines)
        table = load_embeddings(path)
        for line in lines:
            token, *vals = line.split()
            assert np.array_equal(table.entries[token], [float(v) for v in vals])


class TestLookup:
    @pytest.fixture
    def table(self):
        return EmbeddingTable({"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0])}, dim=2)

    def test_hit(self, table):
        assert np.array_equal(lookup(table, "a"), [1.0, 0.0])

    def test_miss_is_none(self, table):
        assert lookup(table, "zzz") is None

    def test_miss_after_restriction(self, tmp_path):
        path = write_vectors(tmp_path / "v.txt", ["a 1 0", "b 0 1"])
        vocab = Vocabulary.from_frequencies({"a": 1}, cap=10)
        table = load_embeddings(path, restrict_to=vocab)
        assert lookup(table, "b") is None
