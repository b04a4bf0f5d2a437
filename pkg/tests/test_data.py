import io

import numpy as np
import pytest

from assetsvm import (
    DataFormatError,
    Dataset,
    SparseVector,
    format_libsvm,
    parse_libsvm,
    split,
)
from helpers import planted_dataset


def parse_text(text, task="classification", n_override=None):
    return parse_libsvm(io.StringIO(text), task, n_override=n_override)


class TestParse:
    def test_basic_line(self):
        ds = parse_text("+1 1:0.5 3:1.2\n")
        assert ds.m == 1
        assert ds.n == 3
        assert ds.labels[0] == 1.0
        ex = ds.examples[0]
        assert ex.indices.tolist() == [0, 2]
        assert ex.values.tolist() == [0.5, 1.2]

    def test_label_only_line_is_zero_vector(self):
        ds = parse_text("-1\n")
        assert ds.labels[0] == -1.0
        assert ds.examples[0].indices.size == 0
        assert ds.n == 0

    def test_non_increasing_indices_rejected(self):
        with pytest.raises(DataFormatError, match="increasing"):
            parse_text("+1 3:1 2:5\n")

    def test_duplicate_index_rejected(self):
        with pytest.raises(DataFormatError, match="increasing"):
            parse_text("+1 2:1 2:5\n")

    def test_non_numeric_tokens_rejected(self):
        with pytest.raises(DataFormatError, match="label"):
            parse_text("abc 1:1\n")
        with pytest.raises(DataFormatError, match="non-numeric"):
            parse_text("+1 1:xyz\n")
        with pytest.raises(DataFormatError, match="':'"):
            parse_text("+1 notafeature\n")

    def test_comments_and_blank_lines(self):
        text = "# leading comment\n\n+1 1:2.0 # trailing\n   \n-1 2:1.0\n"
        ds = parse_text(text)
        assert ds.m == 2
        assert ds.n == 2

    def test_tabs_as_separators(self):
        ds = parse_text("+1\t1:1.5\t2:2.5\n")
        assert ds.examples[0].values.tolist() == [1.5, 2.5]

    def test_zero_one_labels_mapped(self):
        ds = parse_text("1 1:1\n0 1:2\n")
        assert ds.labels.tolist() == [1.0, -1.0]

    def test_mixed_zero_and_minus_one_rejected(self):
        with pytest.raises(DataFormatError, match="label"):
            parse_text("0 1:1\n-1 1:2\n")

    def test_all_zero_labels_rejected(self):
        with pytest.raises(DataFormatError, match="label"):
            parse_text("0 1:1\n0 1:2\n")

    def test_other_labels_rejected_for_classification(self):
        with pytest.raises(DataFormatError, match="label"):
            parse_text("2 1:1\n-1 1:2\n")

    def test_regression_labels_pass_through(self):
        ds = parse_text("0.25 1:1\n-3.5 1:2\n", task="regression")
        assert ds.labels.tolist() == [0.25, -3.5]

    def test_dimension_override_upward(self):
        ds = parse_text("+1 1:1\n", n_override=10)
        assert ds.n == 10

    def test_dimension_override_downward_rejected(self):
        with pytest.raises(DataFormatError, match="override"):
            parse_text("+1 5:1\n", n_override=3)

    def test_order_preserved(self):
        ds = parse_text("0.1 1:1\n0.2 1:2\n0.3 1:3\n", task="regression")
        assert ds.labels.tolist() == [0.1, 0.2, 0.3]
        assert [ex.values[0] for ex in ds.examples] == [1.0, 2.0, 3.0]

    def test_empty_stream_gives_empty_dataset(self):
        ds = parse_text("")
        assert ds.m == 0


class TestRoundtrip:
    def test_roundtrip_random_datasets(self):
        rng = np.random.default_rng(42)
        for trial in range(30):
            task = "classification" if trial % 2 == 0 else "regression"
            m = int(rng.integers(1, 8))
            lines = []
            for _ in range(m):
                if task == "classification":
                    label = "+1" if rng.random() < 0.5 else "-1"
                else:
                    label = repr(float(rng.normal()))
                k = int(rng.integers(0, 5))
                idx = np.sort(rng.choice(20, size=k, replace=False)) + 1
                feats = "".join(f" {i}:{float(rng.normal())!r}" for i in idx)
                lines.append(label + feats + "\n")
            text = "".join(lines)
            first = parse_text(text, task)
            second = parse_text(format_libsvm(first), task)
            assert first == second

    def test_roundtrip_preserves_exact_values(self):
        ds = parse_text("0.1 1:0.30000000000000004 7:-1e-17\n", task="regression")
        again = parse_text(format_libsvm(ds), task="regression")
        assert again.examples[0].values.tolist() == [0.30000000000000004, -1e-17]


class TestSparseVector:
    def test_rejects_nan(self):
        with pytest.raises(DataFormatError):
            SparseVector(np.array([0]), np.array([np.nan]))

    def test_dot_and_distance(self):
        a = SparseVector(np.array([0, 2]), np.array([1.0, 2.0]))
        b = SparseVector(np.array([1, 2]), np.array([3.0, 4.0]))
        assert a.dot(b) == 8.0
        assert a.sq_dist(b) == pytest.approx(1.0 + 9.0 + 4.0)

    def test_to_dense(self):
        v = SparseVector(np.array([1]), np.array([2.0]))
        assert v.to_dense(3).tolist() == [0.0, 2.0, 0.0]


class TestDatasetInvariants:
    def test_label_example_length_mismatch(self):
        with pytest.raises(DataFormatError):
            Dataset((SparseVector(np.array([0]), np.array([1.0])),), np.array([1.0, -1.0]), 1, "classification")

    def test_index_beyond_dimension(self):
        with pytest.raises(DataFormatError, match="beyond"):
            Dataset((SparseVector(np.array([5]), np.array([1.0])),), np.array([1.0]), 3, "classification")

    def test_classification_needs_pm1(self):
        with pytest.raises(DataFormatError):
            Dataset((SparseVector(np.array([0]), np.array([1.0])),), np.array([2.0]), 1, "classification")


class TestSplit:
    def test_sizes_example(self):
        ds = planted_dataset(10, 3, seed=0)
        train, valid, test = split(ds, (0.8, 0.1, 0.1), seed=7)
        assert (train.m, valid.m, test.m) == (8, 1, 1)

    def test_all_train(self):
        ds = planted_dataset(6, 2, seed=0)
        train, valid, test = split(ds, (1.0, 0.0, 0.0), seed=3)
        assert (train.m, valid.m, test.m) == (6, 0, 0)

    def test_same_seed_same_partition(self):
        ds = planted_dataset(20, 3, seed=1)
        a = split(ds, (0.5, 0.25, 0.25), seed=11)
        b = split(ds, (0.5, 0.25, 0.25), seed=11)
        for x, y in zip(a, b):
            assert x == y

    def test_partition_property(self):
        rng = np.random.default_rng(5)
        ds = planted_dataset(23, 4, seed=2)
        for seed in range(10):
            f = rng.dirichlet([1.0, 1.0, 1.0])
            if round(23 * f[1]) + round(23 * f[2]) >= 23:
                continue
            train, valid, test = split(ds, tuple(f), seed=seed)
            pools = [train, valid, test]
            assert sum(p.m for p in pools) == ds.m
            # every original example appears exactly once across the parts
            seen = []
            for part in pools:
                for ex, label in zip(part.examples, part.labels):
                    seen.append((tuple(ex.indices.tolist()), tuple(ex.values.tolist()), label))
            original = [
                (tuple(ex.indices.tolist()), tuple(ex.values.tolist()), label)
                for ex, label in zip(ds.examples, ds.labels)
            ]
            assert sorted(seen) == sorted(original)

    def test_empty_train_rejected(self):
        ds = planted_dataset(4, 2, seed=0)
        with pytest.raises(ValueError, match="empty"):
            split(ds, (0.0, 0.5, 0.5), seed=0)

    def test_bad_fractions_rejected(self):
        ds = planted_dataset(4, 2, seed=0)
        with pytest.raises(ValueError):
            split(ds, (0.5, 0.5, 0.5), seed=0)
        with pytest.raises(ValueError):
            split(ds, (1.5, -0.5, 0.0), seed=0)
