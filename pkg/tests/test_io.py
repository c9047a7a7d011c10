import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sptucker import (
    CoreTensor,
    InvalidArgumentError,
    Model,
    ParseError,
    SparseTensor,
    ValidationError,
)
from sptucker.io import (
    denormalize,
    normalize_values,
    read_coo,
    read_indices,
    read_model,
    split_train_test,
    write_coo,
    write_model,
)

from conftest import random_model, random_tensor


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestReadCoo:
    def test_single_line(self, tmp_path):
        t = read_coo(write(tmp_path / "x.coo", "1 2 3 0.5\n"))
        np.testing.assert_array_equal(t.indices, [[0, 1, 2]])
        np.testing.assert_array_equal(t.values, [0.5])
        assert t.dims == (1, 2, 3)

    def test_comments_and_blanks(self, tmp_path):
        t = read_coo(write(tmp_path / "x.coo", "# header\n\n1 1 1.5\n  \n2 3 -2e-3\n"))
        assert t.nnz == 2
        assert t.dims == (2, 3)

    def test_expected_dims(self, tmp_path):
        t = read_coo(write(tmp_path / "x.coo", "1 1 1.0\n"), expected_dims=(4, 5))
        assert t.dims == (4, 5)

    def test_zero_based(self, tmp_path):
        t = read_coo(write(tmp_path / "x.coo", "0 0 1.0\n"), zero_based=True)
        np.testing.assert_array_equal(t.indices, [[0, 0]])

    @pytest.mark.parametrize("text,line", [
        ("1 2 x\n", 1),
        ("1 1 1.0\n1 2\n", 2),
        ("1 1 1.0\n\n1 a 2.0\n", 3),
        ("1 0 1.0\n", 1),
        ("1 -3 1.0\n", 1),
        ("1 2 nan\n", 1),
        ("1 1.5 2.0\n", 1),
    ])
    def test_parse_errors_name_line(self, tmp_path, text, line):
        with pytest.raises(ParseError, match=f"line {line}"):
            read_coo(write(tmp_path / "x.coo", text))

    def test_empty_file(self, tmp_path):
        with pytest.raises(ParseError):
            read_coo(write(tmp_path / "x.coo", "# nothing\n"))

    def test_duplicate_names_both_lines(self, tmp_path):
        with pytest.raises(ValidationError, match="lines 1 and 3"):
            read_coo(write(tmp_path / "x.coo", "1 1 1.0\n2 2 2.0\n1 1 3.0\n"))

    def test_exceeds_dims(self, tmp_path):
        with pytest.raises(ValidationError, match="line 2"):
            read_coo(write(tmp_path / "x.coo", "1 1 1.0\n3 1 1.0\n"), expected_dims=(2, 2))

    def test_round_trip(self, tmp_path):
        t = random_tensor((7, 8, 9), 100, seed=0)
        t = t.with_values(t.values * 1e3 - 400.0)
        path = str(tmp_path / "t.coo")
        write_coo(t, path)
        back = read_coo(path, t.dims)
        np.testing.assert_array_equal(back.indices, t.indices)
        np.testing.assert_array_equal(back.values, t.values)


class TestReadIndices:
    def test_reads(self, tmp_path):
        idx, lines = read_indices(write(tmp_path / "i.txt", "1 2\n\n3 4\n"))
        np.testing.assert_array_equal(idx, [[0, 1], [2, 3]])
        assert lines == [1, 3]

    def test_empty(self, tmp_path):
        idx, lines = read_indices(write(tmp_path / "i.txt", ""), order=3)
        assert idx.shape == (0, 3)
        assert lines == []

    def test_wrong_width(self, tmp_path):
        with pytest.raises(ParseError, match="line 2"):
            read_indices(write(tmp_path / "i.txt", "1 2 3\n1 2\n"), order=3)


class TestModelBundle:
    def test_round_trip_bit_equal(self, tmp_path):
        model = random_model((5, 4, 3), (2, 3, 2), seed=1, density=0.7, signed=True)
        write_model(model, {"lambda": 0.01, "variant": "cache", "iterations_run": 4,
                            "final_error": 0.125, "seed": 7}, tmp_path / "m")
        back, meta = read_model(tmp_path / "m")
        for a, b in zip(back.factors, model.factors):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(back.core.indices, model.core.indices)
        np.testing.assert_array_equal(back.core.values, model.core.values)
        assert meta["variant"] == "cache"
        assert meta["ranks"] == "2,3,2"

    def test_meta_key_order(self, tmp_path):
        model = random_model((3, 3), (2, 2), seed=0)
        write_model(model, {"seed": 1, "lambda": 0.5, "variant": "default",
                            "iterations_run": 2, "final_error": 1.0}, tmp_path)
        keys = [line.split("=")[0] for line in (tmp_path / "meta").read_text().splitlines()]
        assert keys == ["order", "dims", "ranks", "lambda", "variant", "iterations_run",
                        "final_error", "seed"]

    def test_files_use_tabs_and_lf(self, tmp_path):
        write_model(random_model((3, 2), (2, 1), seed=0), {}, tmp_path)
        raw = (tmp_path / "factor_1.tsv").read_bytes()
        assert b"\r" not in raw
        assert raw.splitlines()[0].count(b"\t") == 1

    def test_missing_factor(self, tmp_path):
        write_model(random_model((3, 3), (2, 2), seed=0), {}, tmp_path)
        os.remove(tmp_path / "factor_2.tsv")
        with pytest.raises(ValidationError, match="factor_2"):
            read_model(tmp_path)

    def test_ranks_disagree_with_core(self, tmp_path):
        model = Model(CoreTensor([[1, 1]], [1.0], (2, 2)), [np.ones((3, 2)), np.ones((3, 2))])
        write_model(model, {}, tmp_path)
        for n in (1, 2):
            (tmp_path / f"factor_{n}.tsv").write_text("1\n1\n1\n")
        meta = (tmp_path / "meta").read_text().replace("ranks=2,2", "ranks=1,1")
        (tmp_path / "meta").write_text(meta)
        with pytest.raises(ValidationError, match="ranks"):
            read_model(tmp_path)

    def test_factor_shape_mismatch(self, tmp_path):
        write_model(random_model((3, 3), (2, 2), seed=0), {}, tmp_path)
        (tmp_path / "factor_1.tsv").write_text("1\t2\n")
        with pytest.raises(ValidationError, match="shape"):
            read_model(tmp_path)

    def test_missing_meta(self, tmp_path):
        with pytest.raises(ValidationError):
            read_model(tmp_path)


class TestSplit:
    def test_ten_entries(self):
        t = random_tensor((5, 5), 10, seed=0)
        train, test = split_train_test(t, 0.1, seed=3)
        assert (train.nnz, test.nnz) == (9, 1)
        rows = {tuple(r) for r in train.indices} | {tuple(r) for r in test.indices}
        assert rows == {tuple(r) for r in t.indices}
        assert not {tuple(r) for r in train.indices} & {tuple(r) for r in test.indices}

    def test_deterministic(self):
        t = random_tensor((20, 20), 100, seed=1)
        a = split_train_test(t, 0.3, seed=5)
        b = split_train_test(t, 0.3, seed=5)
        np.testing.assert_array_equal(a[1].indices, b[1].indices)
        c = split_train_test(t, 0.3, seed=6)
        assert not np.array_equal(a[1].indices, c[1].indices)

    def test_count(self):
        t = random_tensor((100, 100, 100), 10_000, seed=2)
        assert split_train_test(t, 0.1, seed=0)[1].nnz == 1000

    @given(st.integers(2, 60), st.floats(0.01, 0.99))
    @settings(max_examples=40, deadline=None)
    def test_both_sides_nonempty(self, nnz, frac):
        t = random_tensor((10, 10), nnz, seed=nnz)
        train, test = split_train_test(t, frac, seed=0)
        assert train.nnz >= 1 and test.nnz >= 1
        assert train.nnz + test.nnz == nnz

    @pytest.mark.parametrize("frac", [0.0, 1.0, -0.5])
    def test_bad_fraction(self, frac):
        with pytest.raises(InvalidArgumentError):
            split_train_test(random_tensor((5, 5), 10, seed=0), frac, seed=0)


class TestNormalize:
    def test_linear_map(self):
        t = SparseTensor([[0, 0], [1, 1], [2, 2]], [2.0, 4.0, 6.0], (3, 3))
        out = normalize_values(t)
        np.testing.assert_array_equal(out.tensor.values, [0.0, 0.5, 1.0])
        assert (out.min, out.max, out.degenerate) == (2.0, 6.0, False)

    def test_degenerate(self):
        t = SparseTensor([[0, 0], [1, 1]], [3.0, 3.0], (2, 2))
        out = normalize_values(t)
        np.testing.assert_array_equal(out.tensor.values, [0.0, 0.0])
        assert out.degenerate

    def test_round_trip(self):
        t = random_tensor((10, 10), 50, seed=3)
        t = t.with_values(t.values * 20 - 7)
        out = normalize_values(t)
        np.testing.assert_allclose(denormalize(out.tensor.values, out.min, out.max),
                                   t.values, atol=1e-12)
