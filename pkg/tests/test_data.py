"""CSV ingestion, column typing, encoding and preprocessing."""

import numpy as np
import pytest

from eembi.data import (Dataset, IngestionError, decode_rows,
                        encode_categorical, load_csv, normalize_minmax,
                        read_config, sample_rows, write_csv)


def _write(tmp_path, text, name="t.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


# --- Dataset validation -------------------------------------------------

def test_dataset_validates_shape_kinds_and_codes():
    with pytest.raises(IngestionError):
        Dataset(["a"], ["continuous"], [1.0, 2.0])  # 1-d
    with pytest.raises(IngestionError):
        Dataset(["a", "b"], ["continuous"], [[1.0, 2.0]])
    with pytest.raises(IngestionError):
        Dataset(["a"], ["ordinal"], [[1.0]])
    with pytest.raises(IngestionError):
        Dataset(["a"], ["continuous"], [[np.inf]])
    with pytest.raises(IngestionError):
        Dataset(["a"], ["discrete"], [[1.5]])
    with pytest.raises(IngestionError):
        Dataset(["a"], ["discrete"], [[-1.0]])


def test_dataset_values_are_read_only():
    d = Dataset(["a"], ["continuous"], [[1.0], [2.0]])
    with pytest.raises(ValueError):
        d.values[0, 0] = 9.0
    assert d.n_rows == 2 and d.n_cols == 1
    assert not d.all_discrete
    assert d.column(0).tolist() == [1.0, 2.0]


# --- load_csv typing ----------------------------------------------------

def test_auto_typing_splits_discrete_continuous_categorical(tmp_path):
    p = _write(tmp_path, "a,b,c\n1,0.5,x\n2,1.5,y\n1,2.5,x\n")
    d = load_csv(p)
    assert d.kinds == ("discrete", "continuous", "discrete")
    assert d.column(0).tolist() == [0.0, 1.0, 0.0]  # recoded contiguously
    assert d.categories[2] == ("x", "y")
    assert d.column(2).tolist() == [0.0, 1.0, 0.0]


def test_auto_typing_cutoff_promotes_to_continuous(tmp_path):
    body = "\n".join(str(i) for i in range(30))
    p = _write(tmp_path, "a\n" + body + "\n")
    assert load_csv(p).kinds == ("continuous",)
    assert load_csv(p, cutoff=30).kinds == ("discrete",)


def test_kind_spec_overrides(tmp_path):
    p = _write(tmp_path, "a,b\n1,2\n2,3\n")
    d = load_csv(p, kind_spec={"a": "continuous"})
    assert d.kinds == ("continuous", "discrete")
    d = load_csv(p, kind_spec=["continuous", "continuous"])
    assert d.kinds == ("continuous", "continuous")
    with pytest.raises(IngestionError):
        load_csv(p, kind_spec=["continuous"])
    with pytest.raises(IngestionError):
        load_csv(p, kind_spec=["continuous", "mystery"])


def test_load_csv_errors_name_row_and_column(tmp_path):
    with pytest.raises(IngestionError, match="empty file"):
        load_csv(_write(tmp_path, ""))
    with pytest.raises(IngestionError, match="no data rows"):
        load_csv(_write(tmp_path, "a,b\n"))
    with pytest.raises(IngestionError, match="row 3 has 1 cells"):
        load_csv(_write(tmp_path, "a,b\n1,2\n5\n"))
    with pytest.raises(IngestionError, match="row 3, column 1 \\('b'\\)"):
        load_csv(_write(tmp_path, "a,b\n1,2\n2,oops\n"),
                 kind_spec=["auto", "continuous"])
    with pytest.raises(IngestionError, match="non-finite"):
        load_csv(_write(tmp_path, "a\n1.0\nnan\n"))
    with pytest.raises(IngestionError, match="declared discrete"):
        load_csv(_write(tmp_path, "a\n1.5\n2.5\n"), kind_spec=["discrete"])


def test_blank_lines_are_skipped(tmp_path):
    p = _write(tmp_path, "a\n1\n\n2\n\n")
    assert load_csv(p).n_rows == 2


# --- categorical encode/decode ------------------------------------------

def test_encode_decode_round_trip():
    rows = [["lo", "b"], ["hi", "a"], ["lo", "c"]]
    d = encode_categorical(["u", "v"], rows)
    assert d.categories == (("hi", "lo"), ("a", "b", "c"))
    assert d.column(0).tolist() == [1.0, 0.0, 1.0]
    assert decode_rows(d) == rows


def test_decode_requires_categories():
    d = Dataset(["a"], ["discrete"], [[0.0]])
    with pytest.raises(IngestionError, match="no stored categories"):
        decode_rows(d)


# --- preprocessing -------------------------------------------------------

def test_normalize_minmax_range_constants_and_idempotence():
    d = Dataset(["a", "b", "c"], ["continuous", "continuous", "discrete"],
                [[2.0, 7.0, 3.0], [4.0, 7.0, 0.0], [10.0, 7.0, 1.0]])
    nd = normalize_minmax(d)
    assert nd.column(0).min() == 0.0 and nd.column(0).max() == 1.0
    assert np.all(nd.column(1) == 0.0)          # constant column
    assert nd.column(2).tolist() == [3.0, 0.0, 1.0]  # discrete untouched
    again = normalize_minmax(nd)
    np.testing.assert_array_equal(again.values, nd.values)


def test_sample_rows_is_seeded_and_without_replacement():
    d = Dataset(["a"], ["continuous"], np.arange(50.0)[:, None])
    s1 = sample_rows(d, 20, seed=3)
    s2 = sample_rows(d, 20, seed=3)
    np.testing.assert_array_equal(s1.values, s2.values)
    assert np.unique(s1.values).size == 20
    assert not np.array_equal(sample_rows(d, 20, seed=4).values, s1.values)
    with pytest.raises(IngestionError):
        sample_rows(d, 51, seed=0)
    with pytest.raises(IngestionError):
        sample_rows(d, 0, seed=0)


def test_write_then_load_round_trips(tmp_path):
    d = Dataset(["num", "code"], ["continuous", "discrete"],
                [[0.125, 2.0], [3.5, 0.0], [-1.25, 1.0]])
    p = tmp_path / "out.csv"
    write_csv(d, p)
    back = load_csv(p)
    assert back.kinds == d.kinds
    np.testing.assert_array_equal(back.values, d.values)


# --- config files ---------------------------------------------------------

def test_read_config_parses_types_and_kinds(tmp_path):
    p = _write(tmp_path, (
        "# comment\n"
        "alpha = 0.02\n"
        "beta=0.1\n"
        "k = 7\n"
        "seed=11\n"
        "cutoff = 12\n"
        "kind.age = continuous\n"
        "kind.city = categorical\n"), name="c.cfg")
    cfg = read_config(p)
    assert cfg["alpha"] == 0.02 and cfg["beta"] == 0.1
    assert cfg["k"] == 7 and cfg["seed"] == 11 and cfg["cutoff"] == 12
    assert cfg["kinds"] == {"age": "continuous", "city": "categorical"}


def test_read_config_errors_carry_line_numbers(tmp_path):
    with pytest.raises(IngestionError, match="line 2"):
        read_config(_write(tmp_path, "alpha=0.1\nnot a pair\n", name="c1"))
    with pytest.raises(IngestionError, match="k must be an integer"):
        read_config(_write(tmp_path, "k=2.5\n", name="c2"))
    with pytest.raises(IngestionError, match="unknown key"):
        read_config(_write(tmp_path, "gamma=1\n", name="c3"))
    with pytest.raises(IngestionError, match="unknown kind"):
        read_config(_write(tmp_path, "kind.a=float\n", name="c4"))
