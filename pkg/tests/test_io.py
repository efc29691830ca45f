from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spci.errors import DataLoadError
from spci.io import load_dataset, read_columns, write_columns

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.lists(finite, min_size=1, max_size=40))
def test_round_trip_is_lossless(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("io") / "a.csv"
    write_columns(path, {"t": list(range(len(values))), "y": values})
    cols = read_columns(path)
    np.testing.assert_array_equal(cols["y"], np.asarray(values))
    np.testing.assert_array_equal(cols["t"], np.arange(len(values)))


def write(tmp_path, text):
    p = tmp_path / "d.csv"
    p.write_text(text)
    return p


@pytest.mark.parametrize(
    "body, line, word",
    [
        ("y,x\n1,2\n,3\n", 3, "missing"),
        ("y,x\n1,2\n2,3\nnan,4\n", 4, "non-finite"),
        ("y,x\n1,abc\n", 2, "non-numeric"),
        ("y,x\n1,2\n3\n", 3, "expected 2 fields"),
    ],
)
def test_bad_cells_name_the_line(tmp_path, body, line, word):
    with pytest.raises(DataLoadError, match=rf"line {line}.*{word}|{word}.*line {line}|line {line}: {word}"):
        read_columns(write(tmp_path, body))


def test_unselected_columns_are_not_parsed(tmp_path):
    cols = read_columns(write(tmp_path, "y,note\n1,abc\n2,def\n"), ["y"])
    assert cols["y"].tolist() == [1.0, 2.0]


def test_select_by_index_and_name(tmp_path):
    p = write(tmp_path, "a,b,c\n1,2,3\n4,5,6\n")
    assert list(read_columns(p, [2, "a"])) == ["c", "a"]
    assert read_columns(p, ["1"])["b"].tolist() == [2.0, 5.0]
    with pytest.raises(DataLoadError, match="out of range"):
        read_columns(p, [3])
    with pytest.raises(DataLoadError, match="no column"):
        read_columns(p, ["z"])


def test_empty_and_headerless(tmp_path):
    with pytest.raises(DataLoadError):
        read_columns(write(tmp_path, ""))
    with pytest.raises(DataLoadError, match="no data"):
        read_columns(write(tmp_path, "y\n"))
    with pytest.raises(DataLoadError, match="cannot open"):
        read_columns(tmp_path / "missing.csv")


def test_load_dataset_layout(tmp_path):
    y = np.arange(10.0)
    e = y * 10
    p = write_columns(tmp_path / "d.csv", {"e": e, "y": y})
    d = load_dataset(p, "y", ["e"], lags=2, train_fraction=0.5)
    assert d.X_train.shape == (4, 3)
    np.testing.assert_array_equal(d.features[0], [20.0, 0.0, 1.0])
    assert d.responses[0] == 2.0
    with pytest.raises(DataLoadError, match="distinct"):
        load_dataset(p, "y", ["y"], lags=1)
