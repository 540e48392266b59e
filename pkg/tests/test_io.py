import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from binlatent.config import ExperimentConfig
from binlatent.errors import DataError
from binlatent.io import (
    fmt_float,
    parse_assignments,
    read_config,
    read_json,
    read_matrix,
    read_matrix_bin,
    read_matrix_csv,
    read_tensor_text,
    write_json,
    write_matrix,
    write_matrix_bin,
    write_matrix_csv,
    write_tensor_text,
)
from binlatent.tensor import random_symmetric

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
matrices = st.tuples(st.integers(1, 5), st.integers(1, 6)).flatmap(lambda s: arrays(np.float64, s, elements=finite))


@given(finite)
def test_fmt_float_round_trips(x):
    assert float(fmt_float(x)) == x


@given(A=matrices)
def test_csv_round_trip_is_exact(tmp_path_factory, A):
    p = tmp_path_factory.mktemp("csv") / "A.csv"
    write_matrix_csv(p, A)
    assert np.array_equal(read_matrix_csv(p), A)


@given(A=matrices)
def test_bin_round_trip_is_exact(tmp_path_factory, A):
    p = tmp_path_factory.mktemp("bin") / "A.bin"
    write_matrix_bin(p, A)
    assert np.array_equal(read_matrix_bin(p), A)


def test_bin_layout(tmp_path):
    p = tmp_path / "A.bin"
    write_matrix(p, np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]))
    raw = p.read_bytes()
    assert np.frombuffer(raw[:16], "<u8").tolist() == [2, 3]
    assert np.frombuffer(raw[16:], "<f8").tolist() == [1.0, 4.0, 2.0, 5.0, 3.0, 6.0]
    assert read_matrix(p).shape == (2, 3)


def test_bin_errors(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"\x00" * 8)
    with pytest.raises(DataError, match="truncated"):
        read_matrix_bin(p)
    p.write_bytes(np.array([2, 2], "<u8").tobytes() + b"\x00" * 8)
    with pytest.raises(DataError, match="header"):
        read_matrix_bin(p)
    with pytest.raises(DataError):
        write_matrix_bin(p, np.zeros(3))


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3\n")
    with pytest.raises(DataError, match="lengths"):
        read_matrix_csv(p)
    p.write_text("1,x\n")
    with pytest.raises(DataError, match=":1:"):
        read_matrix_csv(p)
    p.write_text("\n")
    with pytest.raises(DataError, match="empty"):
        read_matrix_csv(p)
    with pytest.raises(OSError):
        read_matrix(tmp_path / "missing.csv")


def test_tensor_text_round_trip(tmp_path):
    T = random_symmetric(3, 0)
    p = tmp_path / "T.txt"
    write_tensor_text(p, T)
    lines = p.read_text().splitlines()
    assert lines[0] == "3" and len(lines) == 28
    assert np.array_equal(read_tensor_text(p).data, T.data)


def test_tensor_text_errors(tmp_path):
    p = tmp_path / "T.txt"
    p.write_text("2\n1\n2\n")
    with pytest.raises(DataError, match="expected 8"):
        read_tensor_text(p)
    p.write_text("2\n" + "\n".join(["1", "2"] + ["0"] * 6))
    with pytest.raises(DataError, match="symmetric"):
        read_tensor_text(p)
    p.write_text("")
    with pytest.raises(DataError):
        read_tensor_text(p)


def test_json_sorted_and_nonfinite(tmp_path):
    p = tmp_path / "m.json"
    write_json(p, {"b": np.float64(1.5), "a": [np.int64(2), float("nan")], "c": np.array([1.0])})
    text = p.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert read_json(p) == {"a": [2, "nan"], "b": 1.5, "c": [1.0]}
    json.loads(text)


def test_assignments_and_config_file(tmp_path):
    assert parse_assignments(["a=1", " b = x y "]) == {"a": "1", "b": "x y"}
    with pytest.raises(DataError):
        parse_assignments(["novalue"])
    with pytest.raises(DataError):
        parse_assignments(["=3"])
    p = tmp_path / "c.cfg"
    p.write_text("# sweep\nd = 3\n\nseeds = 0:3  # three seeds\n")
    assert read_config(p) == {"d": "3", "seeds": "0:3"}


# -- experiment configuration -------------------------------------------------------------


def test_config_parsing():
    cfg = ExperimentConfig.from_mapping({"d": "3", "m": "8", "n": "1000, 1e4", "sigma": "0.1 0.5",
                                         "seeds": "0:3 10", "methods": "spectral als", "lambda_thresh": "none",
                                         "denoise": "no"})
    assert cfg.n == (1000, 10000) and cfg.sigma == (0.1, 0.5)
    assert cfg.seeds == (0, 1, 2, 10) and cfg.methods == ("spectral", "als")
    assert cfg.lambda_thresh is None and cfg.denoise is False


@pytest.mark.parametrize("values", [
    {"n": ""}, {"seeds": "1 1"}, {"methods": "magic"}, {"d": "5", "m": "3"}, {"bogus": "1"},
    {"sigma": "-1"}, {"denoise": "maybe"}, {"d": "x"}, {"observation": "poisson"}, {"workers": "0"},
])
def test_config_rejects(values):
    with pytest.raises(DataError):
        ExperimentConfig.from_mapping(values)


def test_config_hash_ignores_workers_and_round_trips():
    a = ExperimentConfig(seeds=(0, 1), sigma=(0.25,))
    assert a.config_hash() == ExperimentConfig(seeds=(0, 1), sigma=(0.25,), workers=4).config_hash()
    assert a.config_hash() != ExperimentConfig(seeds=(0, 2), sigma=(0.25,)).config_hash()
    lines = a.to_lines()
    back = ExperimentConfig.from_mapping(parse_assignments([ln for ln in lines if "None" not in ln]))
    assert back == a
