import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavity_squeeze.errors import StructureViolationError
from cavity_squeeze.io import (
    ModelFileError,
    dumps,
    format_csv,
    load_model,
    model_from_dict,
    model_to_dict,
    parse_csv,
    save_model,
)
from cavity_squeeze.scenarios import dual_pump, optomech

from .helpers import stable_models


@given(stable_models())
def test_model_round_trip(model):
    again = model_from_dict(json.loads(dumps(model_to_dict(model))))
    np.testing.assert_array_equal(again.g, model.g)
    np.testing.assert_array_equal(again.f, model.f)
    np.testing.assert_array_equal(again.gamma, model.gamma)


def test_file_round_trip(tmp_path):
    path = tmp_path / "m.json"
    save_model(dual_pump(), path, name="dual_pump")
    doc = json.loads(path.read_text())
    assert doc["name"] == "dual_pump" and doc["n_modes"] == 3
    np.testing.assert_array_equal(load_model(path).f, dual_pump().f)


def test_plain_numbers_and_complex_objects_are_both_accepted():
    doc = {"G": [[1]], "F": [[{"re": 0, "im": 1.38}]], "gamma": [1.0]}
    assert model_from_dict(doc).f[0, 0] == 1.38j


@pytest.mark.parametrize(
    "doc",
    [
        {"G": [[1]], "F": [[0]]},
        {"G": [[1]], "F": [[0]], "gamma": [1], "extra": 1},
        {"G": [["one"]], "F": [[0]], "gamma": [1]},
        {"G": [[1]], "F": [[{"re": 1}]], "gamma": [1]},
        {"G": [[1, 0], [0]], "F": [[0, 0], [0, 0]], "gamma": [1, 1]},
    ],
)
def test_schema_violations(doc):
    with pytest.raises(ModelFileError):
        model_from_dict(doc)


def test_structure_is_checked_after_schema():
    with pytest.raises(StructureViolationError):
        model_from_dict({"G": [[0, 1], [0, 0]], "F": [[0, 0], [0, 0]], "gamma": [1, 1]})


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{")
    with pytest.raises(ModelFileError):
        load_model(path)


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_csv_round_trips_exactly(values):
    _, data = parse_csv(format_csv(["x"], [[v] for v in values]))
    assert data[:, 0].tolist() == values


def test_csv_uses_seventeen_significant_digits():
    text = format_csv(["a", "b"], [[0.1, "label"]])
    assert text.splitlines()[1] == "1.0000000000000001e-01,label"


def test_json_is_deterministic_and_strict():
    text = dumps({"b": np.float64(float("nan")), "a": np.arange(2), "c": 1j})
    assert text == dumps({"c": 1j, "a": np.arange(2), "b": float("nan")})
    assert json.loads(text) == {"a": [0, 1], "b": None, "c": {"im": 1.0, "re": 0.0}}


def test_rate_unit_is_preserved():
    doc = model_to_dict(optomech())
    doc["rate_unit"] = {"label": "MHz", "scale": 2.5}
    assert model_from_dict(doc).rate_unit.label == "MHz"
