"""Model files, spectrum tables and run manifests.

Model files are JSON. Complex entries may be written as plain numbers or as
``{"re": x, "im": y}`` objects::

    {"n_modes": 1, "G": [[1.0]], "F": [[{"re": 0.0, "im": 1.38}]], "gamma": [1.0]}
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from .model import InteractionModel, RateUnit, validate_model

_NUMBER = {"type": "number"}
_COMPLEX = {
    "oneOf": [
        _NUMBER,
        {
            "type": "object",
            "properties": {"re": _NUMBER, "im": _NUMBER},
            "required": ["re", "im"],
            "additionalProperties": False,
        },
    ]
}
_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _COMPLEX}}

MODEL_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "InteractionModel",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "n_modes": {"type": "integer", "minimum": 1},
        "G": _MATRIX,
        "F": _MATRIX,
        "gamma": {"type": "array", "minItems": 1, "items": _NUMBER},
        "rate_unit": {
            "type": "object",
            "properties": {"label": {"type": "string"}, "scale": {"type": "number", "exclusiveMinimum": 0}},
            "required": ["label"],
            "additionalProperties": False,
        },
        "params": {"type": "object"},
    },
    "required": ["G", "F", "gamma"],
    "additionalProperties": False,
}

CSV_FORMAT = "%.16e"


class ModelFileError(ValueError):
    """A model file is not valid JSON or does not match the schema."""


def validate_document(doc) -> None:
    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ModelFileError(f"{where}: {exc.message}") from None


def _decode(entry) -> complex:
    if isinstance(entry, dict):
        return complex(entry["re"], entry["im"])
    return complex(entry)


def _encode(z: complex):
    z = complex(z)
    if z.imag == 0.0:
        return z.real
    return {"re": z.real, "im": z.imag}


def _matrix(rows) -> np.ndarray:
    if len({len(r) for r in rows}) != 1:
        raise ModelFileError("matrix rows have different lengths")
    return np.array([[_decode(e) for e in row] for row in rows], dtype=complex)


def model_from_dict(doc: dict) -> InteractionModel:
    validate_document(doc)
    unit = doc.get("rate_unit")
    return validate_model(
        _matrix(doc["G"]),
        _matrix(doc["F"]),
        doc["gamma"],
        n_modes=doc.get("n_modes"),
        rate_unit=RateUnit(unit["label"], unit.get("scale", 1.0)) if unit else None,
    )


def model_to_dict(model: InteractionModel, *, name: str | None = None, params: dict | None = None) -> dict:
    doc = {
        "n_modes": model.n_modes,
        "G": [[_encode(z) for z in row] for row in model.g],
        "F": [[_encode(z) for z in row] for row in model.f],
        "gamma": [float(x) for x in model.gamma],
        "rate_unit": {"label": model.rate_unit.label, "scale": model.rate_unit.scale},
    }
    if name:
        doc["name"] = name
    if params:
        doc["params"] = {k: _encode(v) if isinstance(v, complex) else v for k, v in params.items()}
    return doc


def load_model(path: str | Path) -> InteractionModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(doc)


def save_model(model: InteractionModel, path: str | Path, **kwargs) -> None:
    Path(path).write_text(dumps(model_to_dict(model, **kwargs)))


def dumps(obj) -> str:
    """Deterministic JSON (sorted keys, ``repr`` floats, non-finite numbers as null)."""
    return json.dumps(_finite(obj), indent=2, sort_keys=True, default=_json_default, allow_nan=False) + "\n"


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (float, np.floating)) and not np.isfinite(obj):
        return None
    return obj


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return _encode(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_, str)):
        return str(x)
    return CSV_FORMAT % float(x)


def format_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """CSV with every number in 17-significant-digit scientific notation."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(x) for x in row])
    return buf.getvalue()


def parse_csv(text: str) -> tuple[list[str], np.ndarray]:
    reader = csv.reader(_io.StringIO(text))
    header = next(reader)
    data = np.array([[float(x) for x in row] for row in reader], dtype=float)
    return header, data.reshape(-1, len(header))
