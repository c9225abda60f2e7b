from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import orjson

from lorenz_measures.config import SCHEMA
from lorenz_measures.lorenz_map import canonical
from lorenz_measures.reports import dumps, envelope, to_plain, write_csv, write_json


@dataclass
class _Row:
    name: str
    value: float


def test_to_plain_reduces_nested_values():
    doc = to_plain({"a": np.arange(3), "b": (np.float64(0.5), np.int64(2)), "c": _Row("x", math.inf), "d": np.bool_(True)})
    assert doc == {"a": [0, 1, 2], "b": [0.5, 2], "c": {"name": "x", "value": "inf"}, "d": True}
    assert to_plain(float("nan")) == "nan"
    assert to_plain(canonical(0.5, 0.6, 0.6))["phi0"] == {"kind": "affine"}


def test_envelope():
    doc = envelope("orbit", {"x": 1.0})
    assert doc == {"schema": SCHEMA, "pipeline": "orbit", "result": {"x": 1.0}, "error": None}
    failed = envelope("induce", error="boom")
    assert failed["result"] is None
    assert failed["error"] == "boom"


def test_dumps_is_stable():
    a = dumps({"b": 1, "a": [1.5, -math.inf]})
    b = dumps({"a": [1.5, -math.inf], "b": 1})
    assert a == b
    assert orjson.loads(a) == {"a": [1.5, "-inf"], "b": 1}


def test_writers(tmp_path):
    path = write_json(tmp_path / "sub" / "r.json", envelope("orbit", {"n": 3}))
    assert orjson.loads(path.read_bytes())["result"] == {"n": 3}
    series = write_csv(tmp_path / "s.csv", ["step", "x"], [[0, 0.1], [1, np.float64(0.25)]])
    with series.open() as fh:
        rows = list(csv.reader(fh))
    assert rows == [["step", "x"], ["0", "0.1"], ["1", "0.25"]]
