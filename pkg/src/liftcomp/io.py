"""JSON serialization for models and evidence.

Model files look like

    {"rvs": [{"name": "Rev", "range": ["high", "low"]}, ...],
     "factors": [{"name": "f1", "args": ["SalA", "Rev"],
                  "table": [0.75, 0.33, 0.48, 0.22]}, ...]}

with tables listed flat in row-major order, last argument fastest.
Evidence files are {"evidence": [{"rv": "Rev", "value": "high"}, ...]}.

Floats are emitted via Python's shortest round-trip repr, so
load(save(fg)) reproduces every table bit-exactly. Schema violations
raise ModelFormatError with a JSON-path-style pointer to the offending
field.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .errors import LiftcompError, ModelFormatError
from .model import Evidence, Factor, FactorGraph, RandomVariable

__all__ = ["load_fg", "save_fg", "load_evidence", "save_evidence"]


def _fail(path: str, message: str) -> None:
    raise ModelFormatError(f"{path}: {message}")


def _expect(value: Any, kind: type, path: str, what: str) -> Any:
    if not isinstance(value, kind) or isinstance(value, bool):
        _fail(path, f"expected {what}, got {type(value).__name__}")
    return value


def _expect_str(value: Any, path: str) -> str:
    s = _expect(value, str, path, "a string")
    if not s:
        _fail(path, "must be non-empty")
    return s


def _parse_json(data: bytes | str, what: str) -> Any:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelFormatError(f"{what}: not valid UTF-8 ({exc})") from None
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{what}: invalid JSON ({exc})") from None


def load_fg(data: bytes | str) -> FactorGraph:
    """Parse a model file; raises ModelFormatError with a field path on errors."""
    doc = _parse_json(data, "model")
    _expect(doc, dict, "$", "an object")
    for key in ("rvs", "factors"):
        if key not in doc:
            _fail("$", f"missing key {key!r}")
    rvs_raw = _expect(doc["rvs"], list, "rvs", "an array")
    factors_raw = _expect(doc["factors"], list, "factors", "an array")

    rvs: list[RandomVariable] = []
    sizes: dict[str, int] = {}
    for i, entry in enumerate(rvs_raw):
        path = f"rvs[{i}]"
        _expect(entry, dict, path, "an object")
        name = _expect_str(entry.get("name"), f"{path}.name")
        range_raw = _expect(entry.get("range"), list, f"{path}.range", "an array")
        labels = tuple(
            _expect_str(lbl, f"{path}.range[{j}]") for j, lbl in enumerate(range_raw)
        )
        if len(labels) < 2:
            _fail(f"{path}.range", f"needs at least 2 labels, got {len(labels)}")
        if len(set(labels)) != len(labels):
            _fail(f"{path}.range", "labels are not distinct")
        if name in sizes:
            _fail(f"{path}.name", f"duplicate rv name {name!r}")
        sizes[name] = len(labels)
        rvs.append(RandomVariable(name, labels))

    factors: list[Factor] = []
    seen: set[str] = set()
    for i, entry in enumerate(factors_raw):
        path = f"factors[{i}]"
        _expect(entry, dict, path, "an object")
        name = _expect_str(entry.get("name"), f"{path}.name")
        if name in seen:
            _fail(f"{path}.name", f"duplicate factor name {name!r}")
        seen.add(name)
        args_raw = _expect(entry.get("args"), list, f"{path}.args", "an array")
        args = tuple(
            _expect_str(a, f"{path}.args[{j}]") for j, a in enumerate(args_raw)
        )
        if not args:
            _fail(f"{path}.args", "factor needs at least one argument")
        shape = []
        for j, a in enumerate(args):
            if a not in sizes:
                _fail(f"{path}.args[{j}]", f"undeclared rv {a!r}")
            shape.append(sizes[a])
        if len(set(args)) != len(args):
            _fail(f"{path}.args", "argument RVs are not distinct")
        table_raw = _expect(entry.get("table"), list, f"{path}.table", "an array")
        expected_len = math.prod(shape)
        if len(table_raw) != expected_len:
            _fail(
                f"{path}.table",
                f"length {len(table_raw)} != expected {expected_len} "
                f"(product of argument range sizes)",
            )
        values = []
        for j, v in enumerate(table_raw):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                _fail(f"{path}.table[{j}]", "expected a number")
            v = float(v)
            if not math.isfinite(v) or v <= 0.0:
                _fail(f"{path}.table[{j}]", f"potential must be positive and finite, got {v}")
            values.append(v)
        table = np.asarray(values, dtype=np.float64).reshape(shape)
        factors.append(Factor(name, args, table))

    try:
        return FactorGraph(tuple(rvs), tuple(factors))
    except LiftcompError as exc:
        raise ModelFormatError(f"$: {exc}") from None


def save_fg(fg: FactorGraph) -> bytes:
    """Serialize a model; floats as shortest round-trip decimal strings."""
    doc = {
        "rvs": [{"name": rv.name, "range": list(rv.range)} for rv in fg.rvs],
        "factors": [
            {
                "name": f.name,
                "args": list(f.args),
                "table": [float(v) for v in f.flat()],
            }
            for f in fg.factors
        ],
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def load_evidence(data: bytes | str) -> Evidence:
    """Parse an evidence file; labels are checked against a model at use time."""
    doc = _parse_json(data, "evidence")
    _expect(doc, dict, "$", "an object")
    if "evidence" not in doc:
        _fail("$", "missing key 'evidence'")
    entries = _expect(doc["evidence"], list, "evidence", "an array")
    pairs = []
    for i, entry in enumerate(entries):
        path = f"evidence[{i}]"
        _expect(entry, dict, path, "an object")
        rv = _expect_str(entry.get("rv"), f"{path}.rv")
        value = _expect_str(entry.get("value"), f"{path}.value")
        pairs.append((rv, value))
    try:
        return Evidence(tuple(pairs))
    except LiftcompError as exc:
        raise ModelFormatError(f"evidence: {exc}") from None


def save_evidence(ev: Evidence) -> bytes:
    doc = {"evidence": [{"rv": rv, "value": value} for rv, value in ev.items]}
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
