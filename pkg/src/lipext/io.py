"""JSON file formats.

Partial map   {"dim_domain": n, "dim_codomain": m, "entries": [{"x": [...], "u": [...]}]}
              (label-keyed maps use {"label": "..."} in place of "x")
Affine target {"matrix": [[...]], "offset": [...]}
Grid field    {"dims": [...], "spacing": [...], "origin": [...], "values": [...]}
              (values flattened row-major, node by node)
Queries       {"points": [[...]]} or {"labels": [...]}

Floats are written by ``json`` as shortest round-trip decimals; an unbounded
supremum is written as the string "+inf".
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from .core import AffineMap, ExtensionReport, LabeledMap, PartialMap, is_unbounded
from .errors import DomainError
from .pseudometric import GridField


class InputFormatError(DomainError):
    """A data file does not follow its documented format."""


def _fail(path, where: str, msg: str):
    raise InputFormatError(f"{path}: {where}: {msg}")


def read_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputFormatError(f"{path}: file not found") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _vector(path, where, value, length=None) -> list[float]:
    if not isinstance(value, list) or not all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in value):
        _fail(path, where, "expected a list of numbers")
    if length is not None and len(value) != length:
        _fail(path, where, f"expected {length} numbers, got {len(value)}")
    if not all(math.isfinite(c) for c in value):
        _fail(path, where, "non-finite number")
    return [float(c) for c in value]


def parse_vector(value, path="<input>", where="value", length=None) -> list[float]:
    return _vector(path, where, value, length)


def _int(path, where, value) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        _fail(path, where, "expected a positive integer")
    return value


def parse_map(data, path="<map>") -> PartialMap | LabeledMap:
    if not isinstance(data, dict):
        _fail(path, "top level", "expected an object")
    for key in ("dim_codomain", "entries"):
        if key not in data:
            _fail(path, key, "missing field")
    m = _int(path, "dim_codomain", data["dim_codomain"])
    entries = data["entries"]
    if not isinstance(entries, list):
        _fail(path, "entries", "expected a list")
    labeled = bool(entries) and isinstance(entries[0], dict) and "label" in entries[0]
    if labeled:
        labels, us = [], []
        for k, e in enumerate(entries):
            if not isinstance(e, dict) or not isinstance(e.get("label"), str):
                _fail(path, f"entries[{k}].label", "expected a string")
            labels.append(e["label"])
            us.append(_vector(path, f"entries[{k}].u", e.get("u"), m))
        return LabeledMap(labels, np.asarray(us).reshape(-1, m), m)
    if "dim_domain" not in data:
        _fail(path, "dim_domain", "missing field")
    n = _int(path, "dim_domain", data["dim_domain"])
    xs, us = [], []
    for k, e in enumerate(entries):
        if not isinstance(e, dict):
            _fail(path, f"entries[{k}]", "expected an object")
        xs.append(_vector(path, f"entries[{k}].x", e.get("x"), n))
        us.append(_vector(path, f"entries[{k}].u", e.get("u"), m))
    return PartialMap(np.asarray(xs).reshape(-1, n), np.asarray(us).reshape(-1, m), n, m)


def parse_affine(data, path="<affine>") -> AffineMap:
    mat = data.get("matrix")
    if not isinstance(mat, list) or not mat:
        _fail(path, "matrix", "expected a nonempty list of rows")
    rows = [_vector(path, f"matrix[{i}]", r, len(mat[0]) if isinstance(mat[0], list) else None)
            for i, r in enumerate(mat)]
    offset = data.get("offset")
    off = None if offset is None else _vector(path, "offset", offset, len(rows))
    return AffineMap(rows, off)


def parse_grid(data, path="<grid>") -> GridField:
    for key in ("dims", "spacing", "origin", "values"):
        if key not in data:
            _fail(path, key, "missing field")
    dims = data["dims"]
    if not isinstance(dims, list) or not all(isinstance(d, int) for d in dims):
        _fail(path, "dims", "expected a list of integers")
    spacing = _vector(path, "spacing", data["spacing"])
    origin = _vector(path, "origin", data["origin"], len(dims))
    values = _vector(path, "values", data["values"])
    return GridField(dims, spacing if len(spacing) > 1 else spacing[0], origin, values)


def parse_target(data, path="<target>"):
    """Dispatch on the keys present: matrix, dims or entries."""
    if not isinstance(data, dict):
        _fail(path, "top level", "expected an object")
    if "matrix" in data:
        return parse_affine(data, path)
    if "dims" in data:
        return parse_grid(data, path)
    if "entries" in data:
        return parse_map(data, path)
    _fail(path, "top level", "not a partial map, affine target or grid field")


def parse_queries(data, path="<queries>"):
    if not isinstance(data, dict):
        _fail(path, "top level", "expected an object")
    if "labels" in data:
        labels = data["labels"]
        if not isinstance(labels, list) or not all(isinstance(s, str) for s in labels):
            _fail(path, "labels", "expected a list of strings")
        return labels
    if "points" not in data or not isinstance(data["points"], list):
        _fail(path, "points", "missing list of points")
    pts = [_vector(path, f"points[{k}]", p) for k, p in enumerate(data["points"])]
    if pts and len({len(p) for p in pts}) != 1:
        _fail(path, "points", "points have different lengths")
    return np.asarray(pts, dtype=np.float64)


def load_map(path):
    return parse_map(read_json(path), path)


def load_target(path):
    return parse_target(read_json(path), path)


def load_queries(path):
    return parse_queries(read_json(path), path)


# ---------------------------------------------------------------------------
# encoding


def map_to_json(f: PartialMap | LabeledMap) -> dict:
    if isinstance(f, LabeledMap):
        return {"dim_codomain": f.dim_codomain,
                "entries": [{"label": s, "u": u.tolist()} for s, u in zip(f.labels, f.us)]}
    return {"dim_domain": f.dim_domain, "dim_codomain": f.dim_codomain,
            "entries": [{"x": x.tolist(), "u": u.tolist()} for x, u in f]}


def affine_to_json(v: AffineMap) -> dict:
    return {"matrix": v.matrix.tolist(), "offset": v.offset.tolist()}


def grid_to_json(g: GridField) -> dict:
    return {"dims": list(g.dims), "spacing": g.spacing.tolist(), "origin": g.origin.tolist(),
            "values": g.values.ravel().tolist()}


def target_to_json(v) -> dict:
    if isinstance(v, AffineMap):
        return affine_to_json(v)
    if isinstance(v, GridField):
        return grid_to_json(v)
    return map_to_json(v)


def queries_to_json(q) -> dict:
    if len(q) and isinstance(q[0], str):
        return {"labels": list(q)}
    return {"points": np.asarray(q, dtype=np.float64).reshape(len(q), -1).tolist()}


def to_jsonable(obj):
    """Plain-JSON version of reports, verdicts and numpy values."""
    if is_unbounded(obj):
        return "+inf"
    if isinstance(obj, ExtensionReport):
        d = {k: to_jsonable(getattr(obj, k)) for k in obj.__dataclass_fields__}
        d["per_point_residuals"] = [
            {"point": to_jsonable(p), "residual": r} for p, r in obj.per_point_residuals]
        return d
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, float) and math.isinf(obj):
        return "+inf" if obj > 0 else "-inf"
    return obj


def write_json(path, data) -> None:
    """Write atomically: a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(to_jsonable(data), fh, indent=1)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
