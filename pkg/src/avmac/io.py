"""Channel-spec documents and region exports.

A channel spec is a JSON document::

    {"name": "adder3", "sizes": [n1, n2, ns, ny],
     "W": [[...ny probabilities...], ...],   # n1*n2*ns rows, row-major in (x1, x2, s)
     "g1": [...], "g2": [...], "l": [...],
     "gamma1": 1.0, "gamma2": 1.0, "lambda": 2.0}

Floats are written with ``repr`` precision, so write/read round trips are bit-identical.
"""
from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from .channel import ChannelSpec, ConstraintSpec, CostModel, validate


class SpecParseError(ValueError):
    """Malformed channel-spec document; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def channel_to_dict(spec: ChannelSpec, costs: CostModel, constraints: ConstraintSpec) -> dict:
    n1, n2, ns, ny = spec.sizes
    return {
        "name": spec.name,
        "sizes": [n1, n2, ns, ny],
        "W": spec.W.reshape(n1 * n2 * ns, ny).tolist(),
        "g1": costs.g1.tolist(), "g2": costs.g2.tolist(), "l": costs.l.tolist(),
        "gamma1": float(constraints.gamma1), "gamma2": float(constraints.gamma2),
        "lambda": float(constraints.lam),
    }


def dumps_channel(spec: ChannelSpec, costs: CostModel, constraints: ConstraintSpec) -> str:
    d = channel_to_dict(spec, costs, constraints)
    rows = ",\n    ".join(json.dumps(r) for r in d.pop("W"))
    head = json.dumps({k: d[k] for k in ("name", "sizes")})[:-1]
    tail = json.dumps({k: d[k] for k in ("g1", "g2", "l", "gamma1", "gamma2", "lambda")})[1:]
    return f'{head},\n  "W": [\n    {rows}\n  ],\n  {tail}\n'


def loads_channel(text: str) -> tuple[ChannelSpec, CostModel, ConstraintSpec]:
    """Parse and validate a channel-spec document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecParseError(e.msg, e.lineno) from None
    if not isinstance(doc, dict):
        raise SpecParseError("top level must be an object", 1)
    for key in ("sizes", "W", "g1", "g2", "l", "gamma1", "gamma2", "lambda"):
        if key not in doc:
            raise SpecParseError(f"missing field {key!r} in the object opened here",
                                  text.count("\n", 0, text.find("{")) + 1)
    sizes = doc["sizes"]
    if (not isinstance(sizes, list) or len(sizes) != 4
            or not all(isinstance(v, int) and v >= 1 for v in sizes)):
        raise SpecParseError("sizes must be four positive integers", _line_of(text, "sizes"))
    n1, n2, ns, ny = sizes
    try:
        W = np.array(doc["W"], dtype=float)
    except (TypeError, ValueError):
        raise SpecParseError("W must be a list of numeric rows", _line_of(text, "W")) from None
    if W.shape != (n1 * n2 * ns, ny):
        raise SpecParseError(f"W has shape {W.shape}, expected ({n1 * n2 * ns}, {ny})",
                             _line_of(text, "W"))
    vals = {}
    for key in ("g1", "g2", "l", "gamma1", "gamma2", "lambda"):
        try:
            vals[key] = np.array(doc[key], dtype=float)
        except (TypeError, ValueError):
            raise SpecParseError(f"{key} must be numeric", _line_of(text, key)) from None
    for key in ("gamma1", "gamma2", "lambda"):
        if vals[key].ndim != 0:
            raise SpecParseError(f"{key} must be a number", _line_of(text, key))
    try:
        spec = ChannelSpec(W.reshape(n1, n2, ns, ny), str(doc.get("name", "channel")))
    except ValueError as e:
        raise SpecParseError(str(e), _line_of(text, "W")) from None
    costs = CostModel(vals["g1"], vals["g2"], vals["l"])
    cons = ConstraintSpec(float(vals["gamma1"]), float(vals["gamma2"]), float(vals["lambda"]))
    problems = validate(spec, costs, cons)
    if problems:
        first = problems[0]
        key = next((k for k in ("g1", "g2", "lambda", "gamma1", "gamma2") if k in first),
                   "W" if "row" in first or "W" in first else "l")
        raise SpecParseError("; ".join(problems), _line_of(text, key))
    return spec, costs, cons


def read_channel(path) -> tuple[ChannelSpec, CostModel, ConstraintSpec]:
    return loads_channel(Path(path).read_text(encoding="utf-8"))


def write_channel(path, spec: ChannelSpec, costs: CostModel, constraints: ConstraintSpec) -> None:
    Path(path).write_text(dumps_channel(spec, costs, constraints), encoding="utf-8")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if np.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def to_json(obj, **kw) -> str:
    """JSON with numpy values converted and infinities spelled as strings."""
    return json.dumps(_jsonable(obj), sort_keys=True, **kw)


def write_region(path, region, extra_meta: dict | None = None) -> tuple[Path, Path]:
    """Write the boundary as CSV (header ``r1,r2``) and metadata to ``<stem>.json``."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r1", "r2"])
        for r1, r2 in region.boundary:
            w.writerow([repr(float(r1)), repr(float(r2))])
    meta = region.to_dict()
    meta.pop("boundary", None)
    if extra_meta:
        meta.update(extra_meta)
    mpath = path.with_suffix(".json")
    mpath.write_text(to_json(meta, indent=2) + "\n", encoding="utf-8")
    return path, mpath


def read_region_csv(path) -> list[tuple[float, float]]:
    with Path(path).open(encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["r1", "r2"]:
        raise SpecParseError("region CSV must start with the header r1,r2", 1)
    return [(float(a), float(b)) for a, b in rows[1:]]
