"""JSON formats for operators, points and reports.

Operator file::

    {"dim": d, "terms": [{"t": [...], "omega": [...], "re": x, "im": y}, ...]}

Duplicate (t, omega) entries are summed on load; writers emit terms sorted by
quantized (t, omega) so the output is byte-stable.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import TFOperator, TFPoint


class FormatError(ValueError):
    """Malformed input file."""


def operator_to_dict(op: TFOperator) -> dict:
    d = op.dim
    order = np.lexsort(op.keys.T[::-1]) if len(op) else np.zeros(0, dtype=int)
    terms = []
    for i in order:
        p, c = op.points[i], op.coeffs[i]
        terms.append({
            "t": [float(x) for x in p[:d]],
            "omega": [float(x) for x in p[d:]],
            "re": float(c.real),
            "im": float(c.imag),
        })
    return {"dim": d, "terms": terms}


def operator_from_dict(data) -> TFOperator:
    try:
        d = int(data["dim"])
        if d < 1:
            raise FormatError("dim must be >= 1")
        triples = []
        for term in data["terms"]:
            t, w = term["t"], term["omega"]
            if len(t) != d or len(w) != d:
                raise FormatError(f"term {term!r} does not have dimension {d}")
            c = complex(float(term.get("re", 0.0)), float(term.get("im", 0.0)))
            triples.append((t, w, c))
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed operator data: {exc}") from exc
    try:
        return TFOperator.from_terms(d, triples)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1)


def write_operator(path, op: TFOperator) -> None:
    Path(path).write_text(dumps(operator_to_dict(op)) + "\n", encoding="utf-8")


def read_operator(path) -> TFOperator:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read operator file {path}: {exc}") from exc
    return operator_from_dict(data)


def read_points(path) -> list:
    """Point list: ``[{"t": [...], "omega": [...]}, ...]`` or ``{"points": [...]}``."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(data, dict):
            data = data["points"]
        return [TFPoint(tuple(p["t"]), tuple(p["omega"])) for p in data]
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"cannot read point file {path}: {exc}") from exc


def point_to_dict(p: TFPoint) -> dict:
    return {"t": list(p.t), "omega": list(p.omega)}
