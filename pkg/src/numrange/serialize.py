"""JSON readers and writers for matrices, tuples, operator models, and
diagonal sequences, plus the polygon CSV export.

Schemas:
  matrix   {"dim": N, "entries": [[[re, im], ...], ...]}        (row-major)
  tuple    {"members": [<matrix>, ...]}
  model    {"head": <matrix> | null,
            "tail": [{"kind": "constant", "c": [re, im]} |
                     {"kind": "periodic", "values": [[re, im], ...]} |
                     {"kind": "geometric", "c": [re, im], "r": "p/q"}, ...],
            "limit_points": [[re, im], ...]}
  sequence {"prefix": ["p/q", ...],
            "tails": [{"kind": "constant", "c": "p/q"} |
                      {"kind": "periodic", "values": ["p/q", ...]} |
                      {"kind": "geometric", "c": "p/q", "r": "p/q"}, ...],
            "interleave": k}
"""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from . import kadison, models
from .errors import InputFormatError
from .joint import OperatorTuple
from .polygon import Polygon


def load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    except OSError as exc:
        raise InputFormatError(f"{path}: {exc}")


def _complex_from(pair, where: str) -> complex:
    if (not isinstance(pair, (list, tuple)) or len(pair) != 2
            or not all(isinstance(x, (int, float)) for x in pair)):
        raise InputFormatError(f"{where}: expected [re, im], got {pair!r}")
    return complex(pair[0], pair[1])


def matrix_from_json(doc, where: str = "matrix") -> np.ndarray:
    if not isinstance(doc, dict) or "entries" not in doc:
        raise InputFormatError(f"{where}: expected an object with 'entries'")
    entries = doc["entries"]
    dim = doc.get("dim", len(entries))
    if not isinstance(entries, list) or len(entries) != dim:
        raise InputFormatError(f"{where}: expected {dim} rows, got {len(entries)}")
    out = np.zeros((dim, dim), dtype=complex)
    for i, row in enumerate(entries):
        if not isinstance(row, list) or len(row) != dim:
            raise InputFormatError(f"{where}: row {i} must have {dim} entries")
        for j, pair in enumerate(row):
            out[i, j] = _complex_from(pair, f"{where}[{i}][{j}]")
    return out


def matrix_to_json(T: np.ndarray) -> dict:
    T = np.asarray(T, dtype=complex)
    return {"dim": T.shape[0],
            "entries": [[[z.real, z.imag] for z in row] for row in T]}


def tuple_from_json(doc) -> OperatorTuple:
    if not isinstance(doc, dict) or "members" not in doc:
        raise InputFormatError("tuple: expected an object with 'members'")
    return OperatorTuple(tuple(
        matrix_from_json(m, f"members[{i}]") for i, m in enumerate(doc["members"])))


def tuple_to_json(ts: OperatorTuple) -> dict:
    return {"members": [matrix_to_json(m) for m in ts.members]}


def _fraction_from(text, where: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError, TypeError):
        raise InputFormatError(f"{where}: expected a rational like '3/4', got {text!r}")


def _tail_stream_from(doc, where: str) -> models.TailStream:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InputFormatError(f"{where}: expected an object with 'kind'")
    kind = doc["kind"]
    if kind == "constant":
        return models.Constant(_complex_from(doc.get("c"), f"{where}.c"))
    if kind == "periodic":
        vals = doc.get("values")
        if not isinstance(vals, list) or not vals:
            raise InputFormatError(f"{where}.values: expected a nonempty list")
        return models.Periodic(tuple(
            _complex_from(v, f"{where}.values[{i}]") for i, v in enumerate(vals)))
    if kind == "geometric":
        return models.Geometric(_complex_from(doc.get("c"), f"{where}.c"),
                                _fraction_from(doc.get("r"), f"{where}.r"))
    raise InputFormatError(f"{where}.kind: unknown stream kind {kind!r}")


def model_from_json(doc) -> models.OperatorModel:
    if not isinstance(doc, dict):
        raise InputFormatError("model: expected an object")
    head_doc = doc.get("head")
    head = (np.zeros((0, 0), dtype=complex) if head_doc is None
            else matrix_from_json(head_doc, "model.head"))
    tails = doc.get("tail")
    if not isinstance(tails, list) or not tails:
        raise InputFormatError("model.tail: expected a nonempty list of streams")
    limits = doc.get("limit_points")
    if not isinstance(limits, list) or not limits:
        raise InputFormatError("model.limit_points: expected a nonempty list")
    return models.OperatorModel(
        head=head,
        tails=tuple(_tail_stream_from(t, f"model.tail[{i}]") for i, t in enumerate(tails)),
        limit_points=tuple(_complex_from(p, f"model.limit_points[{i}]")
                           for i, p in enumerate(limits)),
    )


def model_to_json(m: models.OperatorModel) -> dict:
    return {
        "head": None if m.head_dim == 0 else matrix_to_json(m.head),
        "tail": [s.to_json() for s in m.tails],
        "limit_points": [[p.real, p.imag] for p in m.limit_points],
    }


def _rational_stream_from(doc, where: str) -> kadison.RationalStream:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InputFormatError(f"{where}: expected an object with 'kind'")
    kind = doc["kind"]
    if kind == "constant":
        return kadison.ConstantRational(_fraction_from(doc.get("c"), f"{where}.c"))
    if kind == "periodic":
        vals = doc.get("values")
        if not isinstance(vals, list) or not vals:
            raise InputFormatError(f"{where}.values: expected a nonempty list")
        return kadison.PeriodicRational(tuple(
            _fraction_from(v, f"{where}.values[{i}]") for i, v in enumerate(vals)))
    if kind == "geometric":
        return kadison.GeometricRational(_fraction_from(doc.get("c"), f"{where}.c"),
                                         _fraction_from(doc.get("r"), f"{where}.r"))
    raise InputFormatError(f"{where}.kind: unknown stream kind {kind!r}")


def sequence_from_json(doc) -> kadison.DiagonalSeq:
    if not isinstance(doc, dict):
        raise InputFormatError("sequence: expected an object")
    prefix = doc.get("prefix", [])
    tails = doc.get("tails")
    if not isinstance(tails, list) or not tails:
        raise InputFormatError("sequence.tails: expected a nonempty list")
    seq = kadison.DiagonalSeq(
        prefix=tuple(_fraction_from(v, f"prefix[{i}]") for i, v in enumerate(prefix)),
        tails=tuple(_rational_stream_from(t, f"tails[{i}]") for i, t in enumerate(tails)),
    )
    declared = doc.get("interleave")
    if declared is not None and declared != seq.interleave:
        raise InputFormatError(
            f"interleave {declared} does not match the {seq.interleave} tails")
    return seq


def sequence_to_json(seq: kadison.DiagonalSeq) -> dict:
    return seq.to_json()


def polygon_to_csv(poly: Polygon, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(poly.to_csv())


def write_json(doc, path: str, indent: int = 2) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=indent, sort_keys=True)
        fh.write("\n")
