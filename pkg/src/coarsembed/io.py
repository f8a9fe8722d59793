"""Canonical JSON with atomic writes, plus loaders that turn input documents into spaces and maps."""
from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .embedding import CoarseMap, coordinate_map
from .lp import BlockVector
from .metric import FiniteMetricSpace, check_metric

SIG_DIGITS = 12


class InputError(ValueError):
    """Unreadable or malformed input file."""


def canonical(obj):
    """Plain-JSON form with floats rounded to 12 significant digits.

    Non-finite numbers become strings; numpy values become plain lists and scalars."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [canonical(v) for v in obj]
        if isinstance(obj, (set, frozenset)):
            items.sort(key=lambda v: json.dumps(v, sort_keys=True))
        return items
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{SIG_DIGITS}g}")
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2) + "\n"


def write_atomic(path, text: str) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj) -> Path:
    return write_atomic(path, dumps(obj))


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file {path} does not exist")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc


def _labels_and_matrix(doc):
    if isinstance(doc, list):
        dist = doc
        labels = None
    elif isinstance(doc, dict) and "dist" in doc:
        dist = doc["dist"]
        labels = doc.get("labels")
    else:
        raise InputError('a space is a distance matrix or {"labels": [...], "dist": [[...]]}')
    try:
        arr = np.asarray(dist, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"distance matrix is not numeric: {exc}") from exc
    if labels is None:
        labels = list(range(arr.shape[0])) if arr.ndim == 2 else []
    return list(labels), arr


def read_matrix(path):
    """``(labels, array)`` from JSON or from CSV/whitespace text (labels are then ``0..n-1``)."""
    path = Path(path)
    if path.suffix.lower() in (".csv", ".txt"):
        if not path.is_file():
            raise InputError(f"input file {path} does not exist")
        try:
            arr = np.loadtxt(path, delimiter="," if path.suffix.lower() == ".csv" else None, ndmin=2)
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from exc
        return list(range(arr.shape[0])), arr
    return _labels_and_matrix(read_json(path))


def space_from_doc(doc) -> FiniteMetricSpace:
    labels, arr = _labels_and_matrix(doc)
    report = check_metric(arr, labels)
    if not report.valid:
        raise InputError(f"not a metric: {report.summary()}")
    return FiniteMetricSpace(tuple(labels), arr)


def map_from_doc(doc, space: FiniteMetricSpace | None = None) -> CoarseMap:
    """A map document holds ``space`` (unless given), ``p``, and either
    ``images`` (label -> block-vector JSON) or ``coords`` (label -> vector)."""
    if space is None:
        if "space" not in doc:
            raise InputError("map document has no space")
        space = space_from_doc(doc["space"])
    p = float(doc.get("p", 2.0))
    by_str = {str(x): x for x in space.labels}
    try:
        if "images" in doc:
            images = {by_str[k]: BlockVector.from_json(v) for k, v in doc["images"].items()}
            return CoarseMap(space, images)
        if "coords" in doc:
            coords = {by_str[k]: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in doc["coords"].items()}
            return coordinate_map(space, coords, p)
        if doc.get("constant"):
            return coordinate_map(space, {x: np.zeros(1) for x in space.labels}, p)
    except KeyError as exc:
        raise InputError(f"map refers to unknown point {exc}") from exc
    raise InputError('a map document needs "images", "coords" or "constant": true')
