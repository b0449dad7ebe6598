"""
Data Handling Utilities Module

Serialization helpers shared by the dataset, artifact and prediction writers:

- JSON encoding with floats written at 17 significant digits
- Atomic file writes (write to a temporary sibling, then rename)
- File digests used to tie calibration artifacts to their input data
"""

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Union

import numpy as np

PathLike = Union[str, Path]


def format_float(value: float) -> str:
    """Format a float with 17 significant digits; infinities as JSON5-style tokens."""
    value = float(value)
    if math.isnan(value):
        return "NaN"
    if math.isinf(value):
        return "Infinity" if value > 0 else "-Infinity"
    text = format(value, ".17g")
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def to_json(obj: Any) -> str:
    """
    Encode an object as compact JSON with deterministic float formatting.

    Dict key order is preserved; numpy scalars and arrays are accepted.
    """
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k), ensure_ascii=False)}: {to_json(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write_text(path: PathLike, text: str) -> str:
    """Write text to path atomically and return the path as a string."""
    return atomic_write_bytes(path, text.encode('utf-8'))


def atomic_write_bytes(path: PathLike, payload: bytes) -> str:
    """Write bytes to a temporary file in the target directory, then rename it."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(payload)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    return str(target)


def write_json_lines(path: PathLike, rows: Iterable[Any]) -> str:
    """Write one JSON document per line, atomically."""
    lines = [to_json(row) for row in rows]
    text = "\n".join(lines) + ("\n" if lines else "")
    return atomic_write_text(path, text)


def file_digest(path: PathLike) -> str:
    """SHA-256 hex digest of a file's bytes."""
    sha = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(65536), b''):
            sha.update(chunk)
    return sha.hexdigest()
