"""File formats.

* Matrices as CSV (one row per matrix row; for sample matrices one row per
  feature and one column per sample), floats written with ``repr`` so they
  read back bit for bit.
* Sample matrices as raw binary: two little-endian ``uint64`` (m, n) followed
  by ``m * n`` little-endian ``float64`` in column-major order.
* Symmetric tensors as text: ``d`` on the first line, then the ``d^3`` entries
  in row-major order, one per line.
* Metadata as JSON with sorted keys.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import DataError
from .tensor import SymTensor3

__all__ = [
    "fmt_float",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_matrix_bin",
    "read_matrix_bin",
    "read_matrix",
    "write_matrix",
    "write_tensor_text",
    "read_tensor_text",
    "write_json",
    "read_json",
    "read_config",
    "parse_assignments",
]

_HEADER = np.dtype("<u8")
_DATA = np.dtype("<f8")


def fmt_float(x) -> str:
    """Shortest decimal string that round-trips a float64."""
    return repr(float(x))


def write_matrix_csv(path, A) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in A:
            w.writerow([fmt_float(x) for x in row])


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: empty matrix file")
    if len({len(r) for r in rows}) != 1:
        raise DataError(f"{path}: rows have different lengths")
    return np.array(rows, dtype=float)


def write_matrix_bin(path, A) -> None:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DataError("binary format holds 2-D matrices only")
    with open(path, "wb") as fh:
        fh.write(np.array(A.shape, dtype=_HEADER).tobytes())
        fh.write(np.asarray(A, dtype=_DATA).tobytes(order="F"))


def read_matrix_bin(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise DataError(f"{path}: truncated header")
    m, n = (int(v) for v in np.frombuffer(raw[:16], dtype=_HEADER))
    body = raw[16:]
    if len(body) != 8 * m * n:
        raise DataError(f"{path}: header says {m}x{n} but body has {len(body)} bytes")
    return np.frombuffer(body, dtype=_DATA).reshape((m, n), order="F").astype(float)


def read_matrix(path) -> np.ndarray:
    """Read a matrix; ``.bin`` files use the binary layout, anything else CSV."""
    return read_matrix_bin(path) if str(path).endswith(".bin") else read_matrix_csv(path)


def write_matrix(path, A) -> None:
    if str(path).endswith(".bin"):
        write_matrix_bin(path, A)
    else:
        write_matrix_csv(path, A)


def write_tensor_text(path, T) -> None:
    data = T.data if isinstance(T, SymTensor3) else np.asarray(T, dtype=float)
    d = data.shape[0]
    with open(path, "w") as fh:
        fh.write(f"{d}\n")
        for x in data.reshape(-1):
            fh.write(fmt_float(x) + "\n")


def read_tensor_text(path) -> SymTensor3:
    tokens = Path(path).read_text().split()
    if not tokens:
        raise DataError(f"{path}: empty tensor file")
    try:
        d = int(tokens[0])
        vals = np.array([float(t) for t in tokens[1:]])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    if d < 1 or vals.size != d**3:
        raise DataError(f"{path}: expected {max(d, 0) ** 3} entries for d={d}, found {vals.size}")
    data = vals.reshape(d, d, d)
    if not np.allclose(data, np.transpose(data, (1, 0, 2))) or not np.allclose(data, np.transpose(data, (0, 2, 1))):
        raise DataError(f"{path}: tensor is not symmetric")
    return SymTensor3(data)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def parse_assignments(items) -> dict:
    """``["a=1", "b = x y"]`` to ``{"a": "1", "b": "x y"}``."""
    out = {}
    for item in items:
        if "=" not in item:
            raise DataError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip()
        if not k:
            raise DataError(f"empty key in {item!r}")
        out[k] = v.strip()
    return out


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, blank lines are skipped."""
    lines = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return parse_assignments(lines)
