"""Deterministic output files.

Text: header lines starting with ``#`` (key: value), then one whitespace
separated row per record; floats use ``%.12e``.

Binary: a 256-byte ASCII header, space padded and terminated by a newline,
of the form ``POLARITON2D-BIN 1 rows=R cols=C dtype=<f8 order=C columns=...``,
followed by R*C little-endian IEEE-754 float64 values in row-major order.
"""
from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

HEADER_BYTES = 256
FLOAT_FMT = "%.12e"


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FMT % float(x)


def write_text(path, header: dict, columns: list, rows) -> Path:
    """``rows`` is an iterable of sequences matching ``columns``."""
    path = Path(path)
    lines = [f"# {k}: {v}" for k, v in header.items()]
    lines.append("# columns: " + " ".join(columns))
    for row in rows:
        lines.append(" ".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_binary(path, data: np.ndarray, columns: list) -> Path:
    data = np.ascontiguousarray(np.asarray(data, dtype="<f8"))
    if data.ndim == 1:
        data = data[:, None]
    rows, cols = data.shape
    head = f"POLARITON2D-BIN 1 rows={rows} cols={cols} dtype=<f8 order=C columns={','.join(columns)}"
    if len(head) >= HEADER_BYTES:
        head = f"POLARITON2D-BIN 1 rows={rows} cols={cols} dtype=<f8 order=C"
    raw = head.ljust(HEADER_BYTES - 1).encode("ascii") + b"\n"
    path = Path(path)
    path.write_bytes(raw + data.tobytes(order="C"))
    return path


def read_binary(path) -> tuple:
    """(header string, float64 array of shape (rows, cols))."""
    raw = Path(path).read_bytes()
    head = raw[:HEADER_BYTES].decode("ascii").strip()
    fields = dict(tok.split("=", 1) for tok in head.split()[2:] if "=" in tok)
    rows, cols = int(fields["rows"]), int(fields["cols"])
    data = np.frombuffer(raw[HEADER_BYTES:], dtype="<f8").reshape(rows, cols)
    return head, data


def read_text(path) -> tuple:
    """(header dict, list of row token lists)."""
    header, rows = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            header[key.strip()] = value.strip()
        elif line.strip():
            rows.append(line.split())
    return header, rows


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
