"""Plain-text matrix and vector files.

Symmetric matrices::

    dim 3
    0 0 2.0
    0 1 -0.5
    ...

Rectangular matrices start with ``rows n cols k``. Entries are ``i j value``
triples with 0-based indices; symmetric pairs are written once. Vectors hold
one value per line. Numbers are written with 17 significant digits.
"""
from __future__ import annotations

import numpy as np

from .matrix import SparseSymmetricMatrix


class FormatError(ValueError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def fmt(x):
    return format(float(x), ".17g")


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if line and not line.startswith("#"):
                yield lineno, line


def _header(path, lines, keys):
    try:
        lineno, line = next(lines)
    except StopIteration:
        raise FormatError(path, 1, "empty file") from None
    parts = line.split()
    if len(parts) != 2 * len(keys) or parts[0::2] != list(keys):
        raise FormatError(path, lineno, f"expected header '{' '.join(k + ' N' for k in keys)}'")
    try:
        dims = [int(v) for v in parts[1::2]]
    except ValueError:
        raise FormatError(path, lineno, "dimensions must be integers") from None
    if any(d < 1 for d in dims):
        raise FormatError(path, lineno, "dimensions must be positive")
    return dims


def _triples(path, lines, shape):
    for lineno, line in lines:
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(path, lineno, "expected 'i j value'")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise FormatError(path, lineno, "malformed number") from None
        if not (0 <= i < shape[0] and 0 <= j < shape[1]):
            raise FormatError(path, lineno, f"index ({i}, {j}) out of range")
        if not np.isfinite(v):
            raise FormatError(path, lineno, "value is not finite")
        yield lineno, i, j, v


def read_symmetric(path) -> SparseSymmetricMatrix:
    lines = _lines(path)
    (dim,) = _header(path, lines, ["dim"])
    diag = np.zeros(dim)
    entries = {}
    seen = set()
    for lineno, i, j, v in _triples(path, lines, (dim, dim)):
        key = (min(i, j), max(i, j))
        if key in seen:
            raise FormatError(path, lineno, f"entry ({i}, {j}) given twice")
        seen.add(key)
        if i == j:
            diag[i] = v
        elif v != 0:
            entries[key] = v
    rows = [k[0] for k in entries]
    cols = [k[1] for k in entries]
    return SparseSymmetricMatrix(dim, diag, rows, cols, list(entries.values()))


def write_symmetric(path, A: SparseSymmetricMatrix):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"dim {A.dim}\n")
        for i, v in enumerate(A.diagonal):
            if v != 0:
                fh.write(f"{i} {i} {fmt(v)}\n")
        for i, j, v in zip(A.rows, A.cols, A.values):
            fh.write(f"{i} {j} {fmt(v)}\n")


def read_rectangular(path) -> np.ndarray:
    lines = _lines(path)
    n, k = _header(path, lines, ["rows", "cols"])
    S = np.zeros((n, k))
    seen = set()
    for lineno, i, j, v in _triples(path, lines, (n, k)):
        if (i, j) in seen:
            raise FormatError(path, lineno, f"entry ({i}, {j}) given twice")
        seen.add((i, j))
        S[i, j] = v
    return S


def write_rectangular(path, S):
    S = np.asarray(S, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"rows {S.shape[0]} cols {S.shape[1]}\n")
        for i, j in zip(*np.nonzero(S)):
            fh.write(f"{i} {j} {fmt(S[i, j])}\n")


def read_vector(path) -> np.ndarray:
    values = []
    for lineno, line in _lines(path):
        try:
            v = float(line)
        except ValueError:
            raise FormatError(path, lineno, "expected one number per line") from None
        if not np.isfinite(v):
            raise FormatError(path, lineno, "value is not finite")
        values.append(v)
    if not values:
        raise FormatError(path, 1, "empty vector file")
    return np.array(values)


def write_vector(path, values):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in np.asarray(values).reshape(-1):
            fh.write(fmt(v) + "\n")
