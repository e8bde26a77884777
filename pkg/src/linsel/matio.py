"""Plain-text matrix and vector files.

Format: the first line holds ``rows cols``; the remaining lines hold the
``rows * cols`` entries in row-major order, whitespace-separated, in decimal
or scientific notation. Vectors are stored as single-column matrices.
"""

import numpy as np

from .errors import InvalidInputError


def read_matrix(path):
    """Read a matrix file, reporting the offending line on malformed input."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise InvalidInputError(f"{path}: empty file, expected 'rows cols' header")
    header = lines[0].split()
    if len(header) != 2:
        raise InvalidInputError(f"{path}: line 1: expected 'rows cols', got {lines[0]!r}")
    try:
        rows, cols = int(header[0]), int(header[1])
    except ValueError:
        raise InvalidInputError(
            f"{path}: line 1: non-integer dimensions {lines[0]!r}"
        ) from None
    if rows < 0 or cols < 0:
        raise InvalidInputError(f"{path}: line 1: negative dimensions")
    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        for token in line.split():
            try:
                values.append(float(token))
            except ValueError:
                raise InvalidInputError(
                    f"{path}: line {lineno}: invalid entry {token!r}"
                ) from None
            if len(values) > rows * cols:
                raise InvalidInputError(
                    f"{path}: line {lineno}: more than {rows * cols} entries"
                )
    if len(values) != rows * cols:
        raise InvalidInputError(
            f"{path}: line {len(lines)}: expected {rows * cols} entries, found {len(values)}"
        )
    return np.asarray(values, dtype=float).reshape(rows, cols)


def read_vector(path):
    """Read a vector stored as an r x 1 or 1 x r matrix."""
    mat = read_matrix(path)
    if 1 not in mat.shape and mat.size != 0:
        raise InvalidInputError(
            f"{path}: expected a vector (one row or one column), got shape {mat.shape}"
        )
    return mat.reshape(-1)


def write_matrix(path, array):
    """Write a matrix (or a vector, stored as one column) to ``path``."""
    arr = np.asarray(array, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidInputError(f"cannot store array of ndim {arr.ndim}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            # repr() is shortest round-trip, keeping re-runs byte identical
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
