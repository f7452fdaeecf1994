"""Load and save symmetric data matrices.

Two formats are supported:

* ``matrixmarket``: coordinate, real (or integer), symmetric or general,
  1-based indices. Symmetric files store the lower triangle.
* ``csv``: dense, comma separated, no header.

Values are written with 17 significant digits, so a save/load round trip
reproduces every double exactly.
"""
import csv
import os

import numpy as np

from .matrix import InvalidInputError, as_data_matrix

__all__ = ["MatrixParseError", "guess_format", "load_matrix", "save_matrix"]

SYM_TOL = 1e-12


class MatrixParseError(ValueError):
    """Malformed matrix file; ``lineno`` is 1-based."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def guess_format(path):
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".mtx", ".mm"):
        return "matrixmarket"
    if ext in (".csv", ".txt"):
        return "csv"
    raise ValueError(f"cannot infer matrix format from {path!r}; pass format=")


def _validate(M, path):
    try:
        return as_data_matrix(M, sym_tol=SYM_TOL * max(1.0, float(np.max(np.abs(M), initial=0.0))))
    except InvalidInputError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None


def _read_mm(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixParseError(path, 1, "empty file")
    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket":
        raise MatrixParseError(path, 1, f"bad MatrixMarket banner {lines[0]!r}")
    obj, fmt, field, symmetry = (h.lower() for h in header[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixParseError(path, 1, f"unsupported layout {obj} {fmt}; need matrix coordinate")
    if field not in ("real", "integer", "double"):
        raise MatrixParseError(path, 1, f"unsupported field {field!r}")
    if symmetry not in ("symmetric", "general"):
        raise MatrixParseError(path, 1, f"unsupported symmetry {symmetry!r}")

    lineno = 1
    body = iter(enumerate(lines[1:], start=2))
    for lineno, line in body:
        if line.strip() and not line.lstrip().startswith("%"):
            break
    else:
        raise MatrixParseError(path, lineno + 1, "missing size line")
    try:
        nrows, ncols, nnz = (int(tok) for tok in line.split())
    except ValueError:
        raise MatrixParseError(path, lineno, f"bad size line {line!r}") from None
    if nrows != ncols or nrows < 1:
        raise MatrixParseError(path, lineno, f"matrix must be square, got {nrows}x{ncols}")

    M = np.zeros((nrows, ncols))
    seen = 0
    for lineno, line in body:
        if not line.strip() or line.lstrip().startswith("%"):
            continue
        tok = line.split()
        try:
            if len(tok) != 3:
                raise ValueError
            i, j, v = int(tok[0]) - 1, int(tok[1]) - 1, float(tok[2])
        except ValueError:
            raise MatrixParseError(path, lineno, f"bad entry {line!r}") from None
        if not (0 <= i < nrows and 0 <= j < ncols):
            raise MatrixParseError(path, lineno, f"index ({i + 1}, {j + 1}) out of range")
        if symmetry == "symmetric" and j > i:
            raise MatrixParseError(path, lineno, "symmetric storage must be lower triangular")
        M[i, j] = v
        if symmetry == "symmetric":
            M[j, i] = v
        seen += 1
    if seen != nnz:
        raise MatrixParseError(path, lineno, f"expected {nnz} entries, found {seen}")
    return M


def _read_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                raise MatrixParseError(path, lineno, f"non-numeric field in {rec!r}") from None
            if len(rows[-1]) != len(rows[0]):
                raise MatrixParseError(
                    path, lineno, f"expected {len(rows[0])} columns, got {len(rows[-1])}")
    if not rows:
        raise MatrixParseError(path, 1, "empty file")
    M = np.array(rows)
    if M.shape[0] != M.shape[1]:
        raise MatrixParseError(path, len(rows), f"matrix must be square, got {M.shape}")
    return M


def load_matrix(path, format=None):
    """Read a symmetric nonnegative matrix.

    Raises
    ------
    MatrixParseError
        The file does not parse; the message carries the line number.
    InvalidInputError
        The matrix parses but is asymmetric beyond 1e-12 (relative to its
        largest entry) or has a negative entry.
    """
    format = format or guess_format(path)
    if format == "matrixmarket":
        M = _read_mm(path)
    elif format == "csv":
        M = _read_csv(path)
    else:
        raise ValueError(f"unknown format {format!r}")
    return _validate(M, path)


def save_matrix(path, M, format=None):
    M = np.asarray(M, dtype=float)
    format = format or guess_format(path)
    if format == "matrixmarket":
        i, j = np.nonzero(np.tril(M))
        with open(path, "w") as fh:
            fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
            fh.write(f"{M.shape[0]} {M.shape[1]} {len(i)}\n")
            for a, b in zip(i, j):
                fh.write(f"{a + 1} {b + 1} {M[a, b]:.17g}\n")
    elif format == "csv":
        np.savetxt(path, M, delimiter=",", fmt="%.17g")
    else:
        raise ValueError(f"unknown format {format!r}")
