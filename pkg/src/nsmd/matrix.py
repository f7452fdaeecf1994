"""Dense symmetric matrices, support patterns and error metrics.

Matrices are plain ``numpy.ndarray`` objects; this module only validates
them and computes the quantities every solver shares.
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InvalidInputError",
    "SupportPattern",
    "as_data_matrix",
    "build_support",
    "frobenius_norm",
    "relative_error",
]


class InvalidInputError(ValueError):
    """Raised when a data matrix violates symmetry or nonnegativity."""


def frobenius_norm(A):
    """Frobenius norm of an array of any shape."""
    A = np.asarray(A, dtype=float)
    return float(np.sqrt(np.sum(A * A)))


def as_data_matrix(M, sym_tol=0.0):
    """Validate ``M`` as a square, symmetric, nonnegative data matrix.

    Returns a float copy. ``sym_tol`` is an absolute tolerance on
    ``|M_ij - M_ji|``; the default demands exact symmetry.
    """
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        i, j = np.argwhere(~np.isfinite(M))[0]
        raise InvalidInputError(f"non-finite entry at index ({i}, {j})")
    asym = np.abs(M - M.T)
    if np.any(asym > sym_tol):
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise InvalidInputError(
            f"matrix is not symmetric: |M[{i},{j}] - M[{j},{i}]| = {asym[i, j]:.3g}")
    if np.any(M < 0):
        i, j = np.argwhere(M < 0)[0]
        raise InvalidInputError(f"negative entry {M[i, j]!r} at index ({i}, {j})")
    return M


@dataclass(frozen=True)
class SupportPattern:
    """Partition of the index pairs of ``M`` into zeros and positives.

    ``positive`` is the boolean mask of ``M > 0``; the index lists are
    derived from it on demand.
    """

    positive: np.ndarray

    @property
    def dim(self):
        return self.positive.shape[0]

    @property
    def zero_mask(self):
        return ~self.positive

    @property
    def zero_set(self):
        """(n, 2) array of index pairs with ``M_ij == 0``."""
        return np.argwhere(~self.positive)

    @property
    def positive_set(self):
        """(n, 2) array of index pairs with ``M_ij > 0``."""
        return np.argwhere(self.positive)


def build_support(M):
    """Split the indices of a nonnegative symmetric ``M`` by exact zero test.

    Raises
    ------
    InvalidInputError
        If ``M`` has a negative entry, is not square, or is not symmetric.
    """
    M = as_data_matrix(M)
    positive = M > 0
    positive.setflags(write=False)
    return SupportPattern(positive)


def relative_error(M, U, relu=True):
    """Relative fitting error of the factor ``U``.

    ``||M - max(0, U U^T)||_F / ||M||_F`` with ``relu`` on, and
    ``||M - U U^T||_F / ||M||_F`` with it off (the symmetric NMF metric).
    """
    M = np.asarray(M, dtype=float)
    norm_m = frobenius_norm(M)
    if norm_m == 0:
        raise ZeroDivisionError("relative error is undefined for an all-zero M")
    U = np.asarray(U, dtype=float)
    X = U @ U.T
    if relu:
        np.maximum(X, 0, out=X)
    return frobenius_norm(M - X) / norm_m
