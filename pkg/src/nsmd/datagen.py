"""Synthetic data, reproducible Gaussian draws and similarity matrices."""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

__all__ = [
    "BoxMullerRng",
    "SynthSpec",
    "build_similarity",
    "gen_synthetic",
    "zero_fraction",
]

_TWO_POW_M53 = 2.0 ** -53


class BoxMullerRng:
    """Standard normal variates from Philox4x64-10 via Box-Muller.

    The stream is fully determined by ``seed``: the Philox key is
    ``(seed, 0)`` and the counter starts at zero. Each raw 64-bit word
    ``x`` becomes the uniform ``((x >> 11) + 0.5) * 2**-53`` in (0, 1),
    consecutive pairs ``(u1, u2)`` give

        z1 = sqrt(-2 ln u1) cos(2 pi u2),  z2 = sqrt(-2 ln u1) sin(2 pi u2)

    and arrays are filled in C order from ``z1, z2, z1', z2', ...``.
    Nothing here depends on numpy's own normal sampler, so the stream can
    be reproduced by any Philox implementation.
    """

    def __init__(self, seed=0):
        seed = int(seed)
        if not 0 <= seed < 2 ** 64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = seed
        self._bits = np.random.Philox(key=seed)

    def uniform(self, n):
        raw = self._bits.random_raw(n)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_POW_M53

    def normal(self, shape):
        n = int(np.prod(shape))
        u = self.uniform(2 * ((n + 1) // 2)).reshape(-1, 2)
        radius = np.sqrt(-2.0 * np.log(u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        z = np.column_stack((radius * np.cos(angle), radius * np.sin(angle)))
        return z.ravel()[:n].reshape(shape)


@dataclass(frozen=True)
class SynthSpec:
    m: int
    rbar: int
    p: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.rbar < 1:
            raise ValueError("m and rbar must be positive")
        if self.rbar > self.m:
            raise ValueError(f"rbar={self.rbar} exceeds m={self.m}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    def describe(self):
        return f"synthetic(m={self.m},rbar={self.rbar},p={self.p:g},seed={self.seed})"


def gen_synthetic(spec):
    """Thresholded Gram matrix ``max(0, U U^T - p * max(U U^T))``.

    ``U`` is an ``m x rbar`` standard normal matrix. Raising ``p`` from 0 to
    1 moves the zero fraction from about one half to (almost surely) all
    entries.
    """
    U = BoxMullerRng(spec.seed).normal((spec.m, spec.rbar))
    M_hat = U @ U.T
    # symmetrize explicitly; BLAS may not return a bit-symmetric product
    M_hat = np.triu(M_hat) + np.triu(M_hat, 1).T
    return np.maximum(0.0, M_hat - spec.p * M_hat.max())


def zero_fraction(M):
    M = np.asarray(M)
    return float(np.count_nonzero(M == 0)) / M.size


def build_similarity(features, k, self_tuning=True):
    """Gaussian-kernel similarities on a symmetrized k-nearest-neighbour graph.

    Parameters
    ----------
    features : (n, d) array_like
        One sample per row.
    k : int
        Neighbours per point, excluding the point itself. Requires ``n >= k + 1``.
    self_tuning : bool, optional
        With self-tuning, ``S_ij = exp(-d_ij^2 / (sigma_i sigma_j))`` where
        ``sigma_i`` is the distance from point ``i`` to its k-th neighbour.
        Otherwise a single bandwidth, the mean of those distances, is used:
        ``S_ij = exp(-d_ij^2 / sigma^2)``.

    Returns
    -------
    S : (n, n) numpy.ndarray
        Symmetric, nonnegative, zero diagonal. ``S_ij`` is nonzero when ``j``
        is among the k neighbours of ``i`` or vice versa.

    Notes
    -----
    Bandwidths are floored at 1e-12 so duplicate points do not divide by
    zero. Neighbour ties are broken by index.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    k = int(k)
    if k < 1 or n < k + 1:
        raise ValueError(f"need 1 <= k <= n - 1, got k={k}, n={n}")
    D2 = squareform(pdist(X, "sqeuclidean"))
    masked = D2.copy()
    np.fill_diagonal(masked, np.inf)
    order = np.argsort(masked, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    adj = np.zeros((n, n), dtype=bool)
    adj[rows, order.ravel()] = True
    adj |= adj.T
    kth = np.sqrt(masked[np.arange(n), order[:, -1]])
    if self_tuning:
        sigma = np.maximum(kth, 1e-12)
        scale = np.outer(sigma, sigma)
    else:
        scale = max(float(np.mean(kth)), 1e-12) ** 2
    S = np.where(adj, np.exp(-D2 / scale), 0.0)
    np.fill_diagonal(S, 0.0)
    return S
