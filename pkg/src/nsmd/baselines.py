"""Symmetric NMF baselines: SymHALS and SymANLS.

Both attack ``min_{U >= 0} 0.5 ||M - U U^T||^2 + lam/2 ||U||^2`` through the
split problem

    min_{U, V >= 0}  0.5 ||M - U V^T||^2 + mu/2 ||U - V||^2
                     + lam/2 (||U||^2 + ||V||^2)

whose blocks are ordinary nonnegative least squares problems. The penalty
``mu`` pulls the two copies together; the reported factor is ``(U + V)/2``
and its error is measured without ReLU.
"""
import time
from dataclasses import dataclass

import numpy as np

from .aapb import ConfigError, SolveResult, SolveTrace, initial_factor
from .datagen import BoxMullerRng
from .matrix import as_data_matrix, frobenius_norm

__all__ = [
    "BaselineParams",
    "hals_sweep",
    "initial_pair",
    "nnls_block",
    "split_objective",
    "symanls_run",
    "symhals_run",
]


@dataclass(frozen=True)
class BaselineParams:
    rank: int
    lam: float = 0.0
    mu: float = 1.0
    tol: float = 1e-4
    max_iter: int = 1000
    max_time: float = 30.0
    seed: int = 0
    inner_iter: int = 500
    inner_tol: float = 1e-8

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.rank < 1:
            raise ConfigError(f"rank must be positive, got {self.rank}")
        if not self.mu > 0:
            raise ConfigError(f"mu must be positive, got {self.mu}")
        if self.lam < 0:
            raise ConfigError(f"lam must be nonnegative, got {self.lam}")
        if not self.tol > 0 or self.max_iter < 1 or not self.max_time > 0:
            raise ConfigError("tol, max_iter and max_time must be positive")


def split_objective(M, U, V, mu, lam):
    R = M - U @ V.T
    D = U - V
    return 0.5 * (float(np.sum(R * R)) + mu * float(np.sum(D * D))
                  + lam * (float(np.sum(U * U)) + float(np.sum(V * V))))


def hals_sweep(M, A, B, mu, lam):
    """Update every column of ``A`` in place with ``B`` fixed.

    Column ``j`` gets the exact minimizer of the split objective over
    ``a_j >= 0`` with the other columns frozen:

        a_j = max(0, (M b_j - sum_{l != j} a_l (b_l^T b_j) + mu b_j)
                     / (||b_j||^2 + mu + lam))
    """
    MB = M @ B
    BtB = B.T @ B
    for j in range(A.shape[1]):
        num = MB[:, j] - A @ BtB[:, j] + A[:, j] * BtB[j, j] + mu * B[:, j]
        denom = BtB[j, j] + mu + lam
        if denom > 0:
            A[:, j] = np.maximum(0.0, num / denom)
        else:
            A[:, j] = 0.0
    return A


def nnls_block(M, B, mu, lam, A0, max_iter=500, tol=1e-8):
    """Solve ``min_{A >= 0} 0.5 ||M - A B^T||^2 + mu/2 ||A - B||^2 + lam/2 ||A||^2``.

    Accelerated projected gradient with function-value restart, started
    at ``A0``. Rows share the Hessian ``H = B^T B + (mu + lam) I`` so the
    step is ``1 / lambda_max(H)``. Stops once the projected gradient has
    norm ``<= tol * (1 + ||C||)`` (``C = M B + mu B``) or after
    ``max_iter`` steps; never returns a point worse than ``A0``.
    """
    H = B.T @ B + (mu + lam) * np.eye(B.shape[1])
    C = M @ B + mu * B
    step = 1.0 / np.linalg.eigvalsh(H)[-1]
    thresh = tol * (1.0 + frobenius_norm(C))

    def q(A):
        return 0.5 * float(np.sum((A @ H) * A)) - float(np.sum(A * C))

    A = np.maximum(np.asarray(A0, dtype=float), 0.0)
    q0 = q(A)
    Y = A.copy()
    theta = 1.0
    q_cur = q0
    for _ in range(max_iter):
        grad = Y @ H - C
        A_next = np.maximum(Y - step * grad, 0.0)
        q_next = q(A_next)
        if q_next > q_cur:
            # restart momentum from the last accepted point
            Y = A.copy()
            theta = 1.0
            continue
        theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        Y = A_next + ((theta - 1.0) / theta_next) * (A_next - A)
        A, q_cur, theta = A_next, q_next, theta_next
        g = A @ H - C
        pg = np.where(A > 0, g, np.minimum(g, 0.0))
        if frobenius_norm(pg) <= thresh:
            break
    if q_cur > q0:
        return np.maximum(np.asarray(A0, dtype=float), 0.0)
    return A


def initial_pair(M, rank, seed=0):
    """Nonnegative starts for the split problem.

    ``U`` is the absolute value of the AAPB start for the same seed, so
    both families begin from the same draw; ``V`` continues the stream.
    """
    rng = BoxMullerRng(seed)
    U = np.abs(initial_factor(M, rank, rng=rng))
    V = np.abs(initial_factor(M, rank, rng=rng))
    return U, V


def _run(M, params, block_update):
    params.validate()
    M = as_data_matrix(M)
    norm_m = frobenius_norm(M)
    if norm_m == 0:
        raise ConfigError("M is all zeros; the relative error is undefined")
    m = M.shape[0]
    if params.rank > m:
        raise ConfigError(f"rank {params.rank} exceeds dimension {m}")
    U, V = initial_pair(M, params.rank, params.seed)
    Z = 0.5 * (U + V)
    trace = SolveTrace()
    initial_gap = frobenius_norm(U - V)
    start = time.perf_counter()
    reason = "iterations"
    for k in range(params.max_iter):
        U = block_update(M, U, V)
        V = block_update(M, V, U)
        Z_new = 0.5 * (U + V)
        err = frobenius_norm(M - Z_new @ Z_new.T) / norm_m
        step = 0.5 * float(np.sum((Z_new - Z) ** 2))
        Z = Z_new
        trace.append(k + 1, time.perf_counter() - start, err,
                     split_objective(M, U, V, params.mu, params.lam), step,
                     frobenius_norm(Z))
        if err <= params.tol:
            reason = "tolerance"
            break
        if trace.times[-1] >= params.max_time:
            reason = "time"
            break
    trace.reason = reason
    info = {"U": U, "V": V, "initial_gap": initial_gap, "final_gap": frobenius_norm(U - V)}
    return SolveResult(U=Z, W=None, trace=trace, rel_err=trace.rel_errs[-1], info=info)


def symhals_run(M, params):
    """SymHALS: cyclic exact column updates on the split problem.

    Trace ``objective`` is the split objective; ``d_psi_step`` is the
    Euclidean Bregman step ``0.5 ||Z^k - Z^{k-1}||^2`` of ``Z = (U+V)/2``.
    """
    def block(M, A, B):
        return hals_sweep(M, A.copy(), B, params.mu, params.lam)

    return _run(M, params, block)


def symanls_run(M, params):
    """SymANLS: each block solved as a whole by :func:`nnls_block`."""
    def block(M, A, B):
        return nnls_block(M, B, params.mu, params.lam, A,
                          max_iter=params.inner_iter, tol=params.inner_tol)

    return _run(M, params, block)
