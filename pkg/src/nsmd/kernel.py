"""Quartic kernel, Bregman distance and the smooth coupling term.

The smooth part of the model is ``F(W, U) = 0.5 * ||W - U U^T||_F^2``.
Relative to the kernel

    psi(U) = 1.5 * ||U||_F^4 + ||W||_F * ||U||_F^2

``F(W, .)`` is L-smooth adaptable for every ``L >= 1``, which is what
lets the U-step use a fixed step size without a global Lipschitz constant.
"""
from dataclasses import dataclass, field

import numpy as np

from .matrix import frobenius_norm

__all__ = [
    "KernelContext",
    "LsmadReport",
    "bregman_dist",
    "coupling",
    "grad_F_U",
    "grad_psi",
    "hess_F_U",
    "check_lsmad",
    "psi",
]


@dataclass(frozen=True)
class KernelContext:
    """Kernel coefficient ``w_norm = ||W||_F`` for one outer iteration."""

    w_norm: float

    def __post_init__(self):
        if not self.w_norm >= 0:
            raise ValueError(f"w_norm must be nonnegative, got {self.w_norm}")

    @classmethod
    def from_W(cls, W):
        return cls(frobenius_norm(W))


def _sqnorm(U):
    return float(np.sum(U * U))


def psi(U, ctx):
    """Kernel value ``1.5 ||U||^4 + w_norm ||U||^2``."""
    s = _sqnorm(np.asarray(U, dtype=float))
    return 1.5 * s * s + ctx.w_norm * s


def grad_psi(U, ctx):
    """Kernel gradient ``(6 ||U||^2 + 2 w_norm) U``."""
    U = np.asarray(U, dtype=float)
    return (6.0 * _sqnorm(U) + 2.0 * ctx.w_norm) * U


def bregman_dist(X, Y, ctx):
    """Bregman distance ``psi(X) - psi(Y) - <grad psi(Y), X - Y>``.

    Evaluated in a cancellation-free closed form: with ``D = X - Y``,
    ``s = ||Y||^2`` and ``d = <Y, D>``,

        D_psi = w_norm ||D||^2 + 1.5 ((2d + ||D||^2)^2 + 2 s ||D||^2)

    which is the definition expanded. Every term is nonnegative, so the
    result stays >= 0 even for large, nearly equal ``X`` and ``Y``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Y.shape}")
    D = X - Y
    dd = _sqnorm(D)
    s = _sqnorm(Y)
    d = float(np.sum(Y * D))
    return ctx.w_norm * dd + 1.5 * ((2.0 * d + dd) ** 2 + 2.0 * s * dd)


def coupling(W, U):
    """Smooth coupling term ``F(W, U) = 0.5 ||W - U U^T||_F^2``."""
    U = np.asarray(U, dtype=float)
    R = np.asarray(W, dtype=float) - U @ U.T
    return 0.5 * _sqnorm(R)


def _check_dims(W, U):
    if W.ndim != 2 or U.ndim != 2 or W.shape != (U.shape[0], U.shape[0]):
        raise ValueError(f"dimension mismatch: W {W.shape}, U {U.shape}")


def grad_F_U(W, U):
    """Partial gradient ``2 (U U^T - W) U``."""
    W = np.asarray(W, dtype=float)
    U = np.asarray(U, dtype=float)
    _check_dims(W, U)
    # grouped as U (U^T U) - W U: O(m r^2 + m^2 r), never forms U U^T
    return 2.0 * (U @ (U.T @ U) - W @ U)


def hess_F_U(W, U, Z):
    """Hessian action ``2 (Z U^T U + U Z^T U + U U^T Z - W Z)``."""
    W = np.asarray(W, dtype=float)
    U = np.asarray(U, dtype=float)
    Z = np.asarray(Z, dtype=float)
    _check_dims(W, U)
    return 2.0 * (Z @ (U.T @ U) + U @ (Z.T @ U) + U @ (U.T @ Z) - W @ Z)


@dataclass
class LsmadReport:
    """Outcome of a sampled L-smad check.

    ``max_violation`` is the largest amount by which the left side
    exceeded ``L * D_psi`` (negative when every pair had room to spare).
    ``violations`` lists ``(X, Y, excess)`` for pairs beyond the slack.
    """

    L: float
    n_samples: int
    max_violation: float
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations


def check_lsmad(W, L=1.0, n_samples=1000, radius=2.0, rng_seed=0, rank=3,
                pairs=None):
    """Sample pairs and test ``|F(X) - F(Y) - <grad F(Y), X-Y>| <= L D_psi(X,Y)``.

    Pairs have entries uniform in ``[-radius, radius]`` and shape
    ``(m, rank)``; pass ``pairs`` to test specific ``(X, Y)`` tuples instead.
    A pair counts as a violation only beyond ``1e-9 * (1 + |F(X)|)``.
    """
    W = np.asarray(W, dtype=float)
    ctx = KernelContext.from_W(W)
    if pairs is None:
        rng = np.random.default_rng(rng_seed)
        m = W.shape[0]
        pairs = (
            (rng.uniform(-radius, radius, (m, rank)),
             rng.uniform(-radius, radius, (m, rank)))
            for _ in range(n_samples))
    report = LsmadReport(L=L, n_samples=0, max_violation=-np.inf)
    for X, Y in pairs:
        fx = coupling(W, X)
        gap = abs(fx - coupling(W, Y) - float(np.sum(grad_F_U(W, Y) * (X - Y))))
        excess = gap - L * bregman_dist(X, Y, ctx)
        report.n_samples += 1
        report.max_violation = max(report.max_violation, excess)
        if excess > 1e-9 * (1.0 + abs(fx)):
            report.violations.append((X, Y, excess))
    return report
