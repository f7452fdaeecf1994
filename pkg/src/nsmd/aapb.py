"""Accelerated alternating partial Bregman solver for ReLU-NSMD.

Solves

    min_{U, W}  0.5 ||W - U U^T||_F^2 + 0.5 lam ||U||_F^2
    s.t.        max(0, W) = M

by alternating an exact W-step with an extrapolated Bregman proximal
gradient U-step under the quartic kernel of :mod:`nsmd.kernel`. The U-step
has a closed form up to one scalar, the root of a cubic.
"""
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .datagen import BoxMullerRng
from .kernel import KernelContext, bregman_dist, grad_F_U, grad_psi
from .matrix import as_data_matrix, build_support, frobenius_norm

__all__ = [
    "ConfigError",
    "CubicConvergenceError",
    "SolveResult",
    "SolveTrace",
    "SolverParams",
    "beta_schedule",
    "check_beta_condition",
    "extrapolate",
    "initial_factor",
    "objective",
    "run",
    "solve_cubic",
    "update_U",
    "update_W",
]


class ConfigError(ValueError):
    """Invalid solver or experiment configuration."""


class CubicConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SolverParams:
    """Hyperparameters of the AAPB solver.

    ``beta`` is the amplitude of the extrapolation schedule
    ``beta_k = beta (k-1)/(k+2)``; ``beta=0`` gives the plain (APB) method.
    With ``safeguard`` on, each ``beta_k`` is halved until the
    inertial condition of :func:`check_beta_condition` holds.
    """

    rank: int
    lam: float = 0.0
    eta: float = 1.0
    L: float = 1.0
    beta: float = 1.0
    safeguard: bool = False
    alpha: float = 0.99
    eps_sg: float = 0.01
    tol: float = 1e-4
    max_iter: int = 1000
    max_time: float = 30.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.rank < 1:
            raise ConfigError(f"rank must be positive, got {self.rank}")
        if self.lam < 0:
            raise ConfigError(f"lam must be nonnegative, got {self.lam}")
        if self.L < 1:
            raise ConfigError(f"L must be >= 1, got {self.L}")
        if not (self.eta > 0 and self.eta * self.L <= 1 + 1e-12):
            raise ConfigError(f"need 0 < eta*L <= 1, got eta={self.eta}, L={self.L}")
        if not 0 <= self.beta <= 1:
            raise ConfigError(f"beta must lie in [0, 1], got {self.beta}")
        if not 0 < self.eps_sg < self.alpha < 1:
            raise ConfigError(
                f"need 0 < eps_sg < alpha < 1, got alpha={self.alpha}, eps_sg={self.eps_sg}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1 or not self.max_time > 0:
            raise ConfigError("max_iter and max_time must be positive")


@dataclass
class SolveTrace:
    """Per-iteration history of a solve.

    Row ``i`` describes iterate ``U^i`` (``iters[i] == i + 1``); ``d_psi``
    holds the step ``D_psi(U^{i-1}, U^i)`` measured with that
    iteration's kernel.
    """

    iters: list = field(default_factory=list)
    times: list = field(default_factory=list)
    rel_errs: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    d_psi: list = field(default_factory=list)
    u_norms: list = field(default_factory=list)
    reason: str = ""

    COLUMNS = ("iter", "time_s", "rel_err", "objective", "d_psi_step")

    def append(self, k, elapsed, rel_err, obj, step, u_norm):
        self.iters.append(k)
        self.times.append(elapsed)
        self.rel_errs.append(rel_err)
        self.objectives.append(obj)
        self.d_psi.append(step)
        self.u_norms.append(u_norm)

    def __len__(self):
        return len(self.iters)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.COLUMNS) + "\n")
            for row in zip(self.iters, self.times, self.rel_errs, self.objectives, self.d_psi):
                fh.write("%d,%.17g,%.17g,%.17g,%.17g\n" % row)


@dataclass
class SolveResult:
    U: np.ndarray
    W: np.ndarray
    trace: SolveTrace
    rel_err: float
    info: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.trace)


def update_W(U, M, S):
    """Exact W-step: keep ``M`` on its positive entries, ``min(0, U U^T)`` elsewhere."""
    return _update_W(U @ U.T, M, S)


def _update_W(X, M, S):
    W = np.minimum(X, 0.0)
    W[S.positive] = M[S.positive]
    return W


def extrapolate(U_k, U_prev, beta_k):
    """Inertial point ``U_k + beta_k (U_k - U_prev)``."""
    U_k = np.asarray(U_k, dtype=float)
    U_prev = np.asarray(U_prev, dtype=float)
    if U_k.shape != U_prev.shape:
        raise ValueError(f"shape mismatch: {U_k.shape} vs {U_prev.shape}")
    if beta_k == 0:
        return U_k.copy()
    return U_k + beta_k * (U_k - U_prev)


def beta_schedule(k, beta):
    return max(0.0, beta * (k - 1) / (k + 2))


def solve_cubic(a, c):
    """Root ``t >= a`` of ``t^3 - a t^2 - c = 0`` for ``a, c >= 0``.

    On ``t >= a`` the cubic is increasing and convex beyond its root, so
    Newton's method started at ``a + c^(1/3)`` (where the cubic is already
    nonnegative) decreases monotonically onto the root. Bisection on
    ``[a, a + c^(1/3) + 1]`` backs it up should Newton stall.
    """
    a = float(a)
    c = float(c)
    if a < 0 or c < 0 or not (math.isfinite(a) and math.isfinite(c)):
        raise ValueError(f"need finite a, c >= 0, got a={a}, c={c}")
    if c == 0:
        return a

    def f(t):
        return t * t * (t - a) - c

    def ok(t):
        return t >= a and abs(f(t)) <= 1e-10 * max(1.0, t ** 3)

    t = a + c ** (1.0 / 3.0)
    for _ in range(100):
        ft = f(t)
        if ft <= 0:
            break
        t_next = t - ft / (t * (3.0 * t - 2.0 * a))
        if not t_next < t:
            break
        t = t_next
    if ok(t):
        return t

    lo, hi = a, a + c ** (1.0 / 3.0) + 1.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    t = hi
    if ok(t):
        return t
    raise CubicConvergenceError(f"no root found for a={a!r}, c={c!r}")


def update_U(U_bar, W, params, ctx=None, full_output=False):
    """Closed-form Bregman proximal gradient step from ``U_bar``.

    The step minimizes ``lam/2 ||U||^2 + <grad F(U_bar), U - U_bar>
    + D_psi(U, U_bar) / eta``. Its optimality condition reads
    ``(lam eta + 6 ||U||^2 + 2 ||W||) U = G`` with
    ``G = grad psi(U_bar) - eta grad F(U_bar)``, so ``U = G / t`` where
    ``t`` is the root of ``t^3 - (lam eta + 2 ||W||) t^2 - 6 ||G||^2``.

    With ``full_output`` returns ``(U, G, t)``.
    """
    W = np.asarray(W, dtype=float)
    U_bar = np.asarray(U_bar, dtype=float)
    if ctx is None:
        ctx = KernelContext.from_W(W)
    G = grad_psi(U_bar, ctx) - params.eta * grad_F_U(W, U_bar)
    a = params.lam * params.eta + 2.0 * ctx.w_norm
    t = solve_cubic(a, 6.0 * float(np.sum(G * G)))
    U = G / t if t > 0 else np.zeros_like(G)
    if full_output:
        return U, G, t
    return U


def objective(W, U, lam):
    """Penalized objective ``0.5 ||W - U U^T||^2 + lam/2 ||U||^2``."""
    U = np.asarray(U, dtype=float)
    return _objective(np.asarray(W, dtype=float), U @ U.T, U, lam)


def _objective(W, X, U, lam):
    R = W - X
    return 0.5 * float(np.sum(R * R)) + 0.5 * lam * float(np.sum(U * U))


def check_beta_condition(U_k, U_bar, U_prev, ctx, params):
    """Inertial condition ``D(U_k, U_bar) <= (alpha-eps)/(1+L eta) D(U_prev, U_k)``."""
    lhs = bregman_dist(U_k, U_bar, ctx)
    rhs = bregman_dist(U_prev, U_k, ctx)
    return lhs <= (params.alpha - params.eps_sg) / (1.0 + params.L * params.eta) * rhs


def initial_factor(M, rank, seed=0, rng=None):
    """Seeded Gaussian start scaled by ``sqrt(mean(M) / rank)``.

    The scale makes the expected diagonal of ``U U^T`` equal the mean
    entry of ``M``. Pass a :class:`~nsmd.datagen.BoxMullerRng` as ``rng``
    to continue an existing stream instead of seeding a new one.
    """
    M = np.asarray(M, dtype=float)
    if rng is None:
        rng = BoxMullerRng(seed)
    scale = math.sqrt(float(M.mean()) / rank)
    return rng.normal((M.shape[0], rank)) * scale


def run(M, params, U0=None, callback=None):
    """Run NSMD-AAPB on a nonnegative symmetric ``M``.

    Parameters
    ----------
    M : (m, m) array_like
    params : SolverParams
    U0 : (m, r) array_like, optional
        Start point, used for both ``U^0`` and ``U^{-1}``. Defaults to
        :func:`initial_factor` with ``params.seed``.
    callback : callable, optional
        Called as ``callback(k, W, U)`` after every iteration with the
        W-iterate of that iteration and the new factor.

    Returns
    -------
    SolveResult
        ``W`` is the last W-iterate, which satisfies ``max(0, W) == M``.

    The run stops at the first of: relative error <= ``tol``,
    ``max_iter`` iterations, or ``max_time`` seconds of wall clock
    (checked once per iteration).
    """
    params.validate()
    M = as_data_matrix(M)
    if frobenius_norm(M) == 0:
        raise ConfigError("M is all zeros; the relative error is undefined")
    S = build_support(M)
    m = M.shape[0]
    r = params.rank
    if r > m:
        raise ConfigError(f"rank {r} exceeds dimension {m}")
    if U0 is None:
        U = initial_factor(M, r, params.seed)
    else:
        U = np.array(U0, dtype=float)
        if U.shape != (m, r):
            raise ConfigError(f"U0 has shape {U.shape}, expected {(m, r)}")
    U_prev = U.copy()
    norm_m = frobenius_norm(M)
    X = U @ U.T
    trace = SolveTrace()
    start = time.perf_counter()
    reason = "iterations"

    for k in range(params.max_iter):
        W = _update_W(X, M, S)
        ctx = KernelContext.from_W(W)
        beta_k = beta_schedule(k, params.beta)
        U_bar = extrapolate(U, U_prev, beta_k)
        if params.safeguard and beta_k > 0:
            halvings = 0
            while not check_beta_condition(U, U_bar, U_prev, ctx, params):
                if halvings == 50:
                    U_bar = U.copy()
                    break
                beta_k *= 0.5
                halvings += 1
                U_bar = extrapolate(U, U_prev, beta_k)
        U_new = update_U(U_bar, W, params, ctx)
        step = bregman_dist(U, U_new, ctx)
        U_prev, U = U, U_new

        X = U @ U.T
        err = frobenius_norm(M - np.maximum(X, 0.0)) / norm_m
        trace.append(k + 1, time.perf_counter() - start, err,
                     _objective(W, X, U, params.lam), step, frobenius_norm(U))
        if callback is not None:
            callback(k + 1, W, U)
        if err <= params.tol:
            reason = "tolerance"
            break
        if trace.times[-1] >= params.max_time:
            reason = "time"
            break

    trace.reason = reason
    return SolveResult(U=U, W=W, trace=trace, rel_err=trace.rel_errs[-1])
