import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_sym
from nsmd import aapb
from nsmd.aapb import (ConfigError, SolverParams, beta_schedule, check_beta_condition,
                       extrapolate, objective, solve_cubic, update_U, update_W)
from nsmd.kernel import KernelContext, grad_psi
from nsmd.matrix import build_support, frobenius_norm, relative_error
from nsmd.verify import subproblem_oracle


# -- W-step ---------------------------------------------------------------

def test_update_w_rule():
    M = np.array([[1.0, 0.0], [0.0, 2.0]])
    # U U^T = [[0.5, -0.3], [-0.3, 0.7]] via Cholesky
    X = np.array([[0.5, -0.3], [-0.3, 0.7]])
    U = np.linalg.cholesky(X)
    W = update_W(U, M, build_support(M))
    assert W == pytest.approx(np.array([[1.0, -0.3], [-0.3, 2.0]]), abs=1e-15)


def test_update_w_dense_positive_m(rng):
    M = rng.uniform(0.1, 1.0, (4, 4))
    M = M + M.T
    W = update_W(rng.standard_normal((4, 2)), M, build_support(M))
    assert np.array_equal(W, M)


def test_update_w_zero_m(rng):
    M = np.zeros((4, 4))
    U = rng.standard_normal((4, 2))
    W = update_W(U, M, build_support(M))
    assert np.array_equal(W, np.minimum(0.0, U @ U.T))


def test_update_w_feasible(small_synth, rng):
    S = build_support(small_synth)
    W = update_W(rng.standard_normal((40, 5)), small_synth, S)
    assert np.array_equal(np.maximum(0.0, W), small_synth)


# -- extrapolation and schedule --------------------------------------------

def test_extrapolate():
    U = np.array([[2.0]])
    assert np.array_equal(extrapolate(U, np.array([[1.0]]), 0.0), U)
    assert np.array_equal(extrapolate(U, U, 0.7), U)
    assert extrapolate(U, np.array([[1.0]]), 0.5) == pytest.approx(np.array([[2.5]]))
    with pytest.raises(ValueError):
        extrapolate(U, np.zeros((2, 1)), 0.5)


def test_beta_schedule():
    assert beta_schedule(1, 0.8) == 0.0
    assert beta_schedule(0, 1.0) == 0.0
    assert beta_schedule(2, 1.0) == 0.25
    vals = [beta_schedule(k, 0.95) for k in (10, 100, 10_000, 1_000_000)]
    assert vals == sorted(vals) and all(v < 0.95 for v in vals)
    assert vals[-1] == pytest.approx(0.95, abs=1e-5)


# -- cubic -----------------------------------------------------------------

def test_cubic_examples():
    assert solve_cubic(1.0, 4.0) == pytest.approx(2.0, rel=1e-14)
    assert solve_cubic(5.0, 0.0) == 5.0
    assert solve_cubic(0.0, 0.0) == 0.0
    # frozen from bisection on [0, 1 + a + c]
    assert solve_cubic(0.0, 48.0) == pytest.approx(3.63424118566428, rel=1e-13)


def test_cubic_rejects_negative():
    with pytest.raises(ValueError):
        solve_cubic(-1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1e6), st.floats(0, 1e12))
def test_cubic_root_properties(a, c):
    t = solve_cubic(a, c)
    assert t >= a
    assert abs(t ** 3 - a * t ** 2 - c) <= 1e-10 * max(1.0, t ** 3)


def test_cubic_tiny_c_large_a():
    t = solve_cubic(1e6, 1e-20)
    assert t >= 1e6 and abs(t * t * (t - 1e6) - 1e-20) <= 1e-10 * t ** 3


# -- U-step ----------------------------------------------------------------

def test_update_u_origin_is_stationary():
    W = np.array([[1.0, -0.2], [-0.2, 0.5]])
    U, G, t = update_U(np.zeros((2, 1)), W, SolverParams(rank=1), full_output=True)
    assert np.all(U == 0) and np.all(G == 0)
    assert t == pytest.approx(2 * frobenius_norm(W))


def test_update_u_scalar():
    params = SolverParams(rank=1, lam=0.0, eta=1.0)
    U, G, t = update_U(np.array([[1.0]]), np.array([[0.0]]), params, full_output=True)
    assert G == pytest.approx(np.array([[4.0]]))
    assert t == pytest.approx(96 ** (1 / 3), rel=1e-14)
    # frozen from a dense grid on [-3, 3] plus golden-section refinement
    assert U[0, 0] == pytest.approx(0.8735804732598429, abs=1e-7)


def test_update_u_matches_descent_oracle(rng):
    W = random_sym(rng, 6)
    U_bar = rng.uniform(-2, 2, (6, 2))
    params = SolverParams(rank=2, lam=0.3, eta=0.8)
    ctx = KernelContext.from_W(W)
    U, G, _ = update_U(U_bar, W, params, ctx, full_output=True)
    ref = subproblem_oracle(G, ctx.w_norm, params.lam * params.eta)
    assert np.linalg.norm(U - ref) <= 1e-6


def test_update_u_optimality_and_cubic_consistency(rng):
    for _ in range(30):
        W = random_sym(rng, 5) * rng.uniform(0, 3)
        U_bar = rng.uniform(-2, 2, (5, 2))
        params = SolverParams(rank=2, lam=float(rng.uniform(0, 2)), eta=float(rng.uniform(0.1, 1)))
        ctx = KernelContext.from_W(W)
        U, G, t = update_U(U_bar, W, params, ctx, full_output=True)
        le = params.lam * params.eta
        assert frobenius_norm(le * U + grad_psi(U, ctx) - G) <= 1e-8 * (1 + frobenius_norm(G))
        assert t == pytest.approx(le + 6 * np.sum(U * U) + 2 * ctx.w_norm, rel=1e-8)


# -- objective and safeguard -----------------------------------------------

def test_objective_examples():
    U = np.array([[1.0, 0.5], [0.0, 2.0]])
    assert objective(U @ U.T, U, 0.0) == pytest.approx(0.0, abs=1e-14)
    assert objective(np.zeros((2, 2)), np.zeros((2, 1)), 7.0) == 0.0
    assert objective(np.eye(2), np.zeros((2, 1)), 2.0) == pytest.approx(1.0)


def test_beta_condition():
    params = SolverParams(rank=1)
    ctx = KernelContext(1.0)
    U_k, U_prev = np.array([[1.0], [2.0]]), np.array([[0.5], [1.0]])
    assert check_beta_condition(U_k, U_k.copy(), U_prev, ctx, params)
    assert check_beta_condition(U_k, extrapolate(U_k, U_k, 0.9), U_k, ctx, params)
    # full momentum overshoots by as much as the last step: D(U_k, U_bar) ~ D(U_prev, U_k)
    U_bar = extrapolate(U_k, U_prev, 1.0)
    assert not check_beta_condition(U_k, U_bar, U_prev, ctx, params)


# -- params ----------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(eta=2.0), dict(eta=0.6, L=2.0), dict(lam=-1.0), dict(L=0.5), dict(beta=1.5),
    dict(alpha=0.1, eps_sg=0.2), dict(eta=0.0),
])
def test_invalid_params(kwargs):
    with pytest.raises(ConfigError):
        SolverParams(rank=2, **kwargs)


def test_run_rejects_bad_inputs(small_synth):
    with pytest.raises(ConfigError):
        aapb.run(np.zeros((5, 5)), SolverParams(rank=2))
    with pytest.raises(ConfigError):
        aapb.run(small_synth, SolverParams(rank=2), U0=np.zeros((3, 2)))


# -- full runs -------------------------------------------------------------

def exact_instance(seed=0):
    U_star = np.abs(np.random.default_rng(seed).standard_normal((20, 3)))
    return U_star @ U_star.T


def test_run_exact_recovery():
    M = exact_instance()
    res = aapb.run(M, SolverParams(rank=3, beta=1.0, tol=1e-4, max_iter=500))
    assert res.trace.reason == "tolerance"
    assert res.rel_err <= 1e-4
    assert res.rel_err == pytest.approx(relative_error(M, res.U), rel=1e-12)


def test_run_trace_shape(small_synth):
    res = aapb.run(small_synth, SolverParams(rank=4, max_iter=30, tol=1e-300, max_time=math.inf))
    tr = res.trace
    assert len(tr) == 30 and tr.iters == list(range(1, 31))
    assert all(b > a for a, b in zip(tr.times, tr.times[1:]))
    assert tr.reason == "iterations"
    assert np.array_equal(np.maximum(0.0, res.W), small_synth)
    assert tr.u_norms[-1] == pytest.approx(frobenius_norm(res.U))


def test_run_time_budget(small_synth):
    res = aapb.run(small_synth, SolverParams(rank=4, max_iter=10 ** 6, tol=1e-300,
                                             max_time=0.05))
    assert res.trace.reason == "time"
    assert res.trace.times[-1] >= 0.05


def test_run_descent_at_beta_zero(small_synth):
    res = aapb.run(small_synth, SolverParams(rank=5, beta=0.0, lam=0.1, max_iter=150,
                                             tol=1e-300, max_time=math.inf))
    phi = res.trace.objectives
    assert all(b <= a + 1e-10 * (1 + abs(a)) for a, b in zip(phi, phi[1:]))


def test_run_deterministic(small_synth):
    p = SolverParams(rank=4, max_iter=40, tol=1e-300, max_time=math.inf, seed=5)
    a, b = aapb.run(small_synth, p), aapb.run(small_synth, p)
    assert np.array_equal(a.U, b.U)
    assert a.trace.rel_errs == b.trace.rel_errs and a.trace.d_psi == b.trace.d_psi


def test_run_safeguard_keeps_inertial_condition(small_synth):
    p = SolverParams(rank=4, beta=1.0, safeguard=True, max_iter=60, tol=1e-300,
                     max_time=math.inf)
    seen = []
    orig = aapb.check_beta_condition

    def recording(U_k, U_bar, U_prev, ctx, params):
        ok = orig(U_k, U_bar, U_prev, ctx, params)
        seen.append(ok)
        return ok

    aapb.check_beta_condition = recording
    try:
        res = aapb.run(small_synth, p)
    finally:
        aapb.check_beta_condition = orig
    assert seen, "safeguard never consulted"
    assert len(res.trace) == 60


def test_run_callback_sees_every_iteration(small_synth):
    calls = []
    aapb.run(small_synth, SolverParams(rank=3, max_iter=12, tol=1e-300, max_time=math.inf),
             callback=lambda k, W, U: calls.append(k))
    assert calls == list(range(1, 13))


def test_run_rejects_rank_above_dimension():
    with pytest.raises(ConfigError, match="exceeds"):
        aapb.run(np.eye(3), SolverParams(rank=4))
