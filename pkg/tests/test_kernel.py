import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_sym
from nsmd.datagen import SynthSpec, gen_synthetic
from nsmd.kernel import (KernelContext, bregman_dist, check_lsmad, coupling, grad_F_U,
                         grad_psi, hess_F_U, psi)
from nsmd.verify import central_difference


def naive_psi(U, w):
    s = 0.0
    for row in np.asarray(U).tolist():
        for x in row:
            s += x * x
    return 1.5 * s * s + w * s


def naive_bregman(X, Y, w):
    s = sum(y * y for y in np.ravel(Y))
    grad = [(6 * s + 2 * w) * y for y in np.ravel(Y)]
    inner = sum(g * (x - y) for g, x, y in zip(grad, np.ravel(X), np.ravel(Y)))
    return naive_psi(X, w) - naive_psi(Y, w) - inner


def test_psi_values(rng):
    assert psi(np.zeros((3, 2)), KernelContext(5.0)) == 0.0
    U = np.array([[0.6], [0.8]])
    assert psi(U, KernelContext(2.0)) == pytest.approx(3.5)
    U = rng.uniform(-2, 2, (4, 2))
    assert psi(U, KernelContext(1.3)) == pytest.approx(naive_psi(U, 1.3), rel=1e-12)


def test_grad_psi_values():
    assert np.all(grad_psi(np.zeros((2, 2)), KernelContext(1.0)) == 0)
    assert grad_psi(np.array([[1.0]]), KernelContext(0.0)) == pytest.approx(np.array([[6.0]]))


def test_grad_psi_finite_difference(rng):
    U = rng.uniform(-2, 2, (5, 3))
    ctx = KernelContext(3.0)
    fd = central_difference(lambda V: psi(V, ctx), U, h=1e-5)
    g = grad_psi(U, ctx)
    assert np.linalg.norm(g - fd) <= 1e-6 * np.linalg.norm(fd)


def test_bregman_examples():
    ctx = KernelContext(1.0)
    X = np.array([[0.3, -1.0], [2.0, 0.5]])
    assert bregman_dist(X, X, ctx) == 0.0
    assert bregman_dist(np.array([[1.0]]), np.array([[0.0]]), ctx) == pytest.approx(2.5)


def test_bregman_matches_naive_and_lower_bound(rng):
    for _ in range(20):
        X, Y = rng.uniform(-2, 2, (6, 2)), rng.uniform(-2, 2, (6, 2))
        w = float(rng.uniform(0, 4))
        d = bregman_dist(X, Y, KernelContext(w))
        assert d == pytest.approx(naive_bregman(X, Y, w), rel=1e-12)
        assert d >= w * np.sum((X - Y) ** 2)


def test_bregman_shape_mismatch():
    with pytest.raises(ValueError):
        bregman_dist(np.zeros((2, 2)), np.zeros((2, 1)), KernelContext(0.0))


finite = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (4, 2), elements=finite), arrays(np.float64, (4, 2), elements=finite),
       st.floats(0, 10))
def test_bregman_nonnegative_with_quadratic_floor(X, Y, w):
    d = bregman_dist(X, Y, KernelContext(w))
    assert d >= 0
    assert d >= w * np.sum((X - Y) ** 2) * (1 - 1e-12)


def test_grad_F_values():
    U = np.array([[1.0, 2.0], [0.5, -1.0]])
    assert np.allclose(grad_F_U(U @ U.T, U), 0.0)
    assert grad_F_U(np.array([[1.0]]), np.array([[2.0]])) == pytest.approx(np.array([[12.0]]))


def test_grad_F_finite_difference(rng):
    W = random_sym(rng, 5)
    U = rng.uniform(-2, 2, (5, 2))
    fd = central_difference(lambda V: coupling(W, V), U, h=1e-5)
    assert np.linalg.norm(grad_F_U(W, U) - fd) <= 1e-6 * np.linalg.norm(fd)


def test_grad_F_dimension_mismatch():
    with pytest.raises(ValueError):
        grad_F_U(np.zeros((3, 3)), np.zeros((4, 2)))


def test_hessian_action_second_difference(rng):
    W = random_sym(rng, 5)
    U, Z = rng.uniform(-2, 2, (5, 3)), rng.uniform(-2, 2, (5, 3))
    h = 1e-4
    fd = (coupling(W, U + h * Z) - 2 * coupling(W, U) + coupling(W, U - h * Z)) / h ** 2
    assert np.sum(Z * hess_F_U(W, U, Z)) == pytest.approx(fd, rel=1e-4)


def test_lsmad_identical_pairs():
    W = np.eye(3)
    X = np.ones((3, 2))
    rep = check_lsmad(W, pairs=[(X, X.copy())])
    assert rep.passed and rep.max_violation == 0.0


def test_lsmad_zero_w():
    rep = check_lsmad(np.zeros((10, 10)), L=1.0, n_samples=1000, radius=2.0, rng_seed=1)
    assert rep.passed and rep.n_samples == 1000


def test_lsmad_synthetic_w():
    from nsmd.aapb import update_W
    from nsmd.matrix import build_support
    M = gen_synthetic(SynthSpec(m=50, rbar=5, p=0.0, seed=2))
    U = np.random.default_rng(2).standard_normal((50, 3))
    W = update_W(U, M, build_support(M))
    rep = check_lsmad(W, L=1.0, n_samples=1000, radius=2.0, rng_seed=4)
    assert rep.passed, rep.max_violation


def test_lsmad_fails_below_one():
    # scalar case: near u=0 the curvature ratio of F to psi tends to 1
    W = np.array([[2.0]])
    rep = check_lsmad(W, L=0.5, n_samples=200, radius=0.3, rng_seed=0, rank=1)
    assert not rep.passed
    X, Y, excess = rep.violations[0]
    assert excess > 0


def test_kernel_context_from_w():
    assert KernelContext.from_W(np.array([[3.0, 0.0], [0.0, 4.0]])).w_norm == 5.0
    with pytest.raises(ValueError):
        KernelContext(-1.0)
