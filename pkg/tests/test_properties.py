"""Property-based tests for the numerical primitives."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rescomp.classify import softmax
from rescomp.core import SparseMatrix, spectral_radius
from rescomp.forecast import nrmse, valid_time
from rescomp.train import ridge_regression

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@given(arrays(np.float64, st.integers(2, 8), elements=finite))
@settings(max_examples=50, deadline=None)
def test_softmax_is_a_distribution(logits):
    p = softmax(logits)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1.0) < 1e-12
    # order-preserving up to floating-point ties
    assert p[np.argmax(logits)] == np.max(p)


@given(
    st.integers(5, 25),
    st.integers(1, 6),
    st.integers(1, 3),
    st.sampled_from([1e-6, 1e-3, 1.0]),
    st.integers(0, 1000),
)
@settings(max_examples=30, deadline=None)
def test_ridge_normal_equations_residual(n, f, g, beta, seed):
    """The solution satisfies (X^T X + beta I) W^T = X^T Y exactly."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, f))
    Y = rng.standard_normal((n, g))
    W = ridge_regression(X, Y, beta)
    lhs = (X.T @ X + beta * np.eye(f)) @ W.T
    rhs = X.T @ Y
    assert np.max(np.abs(lhs - rhs)) < 1e-8 * max(1.0, np.max(np.abs(rhs)))


@given(st.integers(0, 500), st.floats(0.1, 10.0))
@settings(max_examples=25, deadline=None)
def test_spectral_radius_scales_linearly(seed, factor):
    m = SparseMatrix.random_erdos(20, 3.0, np.random.default_rng(seed))
    if m.nnz == 0:
        return
    base = spectral_radius(m, tol=1e-10, max_iter=5000)
    scaled = spectral_radius(m.scale(factor), tol=1e-10, max_iter=5000)
    assert abs(scaled - factor * base) < 1e-5 * max(1.0, factor * base)


@given(st.integers(0, 100))
@settings(max_examples=20, deadline=None)
def test_valid_time_monotone_in_threshold(seed):
    rng = np.random.default_rng(seed)
    truth = rng.standard_normal((50, 2)) + 2.0
    pred = truth + np.linspace(0, 2, 50)[:, None] * rng.standard_normal((50, 2))
    vts = [valid_time(pred, truth, 0.1, 1.0, threshold=th) for th in (0.2, 0.4, 0.8)]
    assert vts[0] <= vts[1] <= vts[2]


@given(st.integers(0, 100), st.floats(0.1, 5.0))
@settings(max_examples=20, deadline=None)
def test_nrmse_scale_invariant(seed, scale):
    rng = np.random.default_rng(seed)
    truth = rng.standard_normal((20, 3)) + 1.0
    pred = truth + rng.standard_normal((20, 3))
    np.testing.assert_allclose(
        nrmse(scale * pred, scale * truth), nrmse(pred, truth), rtol=1e-10
    )
