import numpy as np
import pytest

from rescomp import kernels
from rescomp.core import SparseMatrix


needs_compiled = pytest.mark.skipif(
    not kernels.have_compiled(), reason="compiled extension not built"
)


@pytest.fixture
def sparse_case():
    rng = np.random.default_rng(0)
    dense = rng.standard_normal((50, 50)) * (rng.random((50, 50)) < 0.1)
    rows, cols = np.nonzero(dense)
    m = SparseMatrix.from_triplets((50, 50), rows, cols, dense[rows, cols])
    return m, rng


@pytest.fixture
def both_backends():
    saved = kernels.backend_name()
    yield
    kernels.set_backend(saved)


@needs_compiled
def test_csr_matvec_backend_equivalence(sparse_case, both_backends):
    m, rng = sparse_case
    x = rng.standard_normal(50)
    kernels.set_backend("compiled")
    a = kernels.csr_matvec(m, x)
    kernels.set_backend("python")
    b = kernels.csr_matvec(m, x)
    np.testing.assert_allclose(a, b, atol=1e-13)


@needs_compiled
def test_leaky_advance_backend_equivalence(sparse_case, both_backends):
    m, rng = sparse_case
    r = rng.standard_normal(50)
    pre = rng.standard_normal(50)
    bias = rng.standard_normal(50)
    kernels.set_backend("compiled")
    a = kernels.leaky_advance(m, bias, 0.6, r, pre)
    kernels.set_backend("python")
    b = kernels.leaky_advance(m, bias, 0.6, r, pre)
    np.testing.assert_allclose(a, b, atol=1e-13)


@needs_compiled
def test_leaky_force_backend_equivalence(sparse_case, both_backends):
    m, rng = sparse_case
    r0 = rng.standard_normal(50)
    pre = rng.standard_normal((30, 50))
    bias = rng.standard_normal(50)
    kernels.set_backend("compiled")
    a = kernels.leaky_force(m, bias, 0.8, r0, pre)
    kernels.set_backend("python")
    b = kernels.leaky_force(m, bias, 0.8, r0, pre)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_leaky_force_chains_advance(sparse_case):
    m, rng = sparse_case
    r0 = rng.standard_normal(50)
    pre = rng.standard_normal((10, 50))
    bias = np.zeros(50)
    out = kernels.leaky_force(m, bias, 0.5, r0, pre)
    r = r0
    for t in range(10):
        r = kernels.leaky_advance(m, bias, 0.5, r, pre[t])
        np.testing.assert_allclose(out[t], r, atol=1e-13)


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.set_backend("gpu")
