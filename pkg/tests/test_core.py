import zlib

import numpy as np
import pytest

from rescomp.core import (
    ReservoirState,
    SparseMatrix,
    TimeSeries,
    as_state_array,
    load_csv,
    load_model,
    save_csv,
    save_model,
    seeded_rng,
    spectral_radius,
)
from rescomp.errors import CorruptChecksum, DimensionMismatch, NonSquare, VersionMismatch
from rescomp.forecast import EsnForecaster


def test_timeseries_basics():
    ts = TimeSeries(np.arange(12.0).reshape(6, 2), dt=0.5, t0=1.0)
    assert len(ts) == 6
    assert ts.dim == 2
    np.testing.assert_allclose(ts.times, 1.0 + 0.5 * np.arange(6))


def test_timeseries_rejects_bad_shape():
    with pytest.raises(DimensionMismatch):
        TimeSeries(np.zeros((2, 3, 4)))
    with pytest.raises(ValueError):
        TimeSeries(np.array([[1.0, np.nan]]))
    # 1-D input is promoted to a single column
    assert TimeSeries(np.arange(6.0)).dim == 1


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    ts = TimeSeries(rng.standard_normal((40, 3)), dt=0.25, t0=0.25)
    path = tmp_path / "ts.csv"
    save_csv(ts, path)
    back = load_csv(path)
    np.testing.assert_allclose(back.values, ts.values, rtol=0, atol=1e-12)
    assert back.dt == pytest.approx(ts.dt)


def test_seeded_rng_deterministic_and_domain_separated():
    a = seeded_rng(7, 1).standard_normal(5)
    b = seeded_rng(7, 1).standard_normal(5)
    c = seeded_rng(7, 2).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_sparse_matrix_matches_dense():
    rng = np.random.default_rng(1)
    dense = rng.standard_normal((30, 30)) * (rng.random((30, 30)) < 0.15)
    rows, cols = np.nonzero(dense)
    m = SparseMatrix.from_triplets((30, 30), rows, cols, dense[rows, cols])
    x = rng.standard_normal(30)
    np.testing.assert_allclose(m.matvec(x), dense @ x, atol=1e-12)
    np.testing.assert_allclose(m.rmatvec(x), dense.T @ x, atol=1e-12)
    np.testing.assert_allclose(m.to_dense(), dense, atol=0)
    assert m.nnz == rows.size


def test_spectral_radius_oracle():
    rng = np.random.default_rng(2)
    for _ in range(5):
        dense = rng.standard_normal((25, 25)) * (rng.random((25, 25)) < 0.3)
        rows, cols = np.nonzero(dense)
        m = SparseMatrix.from_triplets((25, 25), rows, cols, dense[rows, cols])
        truth = np.max(np.abs(np.linalg.eigvals(dense)))
        assert spectral_radius(m) == pytest.approx(truth, rel=1e-6)


def test_spectral_radius_requires_square():
    m = SparseMatrix.from_triplets((2, 3), [0], [1], [1.0])
    with pytest.raises(NonSquare):
        spectral_radius(m)


def test_reservoir_state_shapes():
    s = ReservoirState.zeros(2, 5)
    assert s.states.shape == (2, 5)
    arr = as_state_array(s, 2, 5)
    assert arr.shape == (2, 5)
    with pytest.raises(DimensionMismatch):
        as_state_array(np.zeros(4), 2, 5)


def test_model_checkpoint_bit_exact_round_trip(tmp_path):
    model = EsnForecaster.build(3, 60, chunks=1, seed=5)
    path = tmp_path / "model.bin"
    save_model(model, path)
    back = load_model(path)
    r0 = np.zeros((1, 60))
    rng = np.random.default_rng(3)
    U = rng.standard_normal((20, 3))
    np.testing.assert_array_equal(model.force(U, r0), back.force(U, r0))
    hyper, arrays = model._to_state()
    hyper2, arrays2 = back._to_state()
    assert hyper == hyper2
    for key in arrays:
        np.testing.assert_array_equal(arrays[key], arrays2[key])


def test_checkpoint_corruption_detected(tmp_path):
    model = EsnForecaster.build(2, 20, seed=0)
    path = tmp_path / "model.bin"
    save_model(model, path)
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptChecksum):
        load_model(path)


def test_checkpoint_version_mismatch(tmp_path):
    model = EsnForecaster.build(2, 20, seed=0)
    path = tmp_path / "model.bin"
    save_model(model, path)
    raw = bytearray(path.read_bytes())
    raw[4] = 99  # version field follows the 4-byte magic
    raw[-4:] = zlib.crc32(bytes(raw[:-4])).to_bytes(4, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(VersionMismatch):
        load_model(path)
