import numpy as np
import pytest

from rescomp import data
from rescomp.errors import UnknownSystem


def test_harmonic_oscillator_closed_form():
    ts = data.integrate_ode(data.harmonic_system(omega=2.0), 10.0, 0.01)
    t = ts.times
    np.testing.assert_allclose(ts.values[:, 0], np.cos(2.0 * t), atol=1e-8)
    np.testing.assert_allclose(ts.values[:, 1], -2.0 * np.sin(2.0 * t), atol=1e-8)


def test_sample_convention_first_row_is_one_step_in():
    ts = data.lorenz63(20, 0.01)
    assert len(ts) == 2000
    assert ts.t0 == pytest.approx(0.01)
    assert ts.dt == pytest.approx(0.01)


def test_lorenz96_fixed_point_stays_fixed():
    sys_obj = data.lorenz96_system(N=10, F=8.0)
    u = np.full(10, 8.0)
    np.testing.assert_allclose(sys_obj.rhs(0.0, u), np.zeros(10), atol=1e-14)
    ts = data.integrate_ode(sys_obj, 2.0, 0.1, u0=u)
    np.testing.assert_allclose(ts.values[-1], u, atol=1e-8)


def test_double_pendulum_energy_conserved_without_damping():
    ts = data.double_pendulum(40, 0.01)
    energy = data.double_pendulum_energy(ts.values)
    drift = np.max(np.abs(energy - energy[0])) / abs(energy[0])
    assert drift < 1e-5


def test_ode_dt_refinement_consistency():
    coarse = data.lorenz63(2, 0.02)
    fine = data.lorenz63(2, 0.01)
    np.testing.assert_allclose(coarse.values, fine.values[1::2], atol=1e-6)


def test_make_system_and_names():
    names = data.system_names()
    assert "lorenz63" in names and "rossler" in names
    for name in names:
        sys_obj = data.make_system(name)
        out = sys_obj.rhs(0.0, np.asarray(sys_obj.u0, dtype=np.float64))
        assert np.all(np.isfinite(out))
    with pytest.raises(UnknownSystem):
        data.make_system("not_a_system")


def test_hyperchaotic_systems_have_dim_4():
    assert data.make_system("hyper_lorenz63").dim == 4
    assert data.make_system("hyper_xu").dim == 4


def test_ks_zero_ic_stays_zero():
    cfg = data.KsConfig(Nx=64, dt=0.25, tN=5.0, u0=np.zeros(64))
    ts = data.integrate_ks(cfg)
    np.testing.assert_allclose(ts.values, 0.0, atol=1e-12)


def test_ks_mean_mode_pinned():
    ts = data.ks_1d(20, u0=data.ks_random_ic(64, seed=1), Nx=64)
    means = ts.values.mean(axis=1)
    np.testing.assert_allclose(means, 0.0, atol=1e-10)


def test_ks_dt_self_convergence():
    x = data.KsConfig(Nx=64).x
    u0 = np.sin(2 * np.pi * x / 48.0) + 0.5 * np.cos(4 * np.pi * x / 48.0)
    coarse = data.ks_1d(10, u0=u0, dt=0.25, Nx=64)
    fine = data.ks_1d(10, u0=u0, dt=0.125, Nx=64)
    rms = np.sqrt(np.mean((coarse.values[-1] - fine.values[-1]) ** 2))
    assert rms < 1e-3


def test_ks_fourth_order_in_dt():
    x = data.KsConfig(Nx=64).x
    u0 = np.sin(2 * np.pi * x / 48.0) + 0.5 * np.cos(4 * np.pi * x / 48.0)
    errs = []
    fine = data.ks_1d(1.0, u0=u0, dt=0.0125, Nx=64).values[-1]
    for dt in (0.1, 0.05):
        errs.append(
            np.max(np.abs(data.ks_1d(1.0, u0=u0, dt=dt, Nx=64).values[-1] - fine))
        )
    assert np.log2(errs[0] / errs[1]) > 3.5


def test_ks_shapes_per_config():
    ts = data.ks_1d(1000)
    assert ts.values.shape == (4000, 128)


def test_ks_random_ic_deterministic():
    np.testing.assert_array_equal(
        data.ks_random_ic(64, seed=9), data.ks_random_ic(64, seed=9)
    )


def test_lyapunov_reference_lookup():
    assert data.largest_lyapunov_reference("lorenz63") == pytest.approx(0.9)
    assert data.largest_lyapunov_reference("ks_L48") == pytest.approx(0.081)
    with pytest.raises(UnknownSystem):
        data.largest_lyapunov_reference("unknown")
