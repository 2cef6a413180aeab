"""End-to-end acceptance checks, one test per criterion.

Run with `pytest -v tests/test_acceptance.py` to get one pass/fail line per
criterion. Several tests share expensive fixtures (Lorenz and KS data).
"""

import time

import numpy as np
import pytest

from rescomp import data, train
from rescomp.classify import EsnClassifier, accuracy, sinusoid_dataset
from rescomp.control import (
    EsnController,
    MpcConfig,
    appendix_plant,
    mpc_cost,
    mpc_gradient,
    receding_horizon,
)
from rescomp.core import seeded_rng
from rescomp.driver import LeakyEsnDriver
from rescomp.forecast import ContinuousEsnForecaster, EsnForecaster, nrmse, valid_time
from rescomp.train import ridge_regression, train_controller, train_forecaster


@pytest.fixture(scope="module")
def lorenz_experiment():
    """Shared Lorenz-63 run: data, trained model, forced states, forecast."""
    ts = data.lorenz63(100, 0.01, u0=np.array([-10.0, 1.0, 10.0]))
    U = ts.values
    split = int(0.8 * U.shape[0])
    model = EsnForecaster.build(3, 1000, seed=0)
    trained, states = train_forecaster(model, U[:split], beta=1e-7, spinup=200)
    pred = trained.forecast(states[-1], U.shape[0] - split)
    return U, split, trained, states, pred


def test_criterion_01_ridge_oracle_equivalence():
    """100 random instances match the explicit normal-equations inverse."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(100):
        beta = [0.0, 1e-6, 1e-3, 1.0][i % 4]
        f = int(rng.integers(2, 21))
        n = int(rng.integers(f + 1, 51)) if beta == 0.0 else int(rng.integers(2, 51))
        g = int(rng.integers(1, 6))
        X = rng.standard_normal((n, f))
        Y = rng.standard_normal((n, g))
        W = ridge_regression(X, Y, beta)
        oracle = (np.linalg.inv(X.T @ X + beta * np.eye(f)) @ (X.T @ Y)).T
        denom = max(np.max(np.abs(oracle)), 1e-300)
        worst = max(worst, np.max(np.abs(W - oracle)) / denom)
    elapsed = time.perf_counter() - t0
    print(f"criterion 1: max relative error {worst:.3e} (budget 5 s, took {elapsed:.1f} s)")
    assert worst < 1e-8


def test_criterion_02_echo_state_contraction():
    """Two initial states end within 1e-8 after 500 forced Lorenz steps."""
    t0 = time.perf_counter()
    U = data.lorenz63(6, 0.01).values[:501]
    worst = 0.0
    for seed in range(10):
        model = EsnForecaster.build(3, 500, spectral_radius=0.7, leak_rate=1.0, seed=seed)
        rng = seeded_rng(seed, 77)
        ra = rng.standard_normal((1, 500))
        rb = rng.standard_normal((1, 500))
        fa = model.force(U[:500], r0=ra)
        fb = model.force(U[:500], r0=rb)
        worst = max(worst, float(np.max(np.abs(fa[-1] - fb[-1]))))
    elapsed = time.perf_counter() - t0
    print(f"criterion 2: max end-state gap {worst:.3e} (budget 10 s, took {elapsed:.1f} s)")
    assert worst < 1e-8


def test_criterion_03_lorenz_valid_time(lorenz_experiment):
    """Lorenz-63 forecast stays valid for at least 4 Lyapunov times."""
    U, split, trained, states, pred = lorenz_experiment
    vt = valid_time(pred, U[split:], 0.01, 0.9, threshold=0.4)
    print(f"criterion 3: valid time {vt:.2f} Lyapunov times (bar: >= 4)")
    assert vt >= 4.0


def test_criterion_04_forecast_path_equivalence(lorenz_experiment):
    """Forecast-from-state equals forecast-from-IC with the training tail."""
    U, split, trained, states, pred = lorenz_experiment
    n = 200
    alt = trained.forecast_from_ic(U[:split], n)
    gap = float(np.max(np.abs(alt - pred[:n])))
    print(f"criterion 4: max-abs path gap {gap:.3e} (bar: < 1e-6)")
    assert gap < 1e-6


def test_criterion_05_ks_parallel_forecast():
    """16 parallel reservoirs track KS for one Lyapunov time, 2 of 3 seeds."""
    t0 = time.perf_counter()
    ts = data.ks_1d(1500, u0=data.ks_random_ic(128, seed=3))
    U = ts.values
    split = int(0.8 * U.shape[0])
    U_train = U[:split].copy()
    U_test = U[split:]
    U_train += seeded_rng(3, 13).standard_normal(U_train.shape) * np.std(U_train) * 0.03
    steps = round(1.0 / (0.081 * 0.25))
    scores = []
    for seed in (0, 1, 2):
        model = EsnForecaster.build(
            128, 1024, chunks=16, locality=8, leak_rate=0.534,
            spectral_radius=0.7, input_scaling=0.005, bias=1.915, seed=seed,
        )
        trained, states = train_forecaster(model, U_train, beta=1e-7, spinup=200)
        pred = trained.forecast(states[-1], steps)
        scores.append(float(np.max(nrmse(pred, U_test[:steps]))))
    hits = sum(s < 0.5 for s in scores)
    elapsed = time.perf_counter() - t0
    print(
        f"criterion 5: max NRMSE over 1 Lyapunov time per seed "
        f"{[f'{s:.3f}' for s in scores]} (bar: < 0.5 on >= 2 of 3; "
        f"budget 15 min, took {elapsed / 60:.1f} min)"
    )
    assert hits >= 2


def test_criterion_06_classification_accuracy():
    """Synthetic sinusoid task: >= 95% in final-state and mean modes."""
    t0 = time.perf_counter()
    train_seqs, train_labels = sinusoid_dataset(20, seed=0)
    test_seqs, test_labels = sinusoid_dataset(10, seed=1)
    accs = {}
    for repr_, spinup in (("final", 0), ("mean", 20)):
        model = EsnClassifier.build(3, 3, 500, seed=42, state_repr=repr_)
        model = train.train_classifier(
            model, train_seqs, train_labels, beta=1e-6, spinup=spinup
        )
        accs[repr_] = accuracy(model, test_seqs, test_labels, spinup=spinup)
    elapsed = time.perf_counter() - t0
    print(
        f"criterion 6: accuracy final {accs['final']:.2%}, mean {accs['mean']:.2%} "
        f"(bar: >= 95% each; budget 1 min, took {elapsed:.1f} s)"
    )
    assert accs["final"] >= 0.95 and accs["mean"] >= 0.95


def test_criterion_07_mpc_gradient_vs_finite_differences():
    """Exact gradient matches central differences on 50 random instances."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(50):
        res_dim = int(rng.integers(4, 17))
        horizon = int(rng.integers(2, 11))
        driver = "leaky" if i % 2 == 0 else "gru"
        model = EsnController.build(2, 1, res_dim, seed=i, driver=driver)
        W = 0.2 * rng.standard_normal((1, 2, res_dim))
        model = model.with_readout(model.readout.with_weights(W))
        r0 = 0.2 * rng.standard_normal((1, res_dim))
        u = 0.3 * rng.standard_normal((horizon, 1))
        y_ref = 0.3 * rng.standard_normal((horizon, 2))
        cfg = MpcConfig(horizon, alpha1=1.0, alpha2=0.01, alpha3=0.01)
        grad = mpc_gradient(model, u, r0, y_ref, cfg)
        eps = 1e-6
        fd = np.zeros_like(u)
        for j in range(horizon):
            up, dn = u.copy(), u.copy()
            up[j, 0] += eps
            dn[j, 0] -= eps
            fd[j, 0] = (
                mpc_cost(model, up, r0, y_ref, cfg)
                - mpc_cost(model, dn, r0, y_ref, cfg)
            ) / (2 * eps)
        denom = max(np.max(np.abs(fd)), 1e-12)
        worst = max(worst, float(np.max(np.abs(grad - fd)) / denom))
    elapsed = time.perf_counter() - t0
    print(
        f"criterion 7: max relative gradient error {worst:.3e} "
        f"(bar: < 1e-5; budget 30 s, took {elapsed:.1f} s)"
    )
    assert worst < 1e-5


def test_criterion_08_control_efficacy():
    """Receding-horizon MPC beats free oscillation by at least 2x."""
    t0 = time.perf_counter()
    plant = appendix_plant()
    rng = seeded_rng(0, 99)
    u_train = np.repeat(rng.uniform(-1, 1, 100), 10).reshape(-1, 1)
    states, outputs = plant.simulate(u_train)
    model = EsnController.build(2, 1, 1000, seed=0)
    model, R = train_controller(model, outputs[:-1], u_train[1:], beta=1e-7, spinup=200)
    cfg = MpcConfig(20, alpha1=1.0, alpha2=1e-3, alpha3=1e-3)
    ref = np.zeros((250, 2))
    outs, _ = receding_horizon(
        model, plant, R[-1], ref, 250, cfg, x0=states[-1], y0=outputs[-1]
    )
    _, unc = plant.simulate(np.zeros(250), x0=states[-1])
    ratio = float(np.linalg.norm(outs[-1]) / np.linalg.norm(unc[-1]))
    elapsed = time.perf_counter() - t0
    print(
        f"criterion 8: controlled/uncontrolled final norm ratio {ratio:.4f} "
        f"(bar: <= 0.5; budget 5 min, took {elapsed / 60:.1f} min)"
    )
    assert ratio <= 0.5


def test_criterion_09_continuous_forecaster():
    """Continuous reservoir reaches 2 Lyapunov times; Euler variant is finite."""
    t0 = time.perf_counter()
    ts = data.lorenz63(100, 0.02, u0=np.array([-10.0, 1.0, 10.0]))
    U = ts.values
    split = int(0.8 * U.shape[0])
    times = 0.02 * np.arange(split)
    model = ContinuousEsnForecaster.build(3, 1000, dt=0.02, time_const=40.0, seed=0)
    trained, states = train_forecaster(model, U[:split], beta=1e-7, spinup=200, ts=times)
    pred = trained.forecast(states[-1], U.shape[0] - split)
    vt = valid_time(pred, U[split:], 0.02, 0.9, threshold=0.4)

    euler = ContinuousEsnForecaster.build(
        3, 400, dt=0.02, time_const=50.0, seed=0, solver="euler"
    )
    etrained, estates = train_forecaster(euler, U[:split], beta=1e-7, spinup=200, ts=times)
    epred = etrained.forecast(estates[-1], 200)
    finite = bool(np.all(np.isfinite(epred)))
    elapsed = time.perf_counter() - t0
    print(
        f"criterion 9: valid time {vt:.2f} Lyapunov times (bar: >= 2); "
        f"Euler variant finite: {finite} (budget 5 min, took {elapsed / 60:.1f} min)"
    )
    assert vt >= 2.0
    assert finite


def test_criterion_10_integrator_quality():
    """Closed-form, energy-conservation, and self-convergence checks."""
    t0 = time.perf_counter()
    ts = data.integrate_ode(data.harmonic_system(omega=1.0), 10.0, 0.01)
    t = ts.times
    harm_err = float(
        max(
            np.max(np.abs(ts.values[:, 0] - np.cos(t))),
            np.max(np.abs(ts.values[:, 1] + np.sin(t))),
        )
    )

    dp = data.double_pendulum(40, 0.01)
    energy = data.double_pendulum_energy(dp.values)
    drift = float(np.max(np.abs(energy - energy[0])) / abs(energy[0]))

    u0 = data.ks_1d(50, u0=data.ks_random_ic(128, seed=3), dt=0.25).values[-1]
    coarse = data.ks_1d(10, u0=u0, dt=0.125).values[-1]
    fine = data.ks_1d(10, u0=u0, dt=0.0625).values[-1]
    ks_rms = float(np.sqrt(np.mean((coarse - fine) ** 2)))
    elapsed = time.perf_counter() - t0
    print(
        f"criterion 10: harmonic error {harm_err:.2e} (< 1e-8), "
        f"energy drift {drift:.2e} (< 1e-5), KS self-convergence {ks_rms:.2e} "
        f"(< 1e-3) (budget 2 min, took {elapsed:.1f} s)"
    )
    assert harm_err < 1e-8
    assert drift < 1e-5
    assert ks_rms < 1e-3


def test_criterion_11_per_step_time_scaling():
    """Median per-step forecast time grows <= 5x per reservoir doubling."""
    t0 = time.perf_counter()
    U = data.lorenz63(30, 0.01).values
    medians = []
    for res_dim in (500, 1000, 2000):
        model = EsnForecaster.build(3, res_dim, seed=0)
        trained, states = train_forecaster(model, U, spinup=200)
        trained.forecast(states[-1], 100)  # warmup
        samples = []
        for _ in range(5):
            start = time.perf_counter()
            trained.forecast(states[-1], 500)
            samples.append((time.perf_counter() - start) / 500)
        medians.append(float(np.median(samples)))
    ratios = [medians[1] / medians[0], medians[2] / medians[1]]
    elapsed = time.perf_counter() - t0
    print(
        f"criterion 11: per-step times "
        f"{[f'{m * 1e6:.0f} us' for m in medians]} for res_dim 500/1000/2000, "
        f"doubling ratios {[f'{r:.2f}' for r in ratios]} "
        f"(bar: <= 5 each; budget 5 min, took {elapsed:.1f} s)"
    )
    assert all(r <= 5.0 for r in ratios)
