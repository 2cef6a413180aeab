"""Command-line harness: data generation, experiments, control demo, and
benchmarks, driven by TOML config files."""

from __future__ import annotations

import json
import statistics
import sys
import time
from pathlib import Path

import click
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import classify as classify_mod
from . import control as control_mod
from . import data as data_mod
from . import kernels, train
from .core import TimeSeries, load_csv, load_model, save_csv, save_model, seeded_rng
from .errors import ConfigError, RescompError
from .forecast import ContinuousEsnForecaster, EsnForecaster, nrmse, valid_time

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_VALIDATION_ERRORS = (
    ConfigError,
    "DimensionMismatch",
    "NonSquare",
    "IndivisibleChunks",
    "LocalityTooLarge",
    "TooShort",
    "UnknownSystem",
    "VersionMismatch",
    "CorruptChecksum",
)


def _is_validation(err: RescompError) -> bool:
    names = {e if isinstance(e, str) else e.__name__ for e in _VALIDATION_ERRORS}
    return type(err).__name__ in names


def _fail(err: Exception):
    click.echo(f"error: {err}", err=True)
    if isinstance(err, RescompError) and not _is_validation(err):
        sys.exit(EXIT_NUMERICAL)
    sys.exit(EXIT_VALIDATION)


# --- config handling ---------------------------------------------------------

_SCHEMA = {
    "data": {
        "system": str, "tN": float, "dt": float, "u0": list, "csv": str,
        "N": int, "Nx": int, "domain": list, "ic_seed": int,
    },
    "model": {
        "kind": str, "res_dim": int, "chunks": int, "locality": int,
        "leak_rate": float, "spectral_radius": float, "input_scaling": float,
        "bias": float, "seed": int, "embedding": str, "driver": str,
        "time_const": float, "solver": str, "euler_step": float,
        "rtol": float, "atol": float,
    },
    "training": {
        "beta": float, "spinup": int, "noise": float, "noise_seed": int,
        "test_fraction": float,
    },
    "evaluation": {
        "threshold": float, "lyapunov": float, "forecast_steps": int,
    },
    "plant": {
        "m1": float, "m2": float, "k1": float, "k2": float,
        "c1": float, "c2": float, "dt": float,
    },
    "control": {
        "horizon": int, "alpha1": float, "alpha2": float, "alpha3": float,
        "max_iter": int, "gtol": float, "steps": int, "train_len": int,
        "train_seed": int,
    },
}


def load_config(path, sections) -> dict:
    """Parse a TOML config, rejecting unknown tables and keys."""
    try:
        with open(path, "rb") as f:
            cfg = tomllib.load(f)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}")
    for table, entries in cfg.items():
        if table not in sections:
            raise ConfigError(table, f"unknown config table [{table}]")
        if not isinstance(entries, dict):
            raise ConfigError(table, "top-level keys must live in a table")
        schema = _SCHEMA[table]
        for key, value in entries.items():
            if key not in schema:
                raise ConfigError(
                    f"{table}.{key}", f"unknown key {key!r} in [{table}]"
                )
            want = schema[key]
            if want is float and isinstance(value, int):
                entries[key] = float(value)
            elif not isinstance(value, want):
                raise ConfigError(
                    f"{table}.{key}",
                    f"expected {want.__name__}, got {type(value).__name__}",
                )
    return cfg


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    return str(value)


def dump_config(cfg: dict) -> str:
    """Serialize a parsed config back to TOML (round-trips exactly)."""
    lines = []
    for table, entries in cfg.items():
        lines.append(f"[{table}]")
        for key, value in entries.items():
            lines.append(f"{key} = {_toml_scalar(value)}")
        lines.append("")
    return "\n".join(lines)


def _make_dataset(data_cfg: dict) -> TimeSeries:
    if "csv" in data_cfg:
        return load_csv(data_cfg["csv"])
    system = data_cfg.get("system")
    if system is None:
        raise ConfigError("data.system", "either data.system or data.csv is required")
    tN = data_cfg.get("tN")
    dt = data_cfg.get("dt")
    if tN is None or dt is None:
        raise ConfigError("data.tN", "data.tN and data.dt are required")
    if system == "ks":
        Nx = data_cfg.get("Nx", 128)
        domain = tuple(data_cfg.get("domain", (0.0, 48.0)))
        u0 = data_cfg.get("u0")
        if u0 is None:
            u0 = data_mod.ks_random_ic(Nx, domain, seed=data_cfg.get("ic_seed", 3))
        return data_mod.integrate_ks(
            data_mod.KsConfig(Nx=Nx, domain=domain, dt=dt, tN=tN, u0=np.asarray(u0))
        )
    params = {}
    if "N" in data_cfg and system == "lorenz96":
        params["N"] = data_cfg["N"]
    sys_obj = data_mod.make_system(system, **params)
    return data_mod.integrate_ode(sys_obj, tN, dt, u0=data_cfg.get("u0"))


def _build_model(model_cfg: dict, data_dim: int, dt: float):
    kind = model_cfg.get("kind", "forecaster")
    common = dict(
        chunks=model_cfg.get("chunks", 1),
        locality=model_cfg.get("locality", 0),
        spectral_radius=model_cfg.get("spectral_radius", 0.9),
        input_scaling=model_cfg.get("input_scaling", 0.1),
        bias=model_cfg.get("bias", 1.0),
        seed=model_cfg.get("seed", 0),
        embedding=model_cfg.get("embedding", "linear"),
    )
    res_dim = model_cfg.get("res_dim", 500)
    if kind == "forecaster":
        return EsnForecaster.build(
            data_dim, res_dim,
            leak_rate=model_cfg.get("leak_rate", 1.0),
            driver=model_cfg.get("driver", "leaky"),
            **common,
        )
    if kind == "cesn":
        return ContinuousEsnForecaster.build(
            data_dim, res_dim, dt,
            time_const=model_cfg.get("time_const", 1.0),
            solver=model_cfg.get("solver", "dopri"),
            rtol=model_cfg.get("rtol", 1e-6),
            atol=model_cfg.get("atol", 1e-8),
            euler_step=model_cfg.get("euler_step"),
            **common,
        )
    raise ConfigError("model.kind", f"unknown model kind {kind!r}")


# --- commands ----------------------------------------------------------------


@click.group()
@click.version_option(package_name="rescomp")
def main():
    """Reservoir-computing experiments: data, training, control, benchmarks."""


@main.command("generate-data")
@click.option("--system", required=True, help="System name, or 'ks' for the 1-D PDE.")
@click.option("--tN", "tN", type=float, required=True)
@click.option("--dt", type=float, required=True)
@click.option("--u0", type=str, default=None, help="Comma-separated initial condition.")
@click.option("--N", "N", type=int, default=None, help="Dimension for lorenz96.")
@click.option("--Nx", "Nx", type=int, default=128, help="KS grid points.")
@click.option("--domain", type=str, default="0,48", help="KS domain 'a,b'.")
@click.option("--out", type=click.Path(), required=True)
def generate_data(system, tN, dt, u0, N, Nx, domain, out):
    """Integrate a benchmark system and write the trajectory CSV."""
    try:
        u0_vec = None if u0 is None else np.array([float(v) for v in u0.split(",")])
        if system == "ks":
            a, b = (float(v) for v in domain.split(","))
            ts = data_mod.integrate_ks(data_mod.KsConfig(
                Nx=Nx, domain=(a, b), dt=dt, tN=tN,
                u0=u0_vec if u0_vec is not None else data_mod.ks_random_ic(Nx, (a, b)),
            ))
        else:
            params = {"N": N} if (N is not None and system == "lorenz96") else {}
            ts = data_mod.integrate_ode(
                data_mod.make_system(system, **params), tN, dt, u0=u0_vec
            )
        save_csv(ts, out)
        click.echo(f"wrote {ts.values.shape[0]} x {ts.values.shape[1]} samples to {out}")
    except (RescompError, ValueError) as exc:
        _fail(exc)


@main.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def run(config_path, out_dir):
    """Run a forecasting experiment: data, split, train, forecast, metrics."""
    try:
        cfg = load_config(config_path, ("data", "model", "training", "evaluation"))
        _run_experiment(cfg, Path(out_dir))
    except (RescompError, ValueError) as exc:
        _fail(exc)


def _run_experiment(cfg: dict, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = _make_dataset(cfg.get("data", {}))
    tr_cfg = cfg.get("training", {})
    ev_cfg = cfg.get("evaluation", {})
    U = dataset.values
    dt = dataset.dt or 1.0
    split = int((1.0 - tr_cfg.get("test_fraction", 0.2)) * U.shape[0])
    if split < 2 or split >= U.shape[0]:
        raise ConfigError("training.test_fraction", "split leaves too few samples")
    U_train = U[:split].copy()
    U_test = U[split:]
    noise = tr_cfg.get("noise", 0.0)
    if noise > 0:
        rng = seeded_rng(tr_cfg.get("noise_seed", 0), 13)
        U_train += rng.standard_normal(U_train.shape) * np.std(U_train) * noise

    model = _build_model(cfg.get("model", {}), U.shape[1], dt)
    kwargs = {"ts": dt * np.arange(split)} if model.is_continuous else {}
    trained, states = train.train_forecaster(
        model, U_train,
        beta=tr_cfg.get("beta", 1e-7),
        spinup=tr_cfg.get("spinup", 200),
        **kwargs,
    )
    steps = ev_cfg.get("forecast_steps", 0) or U_test.shape[0]
    steps = min(steps, U_test.shape[0])
    pred = trained.forecast(states[-1], steps)

    lyap = ev_cfg.get("lyapunov", 1.0)
    threshold = ev_cfg.get("threshold", 0.4)
    vt = valid_time(pred, U_test[:steps], dt, lyap, threshold)
    curve = nrmse(pred, U_test[:steps])

    save_csv(TimeSeries(pred, dt=dt, t0=float(split) * dt), out_dir / "forecast.csv")
    save_csv(TimeSeries(U_test[:steps], dt=dt, t0=float(split) * dt), out_dir / "truth.csv")
    curve_path = out_dir / "rmse_curve.csv"
    np.savetxt(curve_path, np.column_stack([dt * np.arange(steps), curve]),
               delimiter=",", header="t,nrmse", comments="")
    save_model(trained, out_dir / "model.bin")
    (out_dir / "config_resolved.toml").write_text(dump_config(cfg))
    metrics = {"valid_time_LT": vt, "rmse_curve_path": str(curve_path)}
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2))
    click.echo(f"valid_time_LT = {vt:.3f}")


@main.command("control-demo")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def control_demo(config_path, out_dir):
    """Two-mass MPC demo: train a surrogate, run the receding-horizon loop."""
    try:
        cfg = load_config(config_path, ("plant", "model", "training", "control"))
        _run_control(cfg, Path(out_dir))
    except (RescompError, ValueError) as exc:
        _fail(exc)


def _run_control(cfg: dict, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    plant = control_mod.TwoMassPlant(**cfg.get("plant", {"k1": 2.0, "k2": 1.0, "c1": 0.4, "c2": 0.4, "dt": 0.1}))
    c_cfg = cfg.get("control", {})
    steps = c_cfg.get("steps", 250)
    train_len = c_cfg.get("train_len", 1000)
    if train_len % 10:
        raise ConfigError("control.train_len", "must be a multiple of 10")
    horizon = c_cfg.get("horizon", 20)
    if horizon > steps:
        raise ConfigError("control.horizon", "horizon exceeds the reference length")
    rng = seeded_rng(c_cfg.get("train_seed", 0), 99)
    u_train = np.repeat(rng.uniform(-1, 1, train_len // 10), 10).reshape(-1, 1)
    states, outputs = plant.simulate(u_train)

    m_cfg = cfg.get("model", {})
    model = control_mod.EsnController.build(
        plant.output_dim, 1, m_cfg.get("res_dim", 1000),
        leak_rate=m_cfg.get("leak_rate", 1.0),
        spectral_radius=m_cfg.get("spectral_radius", 0.9),
        input_scaling=m_cfg.get("input_scaling", 0.1),
        bias=m_cfg.get("bias", 1.0),
        seed=m_cfg.get("seed", 0),
    )
    tr_cfg = cfg.get("training", {})
    model, R = train.train_controller(
        model, outputs[:-1], u_train[1:],
        beta=tr_cfg.get("beta", 1e-7), spinup=tr_cfg.get("spinup", 200),
    )
    mpc = control_mod.MpcConfig(
        horizon,
        alpha1=c_cfg.get("alpha1", 1.0),
        alpha2=c_cfg.get("alpha2", 1e-3),
        alpha3=c_cfg.get("alpha3", 1e-3),
        max_iter=c_cfg.get("max_iter", 100),
        gtol=c_cfg.get("gtol", 1e-8),
    )
    ref = np.zeros((steps, plant.output_dim))
    outs, ctrls = control_mod.receding_horizon(
        model, plant, R[-1], ref, steps, mpc, x0=states[-1], y0=outputs[-1]
    )
    _, unc = plant.simulate(np.zeros(steps), x0=states[-1])

    save_csv(TimeSeries(outs, dt=plant.dt), out_dir / "controlled.csv")
    save_csv(TimeSeries(unc, dt=plant.dt), out_dir / "uncontrolled.csv")
    save_csv(TimeSeries(ctrls, dt=plant.dt), out_dir / "controls.csv")
    summary = {
        "controlled_final_norm": float(np.linalg.norm(outs[-1])),
        "uncontrolled_final_norm": float(np.linalg.norm(unc[-1])),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    click.echo(json.dumps(summary))


# --- classification ----------------------------------------------------------


@main.group()
def classify():
    """Train the demo classifier or score a sequence CSV."""


@classify.command("train-demo")
@click.option("--res-dim", type=int, default=500)
@click.option("--seed", type=int, default=42)
@click.option("--state-repr", type=click.Choice(classify_mod.STATE_REPRS), default="final")
@click.option("--spinup", type=int, default=0)
@click.option("--beta", type=float, default=1e-6)
@click.option("--out", type=click.Path(), required=True)
def classify_train_demo(res_dim, seed, state_repr, spinup, beta, out):
    """Train on the synthetic multi-frequency sinusoid task."""
    try:
        seqs, labels = classify_mod.sinusoid_dataset(20, seed=0)
        test_seqs, test_labels = classify_mod.sinusoid_dataset(10, seed=1)
        model = classify_mod.EsnClassifier.build(
            3, 3, res_dim, seed=seed, state_repr=state_repr
        )
        model = train.train_classifier(model, seqs, labels, beta=beta, spinup=spinup)
        acc = classify_mod.accuracy(model, test_seqs, test_labels, spinup=spinup)
        save_model(model, out)
        click.echo(f"test accuracy {acc:.3f}; model saved to {out}")
    except (RescompError, ValueError) as exc:
        _fail(exc)


@classify.command("predict")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--spinup", type=int, default=0)
@click.option("--out", type=click.Path(), default=None)
def classify_predict(model_path, input_path, spinup, out):
    """Classify one sequence CSV; emits JSON {predicted, probs}."""
    try:
        model = load_model(model_path)
        seq = load_csv(input_path).values
        probs = model.classify(seq, spinup=spinup)
        result = {"predicted": int(np.argmax(probs)), "probs": probs.tolist()}
        text = json.dumps(result)
        if out:
            Path(out).write_text(text)
        click.echo(text)
    except (RescompError, ValueError) as exc:
        _fail(exc)


# --- benchmarking ------------------------------------------------------------


def _median_step_time(model, r0, steps, repeats):
    model.forecast(r0, min(steps, 100))  # warmup
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        model.forecast(r0, steps)
        samples.append((time.perf_counter() - t0) / steps)
    return statistics.median(samples)


@main.command("bench")
@click.option("--res-dims", default="500,1000,2000", help="Comma-separated sizes.")
@click.option("--train-lens", default="1000,10000", help="Training lengths at res_dim 2000.")
@click.option("--repeats", type=int, default=5)
@click.option("--forecast-steps", type=int, default=500)
@click.option("--impl", type=click.Choice(["compiled", "python", "both"]), default="both")
@click.option("--out-dir", type=click.Path(), required=True)
def bench(res_dims, train_lens, repeats, forecast_steps, impl, out_dir):
    """Timing benchmarks: per-forecast-step time vs. reservoir size and
    training time vs. training length, per kernel backend."""
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        dims = [int(v) for v in res_dims.split(",")]
        lens = [int(float(v)) for v in train_lens.split(",")]
        backends = ["compiled", "python"] if impl == "both" else [impl]
        if "compiled" in backends and not kernels.have_compiled():
            click.echo("compiled backend unavailable; benchmarking python only", err=True)
            backends = ["python"]
        if time.get_clock_info("perf_counter").resolution > 1e-6:
            click.echo("warning: coarse timer resolution; timings may be noisy", err=True)

        U = data_mod.lorenz63(30, 0.01).values
        rows = []
        saved_backend = kernels.backend_name()
        for backend in backends:
            kernels.set_backend(backend)
            for res in dims:
                model = EsnForecaster.build(3, res, seed=0)
                trained, R = train.train_forecaster(model, U, spinup=200)
                sec = _median_step_time(trained, R[-1], forecast_steps, repeats)
                rows.append(("forecast_step", backend, res, sec))
                click.echo(f"forecast_step backend={backend} res_dim={res} {sec*1e6:.1f} us")
            for T in lens:
                U_long = data_mod.lorenz63(max(30.0, (T + 1) * 0.01), 0.01).values[: T + 1]
                model = EsnForecaster.build(3, 2000, seed=0)
                samples = []
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    train.train_forecaster(model, U_long, spinup=min(200, T // 4))
                    samples.append(time.perf_counter() - t0)
                sec = statistics.median(samples)
                rows.append(("train", backend, T, sec))
                click.echo(f"train backend={backend} train_len={T} {sec:.3f} s")
        kernels.set_backend(saved_backend)

        csv_path = out / "bench.csv"
        with open(csv_path, "w") as f:
            f.write("kind,backend,size,median_seconds\n")
            for kind, backend, size, sec in rows:
                f.write(f"{kind},{backend},{size},{sec:.9g}\n")
        svg_path = out / "bench.svg"
        svg_path.write_text(_bench_svg([r for r in rows if r[0] == "forecast_step"]))
        click.echo(f"wrote {csv_path} and {svg_path}")
    except (RescompError, ValueError) as exc:
        _fail(exc)


def _bench_svg(rows) -> str:
    """Minimal log-log SVG line chart of per-step time vs. reservoir size."""
    width, height, margin = 480, 320, 50
    series = {}
    for _, backend, size, sec in rows:
        series.setdefault(backend, []).append((size, sec))
    xs = sorted({s for pts in series.values() for s, _ in pts})
    ys = [t for pts in series.values() for _, t in pts]
    if not xs or not ys:
        return "<svg xmlns='http://www.w3.org/2000/svg'/>"
    lx0, lx1 = np.log10(min(xs)), np.log10(max(xs))
    ly0, ly1 = np.log10(min(ys)), np.log10(max(ys))
    lx1 = lx1 if lx1 > lx0 else lx0 + 1
    ly1 = ly1 if ly1 > ly0 else ly0 + 1

    def px(x):
        return margin + (np.log10(x) - lx0) / (lx1 - lx0) * (width - 2 * margin)

    def py(y):
        return height - margin - (np.log10(y) - ly0) / (ly1 - ly0) * (height - 2 * margin)

    colors = {"compiled": "#C44E52", "python": "#4C72B0"}
    parts = [
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{width}' height='{height}'>",
        f"<rect width='{width}' height='{height}' fill='white'/>",
        f"<line x1='{margin}' y1='{height-margin}' x2='{width-margin}' y2='{height-margin}' stroke='black'/>",
        f"<line x1='{margin}' y1='{margin}' x2='{margin}' y2='{height-margin}' stroke='black'/>",
        f"<text x='{width/2}' y='{height-12}' font-size='12' text-anchor='middle'>reservoir dimension</text>",
        f"<text x='14' y='{height/2}' font-size='12' text-anchor='middle' transform='rotate(-90 14 {height/2})'>seconds per forecast step</text>",
    ]
    for x in xs:
        parts.append(
            f"<text x='{px(x):.1f}' y='{height-margin+16}' font-size='10' text-anchor='middle'>{x}</text>"
        )
    for backend, pts in series.items():
        pts = sorted(pts)
        path = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in pts)
        color = colors.get(backend, "#55A868")
        parts.append(
            f"<polyline points='{path}' fill='none' stroke='{color}' stroke-width='2'/>"
        )
        x_last, y_last = pts[-1]
        parts.append(
            f"<text x='{px(x_last)+4:.1f}' y='{py(y_last):.1f}' font-size='11' fill='{color}'>{backend}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts)


if __name__ == "__main__":
    main()
