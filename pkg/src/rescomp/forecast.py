"""Autonomous forecasting models and forecast-quality metrics."""

from __future__ import annotations

import numpy as np

from .core import ReservoirState, as_state_array, register_model
from .driver import (
    ContinuousEsnDriver,
    CubicHermiteInterpolant,
    GruDriver,
    LeakyEsnDriver,
)
from .embed import (
    ChunkLayout,
    LinearEmbedding,
    MlpEmbedding,
    make_linear_embedding,
    make_mlp_embedding,
)
from .errors import DimensionMismatch, NonFiniteState
from .readout import LinearReadout

DEFAULT_THRESHOLD = 0.4


# --- (de)serialization helpers ----------------------------------------------


def _sparse_arrays(prefix: str, w_r) -> dict:
    arrays = {}
    for c, m in enumerate(w_r):
        arrays[f"{prefix}_indptr_{c}"] = m.indptr
        arrays[f"{prefix}_indices_{c}"] = m.indices
        arrays[f"{prefix}_data_{c}"] = m.data
    return arrays


def _sparse_from_arrays(prefix: str, arrays: dict, chunks: int, res_dim: int):
    from .core import SparseMatrix

    return [
        SparseMatrix(
            (res_dim, res_dim),
            arrays[f"{prefix}_indptr_{c}"],
            arrays[f"{prefix}_indices_{c}"],
            arrays[f"{prefix}_data_{c}"],
        )
        for c in range(chunks)
    ]


def _embedding_state(embedding) -> tuple[str, dict]:
    if isinstance(embedding, LinearEmbedding):
        return "linear", {"embed_weights": embedding.weights}
    if isinstance(embedding, MlpEmbedding):
        return "mlp", {
            "embed_w1": embedding.w1,
            "embed_b1": embedding.b1,
            "embed_w2": embedding.w2,
            "embed_b2": embedding.b2,
        }
    raise TypeError(f"cannot serialize embedding {type(embedding).__name__}")


def _embedding_from_state(kind: str, hyper: dict, arrays: dict):
    if kind == "linear":
        return LinearEmbedding(arrays["embed_weights"], hyper["input_scaling"])
    if kind == "mlp":
        return MlpEmbedding(
            arrays["embed_w1"], arrays["embed_b1"],
            arrays["embed_w2"], arrays["embed_b2"],
        )
    raise ValueError(f"unknown embedding kind {kind!r}")


_GRU_FIELDS = ("w_z", "u_z", "b_z", "w_s", "u_s", "b_s", "w_h", "u_h", "b_h")


def _make_embedding(kind, data_dim, res_dim, chunks, locality, scaling, seed):
    if kind == "linear":
        return make_linear_embedding(data_dim, res_dim, chunks, locality, scaling, seed)
    if kind == "mlp":
        if chunks != 1:
            raise DimensionMismatch("mlp embedding supports a single chunk only")
        return make_mlp_embedding(data_dim, res_dim, seed)
    raise ValueError(f"unknown embedding kind {kind!r}")


def force_sequence(embedding, layout: ChunkLayout, driver, U: np.ndarray,
                   r0=None) -> np.ndarray:
    """Teacher-forced state sequence for a discrete driver.

    Returns (T, chunks, res_dim); states[t] is the state after consuming
    U[0..t]. Leaky-tanh drivers run the fused per-chunk kernel; other
    drivers fall back to a stepwise loop.
    """
    U = np.asarray(U, dtype=np.float64)
    chunks, res_dim = driver.chunks, driver.res_dim
    if U.ndim != 2 or U.shape[1] != layout.data_dim:
        raise DimensionMismatch(f"expected (T, {layout.data_dim}), got {U.shape}")
    r = (
        np.zeros((chunks, res_dim))
        if r0 is None
        else as_state_array(r0, chunks, res_dim)
    )
    embedded = embedding.embed_sequence(layout, U)
    T = U.shape[0]
    out = np.empty((T, chunks, res_dim))
    if isinstance(driver, LeakyEsnDriver):
        for c in range(chunks):
            out_c = np.empty((T, res_dim))
            driver.force_states(
                np.ascontiguousarray(r[c]),
                np.ascontiguousarray(embedded[:, c, :]),
                out_c,
                c,
            )
            out[:, c, :] = out_c
    else:
        for t in range(T):
            r = driver.advance(r, embedded[t])
            out[t] = r
    return out


# --- discrete-time forecaster -----------------------------------------------


@register_model("esn_forecaster")
class EsnForecaster:
    """Discrete-time autonomous forecaster: embed, advance, read, feed back.

    The readout starts at zero and is fit by `train.train_forecaster`; the
    embedding and reservoir are frozen at construction.
    """

    is_continuous = False

    def __init__(self, embedding, layout: ChunkLayout, driver, readout: LinearReadout):
        if readout.out_dim != layout.data_dim:
            raise DimensionMismatch(
                f"readout dim {readout.out_dim} != data dim {layout.data_dim}"
            )
        self.embedding = embedding
        self.layout = layout
        self.driver = driver
        self.readout = readout

    @classmethod
    def build(
        cls,
        data_dim: int,
        res_dim: int,
        chunks: int = 1,
        locality: int = 0,
        leak_rate: float = 1.0,
        spectral_radius: float = 0.9,
        input_scaling: float = 0.1,
        bias: float = 1.0,
        seed: int = 0,
        embedding: str = "linear",
        driver: str = "leaky",
    ) -> "EsnForecaster":
        emb, layout = _make_embedding(
            embedding, data_dim, res_dim, chunks, locality, input_scaling, seed
        )
        if driver == "leaky":
            drv = LeakyEsnDriver.build(
                res_dim, chunks, leak_rate, spectral_radius, bias, seed=seed
            )
        elif driver == "gru":
            drv = GruDriver.build(res_dim, seed=seed, chunks=chunks)
        else:
            raise ValueError(f"unknown driver kind {driver!r}")
        readout = LinearReadout.zeros(data_dim, res_dim, chunks)
        return cls(emb, layout, drv, readout)

    @property
    def chunks(self) -> int:
        return self.layout.chunks

    @property
    def res_dim(self) -> int:
        return self.driver.res_dim

    @property
    def data_dim(self) -> int:
        return self.layout.data_dim

    def with_readout(self, readout: LinearReadout) -> "EsnForecaster":
        return type(self)(self.embedding, self.layout, self.driver, readout)

    def zero_state(self) -> ReservoirState:
        return ReservoirState.zeros(self.chunks, self.res_dim)

    def advance(self, r, u: np.ndarray) -> np.ndarray:
        """One reservoir step driven by the input vector u."""
        states = as_state_array(r, self.chunks, self.res_dim)
        return self.driver.advance(states, self.embedding.embed(self.layout, u))

    def force(self, U: np.ndarray, r0=None) -> np.ndarray:
        """Teacher-forced state sequence, shape (T, chunks, res_dim).

        states[t] is the reservoir state after consuming U[0..t].
        """
        return force_sequence(self.embedding, self.layout, self.driver, U, r0)

    def forecast(self, r0, n_steps: int) -> np.ndarray:
        """Autonomous rollout of n_steps predictions starting from state r0.

        Raises NonFiniteState carrying the finite prefix if the closed loop
        blows up; predictions[t] is emitted before the state is advanced
        with it, so the first row is read directly from r0.
        """
        r = as_state_array(r0, self.chunks, self.res_dim)
        preds = np.empty((n_steps, self.data_dim))
        for t in range(n_steps):
            y = self.readout.read(r)
            if not np.all(np.isfinite(y)):
                raise NonFiniteState(t, preds[:t].copy())
            preds[t] = y
            if t + 1 < n_steps:
                r = self.advance(r, y)
        return preds

    def forecast_from_ic(self, spinup_data: np.ndarray, n_steps: int) -> np.ndarray:
        """Synchronize on ground-truth data from a zero state, then roll out."""
        states = self.force(np.asarray(spinup_data, dtype=np.float64))
        return self.forecast(states[-1], n_steps)

    # checkpoint hooks used by core.save_model / core.load_model
    def _to_state(self):
        embed_kind, arrays = _embedding_state(self.embedding)
        hyper = {
            "data_dim": self.data_dim,
            "res_dim": self.res_dim,
            "chunks": self.chunks,
            "locality": self.layout.locality,
            "embedding": embed_kind,
            "input_scaling": getattr(self.embedding, "scaling", 1.0),
        }
        arrays["readout_weights"] = self.readout.weights
        if isinstance(self.driver, LeakyEsnDriver):
            hyper.update(
                driver="leaky",
                leak_rate=self.driver.leak_rate,
                spectral_radius=self.driver.target_radius,
                bias=self.driver.bias_scale,
            )
            arrays["bias"] = self.driver.bias
            arrays.update(_sparse_arrays("w_r", self.driver.w_r))
        elif isinstance(self.driver, GruDriver):
            hyper["driver"] = "gru"
            for name in _GRU_FIELDS:
                arrays[f"gru_{name}"] = getattr(self.driver, name)
        else:
            raise TypeError(f"cannot serialize driver {type(self.driver).__name__}")
        return hyper, arrays

    @classmethod
    def _from_state(cls, hyper, arrays):
        layout = ChunkLayout(hyper["data_dim"], hyper["chunks"], hyper["locality"])
        embedding = _embedding_from_state(hyper["embedding"], hyper, arrays)
        if hyper["driver"] == "leaky":
            w_r = _sparse_from_arrays("w_r", arrays, hyper["chunks"], hyper["res_dim"])
            driver = LeakyEsnDriver(
                w_r, arrays["bias"], hyper["leak_rate"],
                hyper["spectral_radius"], hyper["bias"],
            )
        elif hyper["driver"] == "gru":
            driver = GruDriver(*(arrays[f"gru_{name}"] for name in _GRU_FIELDS))
            driver._chunks = hyper["chunks"]
        else:
            raise ValueError(f"unknown driver kind {hyper['driver']!r}")
        return cls(embedding, layout, driver, LinearReadout(arrays["readout_weights"]))


# --- continuous-time forecaster ---------------------------------------------


@register_model("cesn_forecaster")
class ContinuousEsnForecaster:
    """Continuous-time forecaster integrating a leaky-tanh rate ODE.

    Training drives the reservoir with a cubic Hermite interpolant of the
    input samples and fits the readout to reconstruct the input at the
    same instant. Prediction integrates the resulting autonomous
    closed-loop ODE, with the readout feeding the reservoir's own output
    back into the rate equation continuously.
    """

    is_continuous = True

    def __init__(self, embedding, layout: ChunkLayout, driver: ContinuousEsnDriver,
                 readout: LinearReadout, dt: float):
        if readout.out_dim != layout.data_dim:
            raise DimensionMismatch(
                f"readout dim {readout.out_dim} != data dim {layout.data_dim}"
            )
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.embedding = embedding
        self.layout = layout
        self.driver = driver
        self.readout = readout
        self.dt = float(dt)

    @classmethod
    def build(
        cls,
        data_dim: int,
        res_dim: int,
        dt: float,
        chunks: int = 1,
        locality: int = 0,
        time_const: float = 1.0,
        spectral_radius: float = 0.9,
        input_scaling: float = 0.1,
        bias: float = 1.0,
        seed: int = 0,
        embedding: str = "linear",
        solver: str = "dopri",
        rtol: float = 1e-6,
        atol: float = 1e-8,
        euler_step=None,
    ) -> "ContinuousEsnForecaster":
        emb, layout = _make_embedding(
            embedding, data_dim, res_dim, chunks, locality, input_scaling, seed
        )
        driver = ContinuousEsnDriver.build(
            res_dim, chunks, time_const, spectral_radius, bias, seed=seed,
            solver=solver, rtol=rtol, atol=atol, euler_step=euler_step,
        )
        readout = LinearReadout.zeros(data_dim, res_dim, chunks)
        return cls(emb, layout, driver, readout, dt)

    @property
    def chunks(self) -> int:
        return self.layout.chunks

    @property
    def res_dim(self) -> int:
        return self.driver.res_dim

    @property
    def data_dim(self) -> int:
        return self.layout.data_dim

    def with_readout(self, readout: LinearReadout) -> "ContinuousEsnForecaster":
        return type(self)(self.embedding, self.layout, self.driver, readout, self.dt)

    def zero_state(self) -> ReservoirState:
        return ReservoirState.zeros(self.chunks, self.res_dim)

    def force(self, U: np.ndarray, r0=None, ts=None) -> np.ndarray:
        """Drive the reservoir ODE with interpolated samples U at times ts.

        states[t] is the reservoir state at ts[t]; states[0] is r0.
        """
        U = np.asarray(U, dtype=np.float64)
        if U.ndim != 2 or U.shape[1] != self.data_dim:
            raise DimensionMismatch(f"expected (T, {self.data_dim}), got {U.shape}")
        if ts is None:
            ts = self.dt * np.arange(U.shape[0])
        ts = np.asarray(ts, dtype=np.float64)
        if ts.shape != (U.shape[0],):
            raise DimensionMismatch("ts must have one entry per sample")
        r = (
            np.zeros((self.chunks, self.res_dim))
            if r0 is None
            else as_state_array(r0, self.chunks, self.res_dim)
        )
        interp = CubicHermiteInterpolant(ts, U)
        embedded = lambda t: self.embedding.embed(self.layout, interp(t))
        out = np.empty((U.shape[0], self.chunks, self.res_dim))
        out[0] = r
        out[1:] = self.driver.integrate(r, embedded, ts[0], ts[1:])
        return out

    def _feedback(self, r: np.ndarray) -> np.ndarray:
        return self.embedding.embed(self.layout, self.readout.read(r))

    def forecast_times(self, r0, ts) -> np.ndarray:
        """Closed-loop predictions at times ts (relative to the state r0).

        ts must be nondecreasing from 0; an entry at exactly 0 reads r0
        directly.
        """
        r = as_state_array(r0, self.chunks, self.res_dim)
        ts = np.asarray(ts, dtype=np.float64).reshape(-1)
        if ts.size == 0:
            return np.empty((0, self.data_dim))
        if ts[0] < 0 or np.any(np.diff(ts) <= 0):
            raise ValueError("ts must be strictly increasing and nonnegative")
        future = ts[ts > 0]
        preds = np.empty((ts.size, self.data_dim))
        n_now = ts.size - future.size
        if n_now:
            preds[:n_now] = self.readout.read(r)
        if future.size:
            states = self.driver.integrate_feedback(r, self._feedback, 0.0, future)
            preds[n_now:] = self.readout.read_sequence(states)
        if not np.all(np.isfinite(preds)):
            bad = int(np.nonzero(~np.all(np.isfinite(preds), axis=1))[0][0])
            raise NonFiniteState(bad, preds[:bad].copy())
        return preds

    def forecast(self, r0, n_steps: int) -> np.ndarray:
        """Closed-loop rollout; step t is the prediction dt * (t + 1) ahead."""
        return self.forecast_times(r0, self.dt * np.arange(1, n_steps + 1))

    def forecast_from_ic(self, spinup_data: np.ndarray, n_steps: int, ts=None) -> np.ndarray:
        states = self.force(np.asarray(spinup_data, dtype=np.float64), ts=ts)
        return self.forecast(states[-1], n_steps)

    def _to_state(self):
        embed_kind, arrays = _embedding_state(self.embedding)
        hyper = {
            "data_dim": self.data_dim,
            "res_dim": self.res_dim,
            "chunks": self.chunks,
            "locality": self.layout.locality,
            "embedding": embed_kind,
            "input_scaling": getattr(self.embedding, "scaling", 1.0),
            "dt": self.dt,
            "time_const": self.driver.time_const,
            "spectral_radius": self.driver.target_radius,
            "bias": self.driver.bias_scale,
            "solver": self.driver.solver,
            "rtol": self.driver.rtol,
            "atol": self.driver.atol,
            "euler_step": self.driver.euler_step,
        }
        arrays["readout_weights"] = self.readout.weights
        arrays["bias"] = self.driver.bias
        arrays.update(_sparse_arrays("w_r", self.driver.w_r))
        return hyper, arrays

    @classmethod
    def _from_state(cls, hyper, arrays):
        layout = ChunkLayout(hyper["data_dim"], hyper["chunks"], hyper["locality"])
        embedding = _embedding_from_state(hyper["embedding"], hyper, arrays)
        w_r = _sparse_from_arrays("w_r", arrays, hyper["chunks"], hyper["res_dim"])
        driver = ContinuousEsnDriver(
            w_r, arrays["bias"], hyper["time_const"],
            hyper["spectral_radius"], hyper["bias"],
            solver=hyper["solver"], rtol=hyper["rtol"], atol=hyper["atol"],
            euler_step=hyper["euler_step"],
        )
        return cls(embedding, layout, driver, LinearReadout(arrays["readout_weights"]),
                   hyper["dt"])


# --- module-level helpers ----------------------------------------------------


def forecast(model, r0, n_steps: int) -> np.ndarray:
    """Autonomous rollout of n_steps predictions from reservoir state r0."""
    return model.forecast(r0, n_steps)


def forecast_from_ic(model, spinup_data, n_steps: int, **kwargs) -> np.ndarray:
    """Synchronize the reservoir on ground truth, then roll out n_steps."""
    return model.forecast_from_ic(spinup_data, n_steps, **kwargs)


def forecast_continuous(model, ts, r0) -> np.ndarray:
    """Continuous closed-loop predictions at the requested times."""
    return model.forecast_times(r0, ts)


def nrmse(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Per-step prediction error normalized by the RMS magnitude of the truth."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise DimensionMismatch(f"shape mismatch: {pred.shape} vs {truth.shape}")
    scale = np.sqrt(np.mean(np.sum(truth**2, axis=1)))
    if scale == 0:
        raise ValueError("truth has zero RMS magnitude")
    return np.linalg.norm(pred - truth, axis=1) / scale


def valid_time(pred, truth, dt: float, lyap: float,
               threshold: float = DEFAULT_THRESHOLD) -> float:
    """Duration, in Lyapunov times, before the normalized error first exceeds
    the threshold.

    Returns lyap * dt * T if the error stays below the threshold for the whole
    comparison window.
    """
    err = nrmse(pred, truth)
    bad = np.nonzero(err > threshold)[0]
    steps = int(bad[0]) if bad.size else err.size
    return lyap * dt * steps
