"""Reservoir state propagation: discrete leaky-tanh, GRU, and continuous-time."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import expit

from . import kernels, odeint
from .core import SparseMatrix, seeded_rng, spectral_radius
from .errors import DimensionMismatch, InterpolantOutOfRange

RESERVOIR_DOMAIN = 2
BIAS_DOMAIN = 3
GRU_DOMAIN = 5

DEFAULT_RESERVOIR_DEGREE = 3.0  # average in-degree of the sparse reservoir


def _build_reservoir(res_dim, chunks, target_radius, bias_scale, degree, seed):
    """Per-chunk sparse reservoir matrices rescaled to the target spectral radius."""
    w_r = []
    bias = np.empty((chunks, res_dim))
    for c in range(chunks):
        m = SparseMatrix.random_erdos(res_dim, degree, seeded_rng(seed, RESERVOIR_DOMAIN, c))
        radius = spectral_radius(m, tol=1e-10, max_iter=10000)
        if radius == 0.0:
            raise ValueError("reservoir matrix has zero spectral radius; increase res_dim or degree")
        w_r.append(m.scale(target_radius / radius))
        bias[c] = seeded_rng(seed, BIAS_DOMAIN, c).uniform(-bias_scale, bias_scale, size=res_dim)
    return w_r, bias


class LeakyEsnDriver:
    """Discrete leaky-tanh update r' = (1-a) r + a tanh(W_r r + u + b)."""

    def __init__(self, w_r, bias, leak_rate, target_radius, bias_scale):
        if not 0.0 <= leak_rate <= 1.0:
            raise ValueError("leak_rate must be in [0, 1]")
        self.w_r = list(w_r)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.leak_rate = float(leak_rate)
        self.target_radius = float(target_radius)
        self.bias_scale = float(bias_scale)

    @classmethod
    def build(
        cls,
        res_dim: int,
        chunks: int = 1,
        leak_rate: float = 1.0,
        spectral_radius: float = 0.9,
        bias: float = 1.0,
        degree: float = DEFAULT_RESERVOIR_DEGREE,
        seed: int = 0,
    ) -> "LeakyEsnDriver":
        w_r, bias_vec = _build_reservoir(res_dim, chunks, spectral_radius, bias, degree, seed)
        return cls(w_r, bias_vec, leak_rate, spectral_radius, bias)

    @property
    def chunks(self) -> int:
        return len(self.w_r)

    @property
    def res_dim(self) -> int:
        return self.w_r[0].shape[0]

    def advance(self, states: np.ndarray, embedded: np.ndarray) -> np.ndarray:
        """One step for all chunks; states and embedded are (chunks, res_dim)."""
        if states.shape != (self.chunks, self.res_dim) or embedded.shape != states.shape:
            raise DimensionMismatch(
                f"expected ({self.chunks}, {self.res_dim}) states/input, "
                f"got {states.shape} and {embedded.shape}"
            )
        out = np.empty_like(states)
        for c in range(self.chunks):
            kernels.leaky_advance(
                self.w_r[c], self.bias[c], self.leak_rate, states[c], embedded[c], out[c]
            )
        return out

    def force_states(self, r0: np.ndarray, pre_chunk: np.ndarray, out: np.ndarray, c: int):
        """Teacher-forced trajectory for chunk c; pre_chunk is (T, res_dim)."""
        kernels.leaky_force(self.w_r[c], self.bias[c], self.leak_rate, r0, pre_chunk, out)


class GruDriver:
    """Gated recurrent unit with fixed random weights, shared across chunks."""

    def __init__(self, w_z, u_z, b_z, w_s, u_s, b_s, w_h, u_h, b_h):
        self.w_z, self.u_z, self.b_z = w_z, u_z, b_z
        self.w_s, self.u_s, self.b_s = w_s, u_s, b_s
        self.w_h, self.u_h, self.b_h = w_h, u_h, b_h

    @classmethod
    def build(cls, res_dim: int, seed: int = 0, chunks: int = 1) -> "GruDriver":
        # torch-style uniform(-1/sqrt(n), 1/sqrt(n)) initialization
        bound = 1.0 / np.sqrt(res_dim)
        mats = []
        for tag in range(9):
            rng = seeded_rng(seed, GRU_DOMAIN, tag)
            shape = (res_dim, res_dim) if tag % 3 != 2 else (res_dim,)
            mats.append(rng.uniform(-bound, bound, size=shape))
        driver = cls(*mats)
        driver._chunks = chunks
        return driver

    _chunks = 1

    @property
    def chunks(self) -> int:
        return self._chunks

    @property
    def res_dim(self) -> int:
        return self.w_z.shape[0]

    def advance(self, states: np.ndarray, embedded: np.ndarray) -> np.ndarray:
        if states.shape != embedded.shape or states.shape[1] != self.res_dim:
            raise DimensionMismatch(
                f"expected matching (chunks, {self.res_dim}) arrays, "
                f"got {states.shape} and {embedded.shape}"
            )
        z = expit(embedded @ self.w_z.T + states @ self.u_z.T + self.b_z)
        s = expit(embedded @ self.w_s.T + states @ self.u_s.T + self.b_s)
        h = np.tanh(embedded @ self.w_h.T + (s * states) @ self.u_h.T + self.b_h)
        return (1.0 - z) * states + z * h


class CubicHermiteInterpolant:
    """Cubic Hermite interpolation with finite-difference (Catmull-Rom) tangents.

    Interior tangents are central differences; endpoint tangents are the
    one-sided differences of the first/last interval.
    """

    def __init__(self, ts: np.ndarray, values: np.ndarray):
        ts = np.asarray(ts, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if ts.ndim != 1 or ts.size != values.shape[0]:
            raise DimensionMismatch("ts and values lengths differ")
        if ts.size < 2:
            raise DimensionMismatch("interpolant needs at least two samples")
        slopes = np.empty_like(values)
        slopes[1:-1] = (values[2:] - values[:-2]) / (ts[2:] - ts[:-2])[:, None]
        slopes[0] = (values[1] - values[0]) / (ts[1] - ts[0])
        slopes[-1] = (values[-1] - values[-2]) / (ts[-1] - ts[-2])
        self._spline = CubicHermiteSpline(ts, values, slopes)
        self.t_min = float(ts[0])
        self.t_max = float(ts[-1])

    def __call__(self, t: float) -> np.ndarray:
        pad = 1e-9 * max(1.0, abs(self.t_max))
        if t < self.t_min - pad or t > self.t_max + pad:
            raise InterpolantOutOfRange(
                f"t={t} outside [{self.t_min}, {self.t_max}]"
            )
        return self._spline(min(max(t, self.t_min), self.t_max))


class ContinuousEsnDriver:
    """Reservoir evolving as dr/dt = tau * (-r + tanh(W_r r + u(t) + b)).

    Integration defaults to adaptive Dormand-Prince with PI step control;
    a fixed-step Euler method is selectable.
    """

    def __init__(
        self,
        w_r,
        bias,
        time_const,
        target_radius,
        bias_scale,
        solver: str = "dopri",
        rtol: float = 1e-6,
        atol: float = 1e-8,
        euler_step: float | None = None,
    ):
        if time_const <= 0:
            raise ValueError("time_const must be positive")
        if solver not in ("dopri", "euler"):
            raise ValueError(f"unknown solver {solver!r}")
        self.w_r = list(w_r)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.time_const = float(time_const)
        self.target_radius = float(target_radius)
        self.bias_scale = float(bias_scale)
        self.solver = solver
        self.rtol = float(rtol)
        self.atol = float(atol)
        self.euler_step = euler_step

    @classmethod
    def build(
        cls,
        res_dim: int,
        chunks: int = 1,
        time_const: float = 1.0,
        spectral_radius: float = 0.9,
        bias: float = 1.0,
        degree: float = DEFAULT_RESERVOIR_DEGREE,
        seed: int = 0,
        **kwargs,
    ) -> "ContinuousEsnDriver":
        w_r, bias_vec = _build_reservoir(res_dim, chunks, spectral_radius, bias, degree, seed)
        return cls(w_r, bias_vec, time_const, spectral_radius, bias, **kwargs)

    @property
    def chunks(self) -> int:
        return len(self.w_r)

    @property
    def res_dim(self) -> int:
        return self.w_r[0].shape[0]

    def _rhs(self, embedded_input):
        chunks, res_dim, tau = self.chunks, self.res_dim, self.time_const

        def rhs(t, r_flat):
            r = r_flat.reshape(chunks, res_dim)
            emb = embedded_input(t)
            pre = np.empty_like(r)
            for c in range(chunks):
                self.w_r[c].matvec(r[c], pre[c])
            pre += emb
            pre += self.bias
            return (tau * (-r + np.tanh(pre))).ravel()

        return rhs

    def integrate(self, r0: np.ndarray, embedded_input, t0: float, eval_times) -> np.ndarray:
        """States at eval_times, shape (len(eval_times), chunks, res_dim)."""
        eval_times = np.asarray(eval_times, dtype=np.float64)
        rhs = self._rhs(embedded_input)
        if self.solver == "euler":
            step = self.euler_step
            if step is None:
                spans = np.diff(np.concatenate([[t0], eval_times]))
                positive = spans[spans > 0]
                step = float(positive.min()) / 4 if positive.size else 1e-3
            flat = odeint.integrate_fixed(rhs, t0, r0.ravel(), eval_times, step, method="euler")
        else:
            flat = odeint.integrate_dopri(
                rhs, t0, r0.ravel(), eval_times, rtol=self.rtol, atol=self.atol
            )
        return flat.reshape(eval_times.size, self.chunks, self.res_dim)

    def integrate_feedback(self, r0: np.ndarray, feedback, t0: float,
                           eval_times) -> np.ndarray:
        """Closed-loop integration with a state-dependent drive.

        `feedback` maps the (chunks, res_dim) state to the embedded input
        used in the rate equation, coupling the reservoir to its own
        readout.
        """
        eval_times = np.asarray(eval_times, dtype=np.float64)
        chunks, res_dim, tau = self.chunks, self.res_dim, self.time_const

        def rhs(t, r_flat):
            r = r_flat.reshape(chunks, res_dim)
            pre = np.empty_like(r)
            for c in range(chunks):
                self.w_r[c].matvec(r[c], pre[c])
            pre += feedback(r)
            pre += self.bias
            return (tau * (-r + np.tanh(pre))).ravel()

        r0 = np.asarray(r0, dtype=np.float64)
        if self.solver == "euler":
            step = self.euler_step
            if step is None:
                spans = np.diff(np.concatenate([[t0], eval_times]))
                positive = spans[spans > 0]
                step = float(positive.min()) / 4 if positive.size else 1e-3
            flat = odeint.integrate_fixed(rhs, t0, r0.ravel(), eval_times, step, method="euler")
        else:
            flat = odeint.integrate_dopri(
                rhs, t0, r0.ravel(), eval_times, rtol=self.rtol, atol=self.atol
            )
        return flat.reshape(eval_times.size, chunks, res_dim)


def integrate_continuous(driver, r0, embedded_input, t_span, eval_times):
    """Integrate the continuous reservoir over t_span, sampling at eval_times."""
    eval_times = np.asarray(eval_times, dtype=np.float64)
    t0, t1 = t_span
    if eval_times.size and (eval_times[0] < t0 or eval_times[-1] > t1 + 1e-12):
        raise ValueError("eval_times must lie within t_span")
    if np.any(np.diff(eval_times) <= 0):
        raise ValueError("eval_times must be strictly increasing")
    return driver.integrate(np.asarray(r0, dtype=np.float64), embedded_input, t0, eval_times)
