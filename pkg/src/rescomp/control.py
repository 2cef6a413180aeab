"""Model-predictive control with a reservoir surrogate.

The surrogate embeds the concatenation [y ; u] of observed outputs and
control inputs, and its readout predicts the next output. A horizon cost
over candidate control sequences is minimized with BFGS using an exact
reverse-accumulation gradient, and a receding-horizon loop applies only
the first optimized control at each step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import as_state_array, register_model
from .driver import GruDriver, LeakyEsnDriver
from .embed import ChunkLayout, LinearEmbedding
from .errors import DimensionMismatch, LineSearchFailed
from .forecast import (
    _embedding_from_state,
    _embedding_state,
    _GRU_FIELDS,
    _make_embedding,
    _sparse_arrays,
    _sparse_from_arrays,
    force_sequence,
)
from .readout import LinearReadout
from scipy.special import expit


class TwoMassPlant:
    """Wall-coupled two-mass spring-damper, Euler-discretized.

    Wall ---[k1, c1]--- m1 ---[k2, c2]--- m2

    State is [x1, x2, v1, v2]; the control is a force on m1; the output
    is the position pair [x1, x2].
    """

    state_dim = 4
    output_dim = 2

    def __init__(self, m1=1.0, m2=1.0, k1=1.0, k2=1.0, c1=0.0, c2=0.0, dt=0.01):
        self.m1, self.m2 = float(m1), float(m2)
        self.k1, self.k2 = float(k1), float(k2)
        self.c1, self.c2 = float(c1), float(c2)
        self.dt = float(dt)
        a_cont = np.array([
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [-(k1 + k2) / m1, k2 / m1, -(c1 + c2) / m1, c2 / m1],
            [k2 / m2, -k2 / m2, c2 / m2, -c2 / m2],
        ])
        b_cont = np.array([0.0, 0.0, 1.0 / m1, 0.0])
        self.A = np.eye(4) + dt * a_cont
        self.B = dt * b_cont
        self.C = np.array([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ])

    def step(self, x: np.ndarray, u) -> tuple[np.ndarray, np.ndarray]:
        """One Euler step: returns (x', y) with x' = A x + B u, y = C x'."""
        x = np.asarray(x, dtype=np.float64).reshape(self.state_dim)
        u = float(np.asarray(u).reshape(()))
        x_next = self.A @ x + self.B * u
        return x_next, self.C @ x_next

    def observe(self, x: np.ndarray) -> np.ndarray:
        return self.C @ np.asarray(x, dtype=np.float64).reshape(self.state_dim)

    def simulate(self, u_seq: np.ndarray, x0=None) -> tuple[np.ndarray, np.ndarray]:
        """Roll the plant over a (T,) or (T, 1) control sequence.

        Returns (states, outputs) of shapes (T, 4) and (T, 2); states[t]
        is the state after applying u_seq[t].
        """
        u_seq = np.asarray(u_seq, dtype=np.float64).reshape(-1)
        x = np.zeros(self.state_dim) if x0 is None else np.asarray(x0, dtype=np.float64).reshape(self.state_dim)
        states = np.empty((u_seq.size, self.state_dim))
        outputs = np.empty((u_seq.size, self.output_dim))
        for t, u in enumerate(u_seq):
            x, y = self.step(x, u)
            states[t] = x
            outputs[t] = y
        return states, outputs


def appendix_plant() -> TwoMassPlant:
    """The damped demo plant used throughout the control examples."""
    return TwoMassPlant(m1=1.0, m2=1.0, k1=2.0, k2=1.0, c1=0.4, c2=0.4, dt=0.1)


@register_model("esn_controller")
class EsnController:
    """Reservoir surrogate mapping [y_t ; u_t] to the predicted next output."""

    is_continuous = False

    def __init__(self, embedding, layout: ChunkLayout, driver,
                 readout: LinearReadout, control_dim: int):
        if layout.chunks != 1:
            raise DimensionMismatch("controller surrogates use a single reservoir")
        if not 1 <= control_dim < layout.data_dim:
            raise DimensionMismatch(
                f"control_dim {control_dim} must be in [1, {layout.data_dim})"
            )
        if readout.out_dim != layout.data_dim - control_dim:
            raise DimensionMismatch(
                f"readout dim {readout.out_dim} != observed dim "
                f"{layout.data_dim - control_dim}"
            )
        self.embedding = embedding
        self.layout = layout
        self.driver = driver
        self.readout = readout
        self.control_dim = int(control_dim)

    @classmethod
    def build(
        cls,
        data_dim: int,
        control_dim: int,
        res_dim: int,
        leak_rate: float = 1.0,
        spectral_radius: float = 0.9,
        input_scaling: float = 0.1,
        bias: float = 1.0,
        seed: int = 0,
        driver: str = "leaky",
    ) -> "EsnController":
        emb, layout = _make_embedding(
            "linear", data_dim + control_dim, res_dim, 1, 0, input_scaling, seed
        )
        if driver == "leaky":
            drv = LeakyEsnDriver.build(res_dim, 1, leak_rate, spectral_radius,
                                       bias, seed=seed)
        elif driver == "gru":
            drv = GruDriver.build(res_dim, seed=seed)
        else:
            raise ValueError(f"unknown driver kind {driver!r}")
        return cls(emb, layout, drv, LinearReadout.zeros(data_dim, res_dim),
                   control_dim)

    @property
    def res_dim(self) -> int:
        return self.driver.res_dim

    @property
    def data_dim(self) -> int:
        return self.readout.out_dim

    @property
    def in_dim(self) -> int:
        return self.layout.data_dim

    def with_readout(self, readout: LinearReadout) -> "EsnController":
        return type(self)(self.embedding, self.layout, self.driver, readout,
                          self.control_dim)

    def force(self, Z: np.ndarray, r0=None) -> np.ndarray:
        """Teacher-force with already-concatenated (T, data_dim + control_dim) rows."""
        return force_sequence(self.embedding, self.layout, self.driver, Z, r0)

    def advance(self, r, y: np.ndarray, u: np.ndarray) -> np.ndarray:
        """One surrogate step driven by an observed output and applied control."""
        z = np.concatenate([np.ravel(y), np.ravel(u)])
        states = as_state_array(r, 1, self.res_dim)
        return self.driver.advance(states, self.embedding.embed(self.layout, z))

    def _to_state(self):
        embed_kind, arrays = _embedding_state(self.embedding)
        hyper = {
            "data_dim": self.data_dim,
            "control_dim": self.control_dim,
            "res_dim": self.res_dim,
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
        layout = ChunkLayout(hyper["data_dim"] + hyper["control_dim"], 1, 0)
        embedding = _embedding_from_state(hyper["embedding"], hyper, arrays)
        if hyper["driver"] == "leaky":
            w_r = _sparse_from_arrays("w_r", arrays, 1, hyper["res_dim"])
            driver = LeakyEsnDriver(
                w_r, arrays["bias"], hyper["leak_rate"],
                hyper["spectral_radius"], hyper["bias"],
            )
        else:
            driver = GruDriver(*(arrays[f"gru_{name}"] for name in _GRU_FIELDS))
        return cls(embedding, layout, driver,
                   LinearReadout(arrays["readout_weights"]), hyper["control_dim"])


@dataclass(frozen=True)
class MpcConfig:
    """Horizon cost weights and optimizer knobs.

    Cost: alpha1 ||y(u) - y_ref||^2 + alpha2 ||u||^2 + alpha3 ||du||^2.
    """

    horizon: int
    alpha1: float = 1.0
    alpha2: float = 1e-3
    alpha3: float = 1e-3
    max_iter: int = 100
    gtol: float = 1e-8

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if min(self.alpha1, self.alpha2, self.alpha3) < 0:
            raise ValueError("cost weights must be nonnegative")
        if self.max_iter < 1 or self.gtol <= 0:
            raise ValueError("max_iter must be >= 1 and gtol > 0")

    def with_horizon(self, horizon: int) -> "MpcConfig":
        return MpcConfig(horizon, self.alpha1, self.alpha2, self.alpha3,
                         self.max_iter, self.gtol)


def _check_mpc_args(model: EsnController, u_seq, r0, y_ref, cfg: MpcConfig):
    u_seq = np.asarray(u_seq, dtype=np.float64)
    y_ref = np.asarray(y_ref, dtype=np.float64)
    H = cfg.horizon
    if u_seq.shape != (H, model.control_dim):
        raise DimensionMismatch(
            f"u_seq must be ({H}, {model.control_dim}), got {u_seq.shape}"
        )
    if y_ref.shape != (H, model.data_dim):
        raise DimensionMismatch(
            f"y_ref must be ({H}, {model.data_dim}), got {y_ref.shape}"
        )
    r = as_state_array(r0, 1, model.res_dim)[0]
    return u_seq, r, y_ref


def _embed_matrix(model: EsnController) -> np.ndarray:
    if not isinstance(model.embedding, LinearEmbedding) or model.layout.locality != 0:
        raise TypeError("MPC requires a plain linear embedding")
    return model.embedding.weights[0]


def _rollout(model: EsnController, u_seq: np.ndarray, r: np.ndarray):
    """Surrogate rollout feeding back its own predictions.

    Returns (ys, rs, cache) where ys[k] is the prediction at horizon step
    k (ys[0] = read(r0)), rs[k] the state before step k's advance, and
    cache holds driver intermediates for the reverse pass.
    """
    H = u_seq.shape[0]
    d = model.data_dim
    w_e = _embed_matrix(model)
    w_o = model.readout.weights[0]
    drv = model.driver
    ys = np.empty((H + 1, d))
    rs = np.empty((H + 1, model.res_dim))
    cache = []
    rs[0] = r
    ys[0] = w_o @ r
    for k in range(H):
        z = np.concatenate([ys[k], u_seq[k]])
        emb = w_e @ z
        if isinstance(drv, LeakyEsnDriver):
            pre = drv.w_r[0].matvec(rs[k]) + emb + drv.bias[0]
            th = np.tanh(pre)
            rs[k + 1] = (1.0 - drv.leak_rate) * rs[k] + drv.leak_rate * th
            cache.append(th)
        elif isinstance(drv, GruDriver):
            zg = expit(drv.w_z @ emb + drv.u_z @ rs[k] + drv.b_z)
            sg = expit(drv.w_s @ emb + drv.u_s @ rs[k] + drv.b_s)
            hg = np.tanh(drv.w_h @ emb + drv.u_h @ (sg * rs[k]) + drv.b_h)
            rs[k + 1] = (1.0 - zg) * rs[k] + zg * hg
            cache.append((zg, sg, hg))
        else:
            raise TypeError(f"MPC does not support {type(drv).__name__}")
        ys[k + 1] = w_o @ rs[k + 1]
    return ys, rs, cache


def mpc_cost(model: EsnController, u_seq, r0, y_ref, cfg: MpcConfig) -> float:
    """Horizon tracking cost of a candidate control sequence."""
    u_seq, r, y_ref = _check_mpc_args(model, u_seq, r0, y_ref, cfg)
    ys, _, _ = _rollout(model, u_seq, r)
    track = np.sum((ys[1:] - y_ref) ** 2)
    effort = np.sum(u_seq**2)
    smooth = np.sum(np.diff(u_seq, axis=0) ** 2)
    return float(cfg.alpha1 * track + cfg.alpha2 * effort + cfg.alpha3 * smooth)


def mpc_gradient(model: EsnController, u_seq, r0, y_ref, cfg: MpcConfig) -> np.ndarray:
    """Exact gradient of mpc_cost w.r.t. u_seq by reverse accumulation."""
    u_seq, r, y_ref = _check_mpc_args(model, u_seq, r0, y_ref, cfg)
    ys, rs, cache = _rollout(model, u_seq, r)
    H = cfg.horizon
    d = model.data_dim
    w_e = _embed_matrix(model)
    w_o = model.readout.weights[0]
    drv = model.driver
    gu = 2.0 * cfg.alpha2 * u_seq
    du = np.diff(u_seq, axis=0)
    gu[1:] += 2.0 * cfg.alpha3 * du
    gu[:-1] -= 2.0 * cfg.alpha3 * du
    lam = w_o.T @ (2.0 * cfg.alpha1 * (ys[H] - y_ref[H - 1]))
    for k in range(H - 1, -1, -1):
        if isinstance(drv, LeakyEsnDriver):
            th = cache[k]
            d_pre = drv.leak_rate * (1.0 - th**2) * lam
            g_emb = d_pre
            lam_prev = (1.0 - drv.leak_rate) * lam + drv.w_r[0].rmatvec(d_pre)
        else:
            zg, sg, hg = cache[k]
            d_z = lam * (hg - rs[k])
            d_h = lam * zg
            lam_prev = lam * (1.0 - zg)
            d_ah = d_h * (1.0 - hg**2)
            d_sr = drv.u_h.T @ d_ah
            d_s = d_sr * rs[k]
            lam_prev = lam_prev + d_sr * sg
            d_as = d_s * sg * (1.0 - sg)
            d_az = d_z * zg * (1.0 - zg)
            lam_prev = lam_prev + drv.u_z.T @ d_az + drv.u_s.T @ d_as
            g_emb = drv.w_z.T @ d_az + drv.w_s.T @ d_as + drv.w_h.T @ d_ah
        gz = w_e.T @ g_emb
        gu[k] += gz[d:]
        a_y = gz[:d]
        if k >= 1:
            a_y = a_y + 2.0 * cfg.alpha1 * (ys[k] - y_ref[k - 1])
        lam = lam_prev + w_o.T @ a_y
    return gu


_ARMIJO_C1 = 1e-4
_MAX_BACKTRACKS = 60


def compute_control(model: EsnController, u_init, r0, y_ref, cfg: MpcConfig,
                    return_info: bool = False):
    """Minimize mpc_cost over the control sequence with dense BFGS.

    Uses an identity-initialized inverse-Hessian update and Armijo
    backtracking. If the line search stalls, the best iterate so far is
    returned and the info flag is set (a warning is emitted).
    """
    u_init, r, y_ref = _check_mpc_args(model, u_init, r0, y_ref, cfg)
    n = u_init.size
    shape = u_init.shape

    def fun(x):
        return mpc_cost(model, x.reshape(shape), r, y_ref, cfg)

    def grad(x):
        return mpc_gradient(model, x.reshape(shape), r, y_ref, cfg).ravel()

    x = u_init.ravel().copy()
    fx = fun(x)
    gx = grad(x)
    h_inv = np.eye(n)
    info = {"iterations": 0, "converged": False, "line_search_failed": False}
    for it in range(cfg.max_iter):
        if np.linalg.norm(gx) < cfg.gtol:
            info["converged"] = True
            break
        p = -h_inv @ gx
        slope = gx @ p
        if slope >= 0:  # stale curvature; fall back to steepest descent
            p = -gx
            slope = gx @ p
        alpha = 1.0
        for _ in range(_MAX_BACKTRACKS):
            f_new = fun(x + alpha * p)
            if f_new <= fx + _ARMIJO_C1 * alpha * slope:
                break
            alpha *= 0.5
        else:
            info["line_search_failed"] = True
            warnings.warn(
                f"{LineSearchFailed.__name__}: no Armijo step at iteration "
                f"{it}; returning best iterate",
                RuntimeWarning,
            )
            break
        x_new = x + alpha * p
        g_new = grad(x_new)
        s = x_new - x
        yv = g_new - gx
        sy = s @ yv
        if sy > 1e-12:
            rho = 1.0 / sy
            hy = h_inv @ yv
            h_inv = (
                h_inv
                - rho * (np.outer(s, hy) + np.outer(hy, s))
                + rho * (rho * (yv @ hy) + 1.0) * np.outer(s, s)
            )
        x, fx, gx = x_new, f_new, g_new
        info["iterations"] = it + 1
    result = x.reshape(shape)
    if return_info:
        info["cost"] = fx
        return result, info
    return result


def receding_horizon(model: EsnController, plant: TwoMassPlant, r0, y_ref_full,
                     steps: int, cfg: MpcConfig, x0=None, y0=None):
    """Closed-loop MPC: optimize, apply the first control, re-synchronize.

    At each step the horizon is truncated to the remaining reference. The
    reservoir is advanced with the previously observed output and the
    control about to be applied, matching the surrogate's training
    alignment. Returns (outputs, controls) of shapes (steps, data_dim)
    and (steps, control_dim).
    """
    y_ref_full = np.asarray(y_ref_full, dtype=np.float64)
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if y_ref_full.ndim != 2 or y_ref_full.shape[1] != model.data_dim:
        raise DimensionMismatch(
            f"y_ref_full must be (T, {model.data_dim}), got {y_ref_full.shape}"
        )
    if y_ref_full.shape[0] < steps:
        raise DimensionMismatch("reference must cover at least one row per step")
    r = as_state_array(r0, 1, model.res_dim)
    x = np.zeros(plant.state_dim) if x0 is None else np.asarray(x0, dtype=np.float64).reshape(plant.state_dim)
    y = plant.observe(x) if y0 is None else np.asarray(y0, dtype=np.float64).reshape(model.data_dim)
    outputs = np.empty((steps, model.data_dim))
    controls = np.empty((steps, model.control_dim))
    for i in range(steps):
        window = y_ref_full[i : i + cfg.horizon]
        step_cfg = cfg if window.shape[0] == cfg.horizon else cfg.with_horizon(window.shape[0])
        u_opt = compute_control(
            model, np.zeros((step_cfg.horizon, model.control_dim)), r, window, step_cfg
        )
        u0 = u_opt[0]
        r = model.advance(r, y, u0)
        x, y = plant.step(x, u0)
        outputs[i] = y
        controls[i] = u0
    return outputs, controls
