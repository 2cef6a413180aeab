"""Benchmark data generation: chaotic ODE systems and the 1-D
Kuramoto-Sivashinsky PDE.

Parameter defaults follow the common literature values for each named
system; every parameter is overridable through the factory keyword
arguments. All trajectories are sampled on the uniform grid
t = dt, 2 dt, ..., floor(tN / dt) * dt.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import odeint
from .core import TimeSeries, seeded_rng
from .errors import SolverDiverged, UnknownSystem

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12

_LYAPUNOV = {
    "lorenz63": 0.9,
    "ks_L48": 0.081,
}


@dataclass(frozen=True)
class OdeSystem:
    """A named autonomous ODE with a default initial condition."""

    name: str
    dim: int
    rhs: Callable[[float, np.ndarray], np.ndarray]
    u0: np.ndarray


def integrate_ode(
    sys: OdeSystem,
    tN: float,
    dt: float,
    u0=None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> TimeSeries:
    """Integrate a system with adaptive Dormand-Prince, sampled every dt.

    Returns floor(tN / dt) samples at t = dt, 2 dt, ...; the initial
    condition itself is not included.
    """
    if tN <= 0 or dt <= 0:
        raise ValueError("tN and dt must be positive")
    u0 = np.asarray(sys.u0 if u0 is None else u0, dtype=np.float64).reshape(-1)
    if u0.size != sys.dim:
        raise ValueError(f"{sys.name} needs a {sys.dim}-dimensional initial condition")
    n_steps = int(tN / dt)
    if n_steps < 1:
        raise ValueError("tN must cover at least one dt step")
    eval_times = dt * np.arange(1, n_steps + 1)
    values = odeint.integrate_dopri(sys.rhs, 0.0, u0, eval_times, rtol=rtol, atol=atol)
    return TimeSeries(values, dt=dt, t0=dt)


# --- system definitions ------------------------------------------------------


def lorenz63_system(rho=28.0, sigma=10.0, beta=8.0 / 3.0) -> OdeSystem:
    def rhs(t, u):
        u1, u2, u3 = u
        return np.array([
            sigma * (u2 - u1),
            u1 * (rho - u3) - u2,
            u1 * u2 - beta * u3,
        ])

    return OdeSystem("lorenz63", 3, rhs, np.array([-10.0, 1.0, 10.0]))


def rossler_system(a=0.1, b=0.1, c=14.0) -> OdeSystem:
    def rhs(t, u):
        u1, u2, u3 = u
        return np.array([-u2 - u3, u1 + a * u2, b + u3 * (u1 - c)])

    return OdeSystem("rossler", 3, rhs, np.array([1.0, 1.0, 1.0]))


def sakaraya_system(a=1.0, b=1.0, m=1.0) -> OdeSystem:
    def rhs(t, u):
        u1, u2, u3 = u
        return np.array([
            a * u1 + u2 + u2 * u3,
            -u1 * u3 + u2 * u3,
            -u3 - m * u1 * u2 + b,
        ])

    return OdeSystem("sakaraya", 3, rhs, np.array([-2.8976045, 3.8877978, 3.07465]))


def colpitts_system(alpha=5.0, gamma=0.0797, q=0.6898, eta=6.2723) -> OdeSystem:
    def rhs(t, u):
        u1, u2, u3 = u
        return np.array([
            alpha * u2,
            -gamma * (u1 + u3) - q * u2,
            eta * (u2 + 1.0 - np.exp(-u1)),
        ])

    return OdeSystem("colpitts", 3, rhs, np.array([1.0, -1.0, 1.0]))


def hyper_lorenz63_system(a=10.0, b=28.0, c=8.0 / 3.0, d=-1.0) -> OdeSystem:
    def rhs(t, u):
        u1, u2, u3, u4 = u
        return np.array([
            a * (u2 - u1) + u4,
            u1 * (b - u3) - u2,
            u1 * u2 - c * u3,
            d * u4 - u2 * u3,
        ])

    return OdeSystem("hyper_lorenz63", 4, rhs, np.array([-10.0, 6.0, 0.0, 10.0]))


def hyper_xu_system(a=10.0, b=40.0, c=2.5, d=2.0, e=16.0) -> OdeSystem:
    def rhs(t, u):
        u1, u2, u3, u4 = u
        return np.array([
            a * (u2 - u1) + u4,
            b * u1 + e * u1 * u3,
            -c * u3 - u1 * u2,
            u1 * u3 - d * u2,
        ])

    return OdeSystem("hyper_xu", 4, rhs, np.array([-2.0, -1.0, -2.0, -10.0]))


def double_pendulum_system(m1=1.0, m2=1.0, L1=1.0, L2=1.0, g=9.81,
                           damping=0.0) -> OdeSystem:
    """Planar double pendulum; state (theta1, omega1, theta2, omega2)."""

    def rhs(t, u):
        th1, om1, th2, om2 = u
        delta = th1 - th2
        sd, cd = np.sin(delta), np.cos(delta)
        m_tot = m1 + m2
        alpha = m1 + m2 * sd**2
        dom1 = (
            -sd * (m2 * L1 * om1**2 * cd + m2 * L2 * om2**2)
            - g * (m_tot * np.sin(th1) - m2 * np.sin(th2) * cd)
        ) / (L1 * alpha) - (damping * (om1 - om2) + damping * om1)
        dom2 = (
            sd * (m_tot * L1 * om1**2 + m2 * L2 * om2**2 * cd)
            + g * (m_tot * np.sin(th1) * cd - m_tot * np.sin(th2))
        ) / (L2 * alpha) - damping * (om2 - om1)
        return np.array([om1, dom1, om2, dom2])

    return OdeSystem(
        "double_pendulum", 4, rhs, np.array([np.pi / 4, -1.0, np.pi / 2, 1.0])
    )


def double_pendulum_energy(u, m1=1.0, m2=1.0, L1=1.0, L2=1.0, g=9.81) -> np.ndarray:
    """Total mechanical energy of double-pendulum states (..., 4)."""
    u = np.asarray(u, dtype=np.float64)
    th1, om1, th2, om2 = u[..., 0], u[..., 1], u[..., 2], u[..., 3]
    kinetic = (
        0.5 * (m1 + m2) * (L1 * om1) ** 2
        + 0.5 * m2 * (L2 * om2) ** 2
        + m2 * L1 * L2 * om1 * om2 * np.cos(th1 - th2)
    )
    potential = -(m1 + m2) * g * L1 * np.cos(th1) - m2 * g * L2 * np.cos(th2)
    return kinetic + potential


def lorenz96_system(N=10, F=8.0) -> OdeSystem:
    def rhs(t, u):
        return (np.roll(u, -1) - np.roll(u, 2)) * np.roll(u, 1) - u + F

    return OdeSystem("lorenz96", int(N), rhs, np.sin(np.arange(N)))


def harmonic_system(omega=1.0) -> OdeSystem:
    """Undamped oscillator used as a closed-form integrator check."""

    def rhs(t, u):
        return np.array([u[1], -(omega**2) * u[0]])

    return OdeSystem("harmonic", 2, rhs, np.array([1.0, 0.0]))


_SYSTEMS = {
    "lorenz63": lorenz63_system,
    "rossler": rossler_system,
    "sakaraya": sakaraya_system,
    "colpitts": colpitts_system,
    "hyper_lorenz63": hyper_lorenz63_system,
    "hyper_xu": hyper_xu_system,
    "double_pendulum": double_pendulum_system,
    "lorenz96": lorenz96_system,
    "harmonic": harmonic_system,
}


def make_system(name: str, **params) -> OdeSystem:
    """Look up a named system, applying parameter overrides."""
    if name not in _SYSTEMS:
        raise UnknownSystem(
            f"unknown system {name!r}; choose from {sorted(_SYSTEMS)}"
        )
    return _SYSTEMS[name](**params)


def system_names() -> list:
    return sorted(_SYSTEMS)


def lorenz63(tN, dt, u0=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, **params):
    return integrate_ode(lorenz63_system(**params), tN, dt, u0, rtol, atol)


def rossler(tN, dt, u0=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, **params):
    return integrate_ode(rossler_system(**params), tN, dt, u0, rtol, atol)


def sakaraya(tN, dt, u0=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, **params):
    return integrate_ode(sakaraya_system(**params), tN, dt, u0, rtol, atol)


def colpitts(tN, dt, u0=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, **params):
    return integrate_ode(colpitts_system(**params), tN, dt, u0, rtol, atol)


def hyper_lorenz63(tN, dt, u0=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, **params):
    return integrate_ode(hyper_lorenz63_system(**params), tN, dt, u0, rtol, atol)


def hyper_xu(tN, dt, u0=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, **params):
    return integrate_ode(hyper_xu_system(**params), tN, dt, u0, rtol, atol)


def double_pendulum(tN, dt, u0=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, **params):
    return integrate_ode(double_pendulum_system(**params), tN, dt, u0, rtol, atol)


def lorenz96(tN, dt, u0=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, **params):
    return integrate_ode(lorenz96_system(**params), tN, dt, u0, rtol, atol)


# --- Kuramoto-Sivashinsky ----------------------------------------------------


@dataclass(frozen=True)
class KsConfig:
    """Grid and horizon for the 1-D Kuramoto-Sivashinsky integration.

    The x grid has Nx points on the periodic domain [a, b); u0, when
    given, must live on that grid.
    """

    Nx: int = 128
    domain: tuple = (0.0, 48.0)
    dt: float = 0.25
    tN: float = 100.0
    u0: np.ndarray = None

    def __post_init__(self):
        a, b = self.domain
        if not b > a:
            raise ValueError("domain must satisfy b > a")
        if self.Nx < 8:
            raise ValueError("Nx must be at least 8")
        if self.dt <= 0 or self.tN <= 0:
            raise ValueError("dt and tN must be positive")
        if self.u0 is not None:
            u0 = np.asarray(self.u0, dtype=np.float64).reshape(-1)
            if u0.size != self.Nx:
                raise ValueError(f"u0 must have {self.Nx} entries, got {u0.size}")
            object.__setattr__(self, "u0", u0)

    @property
    def x(self) -> np.ndarray:
        a, b = self.domain
        return a + (b - a) * np.arange(self.Nx) / self.Nx


def ks_random_ic(Nx: int = 128, domain=(0.0, 48.0), seed: int = 3) -> np.ndarray:
    """Low-wavenumber sinusoid plus unit Gaussian noise."""
    cfg = KsConfig(Nx=Nx, domain=domain)
    rng = seeded_rng(seed, 11)
    return np.sin((3.0 / domain[1]) * np.pi * cfg.x) + rng.standard_normal(Nx)


def integrate_ks(cfg: KsConfig) -> TimeSeries:
    """Pseudo-spectral ETDRK4 integration of u_t = -u u_x - u_xx - u_xxxx.

    Returns floor(tN / dt) samples at t = dt, 2 dt, ... on the periodic
    grid. The phi-function coefficients use the Kassam-Trefethen contour
    trick (mean over a 16-point circle); the nonlinear term is dealiased
    with the 2/3 rule and the spatial-mean mode is pinned to zero, which
    the PDE conserves.
    """
    Nx, dt = cfg.Nx, cfg.dt
    a, b = cfg.domain
    u = np.zeros(Nx) if cfg.u0 is None else cfg.u0.copy()
    dx = (b - a) / Nx
    k = 2.0 * np.pi * np.fft.fftfreq(Nx, d=dx)
    lin = k**2 - k**4

    E1 = np.exp(lin * dt)
    E2 = np.exp(lin * dt / 2.0)
    M = 16
    r = np.exp(1j * np.pi * (np.arange(1, M + 1) - 0.5) / M)
    LR = dt * lin[:, None] + r[None, :]
    Q = dt * np.real(np.mean((np.exp(LR / 2.0) - 1.0) / LR, axis=1))
    f1 = dt * np.real(
        np.mean((-4.0 - LR + np.exp(LR) * (4.0 - 3.0 * LR + LR**2)) / LR**3, axis=1)
    )
    f2 = dt * np.real(np.mean((2.0 + LR + np.exp(LR) * (-2.0 + LR)) / LR**3, axis=1))
    f3 = dt * np.real(
        np.mean((-4.0 - 3.0 * LR - LR**2 + np.exp(LR) * (4.0 - LR)) / LR**3, axis=1)
    )

    cutoff = Nx // 3

    def nonlin(v_hat):
        v = np.real(np.fft.ifft(v_hat))
        n_hat = 1j * k * np.fft.fft(-0.5 * v**2)
        n_hat[cutoff : Nx - cutoff] = 0.0
        return n_hat

    n_steps = int(cfg.tN / dt)
    out = np.empty((n_steps, Nx))
    u_hat = np.fft.fft(u)
    for step in range(n_steps):
        nu = nonlin(u_hat)
        sa = E2 * u_hat + Q * nu
        sb = E2 * u_hat + Q * nonlin(sa)
        sc = E2 * sa + Q * (2.0 * nonlin(sb) - nu)
        u_hat = E1 * u_hat + f1 * nu + 2.0 * f2 * (nonlin(sa) + nonlin(sb)) + f3 * nonlin(sc)
        u_hat[0] = 0.0  # pin the conserved spatial mean
        u = np.real(np.fft.ifft(u_hat))
        if not np.all(np.isfinite(u)):
            raise SolverDiverged(f"KS integration diverged at step {step + 1}")
        out[step] = u
        u_hat = np.fft.fft(u)
    return TimeSeries(out, dt=dt, t0=dt)


def ks_1d(tN, u0=None, dt=0.25, domain=(0.0, 48.0), Nx=128) -> TimeSeries:
    """Convenience wrapper mirroring the ODE factories."""
    return integrate_ks(KsConfig(Nx=Nx, domain=domain, dt=dt, tN=tN, u0=u0))


def largest_lyapunov_reference(name: str) -> float:
    """Quoted largest Lyapunov exponent used for valid-time axis scaling."""
    if name not in _LYAPUNOV:
        raise UnknownSystem(
            f"no reference exponent for {name!r}; choose from {sorted(_LYAPUNOV)}"
        )
    return _LYAPUNOV[name]
