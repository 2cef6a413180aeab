"""Reservoir computing toolkit: forecasting, classification, and MPC control.

Models decompose into an embedding (input lift), a driver (reservoir
state update), and a trained linear readout. Hot state-update kernels
run through a compiled extension when available, with a NumPy/SciPy
fallback selected at import (see `rescomp.kernels`).
"""

from . import (
    classify,
    control,
    core,
    data,
    driver,
    embed,
    errors,
    forecast,
    kernels,
    odeint,
    readout,
    train,
)
from .classify import EsnClassifier
from .control import EsnController, MpcConfig, TwoMassPlant
from .core import (
    ReservoirState,
    SparseMatrix,
    TimeSeries,
    load_csv,
    load_model,
    save_csv,
    save_model,
    seeded_rng,
    spectral_radius,
)
from .forecast import ContinuousEsnForecaster, EsnForecaster, valid_time

__version__ = "0.1.0"

__all__ = [
    "classify",
    "control",
    "core",
    "data",
    "driver",
    "embed",
    "errors",
    "forecast",
    "kernels",
    "odeint",
    "readout",
    "train",
    "EsnClassifier",
    "EsnController",
    "MpcConfig",
    "TwoMassPlant",
    "ReservoirState",
    "SparseMatrix",
    "TimeSeries",
    "load_csv",
    "load_model",
    "save_csv",
    "save_model",
    "seeded_rng",
    "spectral_radius",
    "ContinuousEsnForecaster",
    "EsnForecaster",
    "valid_time",
    "__version__",
]
