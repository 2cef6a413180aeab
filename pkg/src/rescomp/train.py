"""Teacher forcing and ridge-regression training for all model heads."""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import TimeSeries
from .errors import DimensionMismatch, SingularSystem, TooShort

DEFAULT_BETA = 1e-7
DEFAULT_SPINUP = 200


@dataclass(frozen=True)
class RidgeConfig:
    beta: float = DEFAULT_BETA
    spinup: int = DEFAULT_SPINUP

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.spinup < 0:
            raise ValueError("spinup must be nonnegative")


def worker_count(n_tasks: int) -> int:
    """Number of worker threads for independent per-chunk solves.

    Defaults to 1; RESCOMP_THREADS overrides.
    """
    env = os.environ.get("RESCOMP_THREADS")
    n = int(env) if env else 1
    return max(1, min(n, n_tasks))


def ridge_regression(X: np.ndarray, Y: np.ndarray, beta: float) -> np.ndarray:
    """Solve min_W ||X W^T - Y||_F^2 + beta ||W||_F^2, returning W of shape (G, F).

    Solved through the normal equations with a Cholesky factorization of
    (X^T X + beta I); a symmetric eigendecomposition solve is the fallback
    when the factorization fails near semidefiniteness.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"incompatible shapes {X.shape} and {Y.shape}")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    gram = X.T @ X
    gram[np.diag_indices_from(gram)] += beta
    rhs = X.T @ Y  # (F, G)
    if beta == 0.0 and np.linalg.matrix_rank(X) < X.shape[1]:
        raise SingularSystem("X^T X is rank-deficient and beta = 0")
    try:
        cho = scipy.linalg.cho_factor(gram, lower=True)
        sol = scipy.linalg.cho_solve(cho, rhs)
    except np.linalg.LinAlgError:
        raise SingularSystem("Cholesky failed with beta = 0")
    except scipy.linalg.LinAlgError:
        if beta == 0.0:
            raise SingularSystem("Cholesky failed with beta = 0")
        eigvals, eigvecs = np.linalg.eigh(gram)
        eigvals = np.maximum(eigvals, np.finfo(np.float64).eps * eigvals.max())
        sol = eigvecs @ ((eigvecs.T @ rhs) / eigvals[:, None])
    return sol.T


def _as_values(seq) -> np.ndarray:
    if isinstance(seq, TimeSeries):
        return seq.values
    return np.asarray(seq, dtype=np.float64)


def force(model, input_seq, r0=None, **kwargs) -> np.ndarray:
    """Teacher-force a model with ground-truth inputs.

    Returns the (T, chunks, res_dim) state sequence; states[t] is the state
    after consuming inputs 0..t. Keyword arguments (e.g. `ts` for
    continuous models) are forwarded to the model's own force method.
    """
    return model.force(_as_values(input_seq), r0=r0, **kwargs)


def _chunk_targets(layout, U: np.ndarray, c: int) -> np.ndarray:
    return U[:, layout.chunk_slice(c)]


def train_forecaster(model, train_seq, beta=DEFAULT_BETA, spinup=DEFAULT_SPINUP,
                     batch=None, **force_kwargs):
    """Fit the readout of a forecaster by teacher forcing plus ridge regression.

    The reservoir is forced with the full training sequence. Discrete
    models regress each state onto the next sample (one-step-ahead
    readout); continuous models regress onto the sample at the same
    instant (the readout reconstructs u(t), and prediction closes the
    loop through the ODE). `batch` bounds how many chunks are regressed
    at once (memory control only; results are identical).

    Returns (trained_model, forced_states).
    """
    U = _as_values(train_seq)
    continuous = getattr(model, "is_continuous", False)
    if isinstance(train_seq, TimeSeries) and train_seq.dt is not None and "ts" not in force_kwargs:
        if continuous:
            force_kwargs["ts"] = train_seq.times
    T = U.shape[0]
    if T < spinup + 2:
        raise TooShort(f"need at least spinup + 2 = {spinup + 2} samples, got {T}")
    states = model.force(U, **force_kwargs)
    layout = model.layout
    chunks = layout.chunks
    new_weights = np.empty_like(model.readout.weights)

    def solve(c):
        if continuous:
            X = states[spinup:, c, :]
            Y = _chunk_targets(layout, U[spinup:], c)
        else:
            X = states[spinup:-1, c, :]
            Y = _chunk_targets(layout, U[spinup + 1:], c)
        new_weights[c] = ridge_regression(X, Y, beta)

    batch = chunks if batch is None else max(1, int(batch))
    for start in range(0, chunks, batch):
        group = range(start, min(start + batch, chunks))
        n_workers = worker_count(len(group))
        if n_workers > 1:
            with ThreadPoolExecutor(n_workers) as pool:
                list(pool.map(solve, group))
        else:
            for c in group:
                solve(c)
    return model.with_readout(model.readout.with_weights(new_weights)), states


def train_classifier(model, train_seqs, labels, beta=1e-6, spinup=0, state_repr=None):
    """Fit a classifier readout from per-sequence features to one-hot labels."""
    labels = np.asarray(labels, dtype=np.int64)
    seqs = [_as_values(s) for s in train_seqs]
    if len(seqs) != labels.size:
        raise DimensionMismatch("number of sequences and labels differ")
    n_classes = model.n_classes
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError("labels out of range")
    counts = np.bincount(labels, minlength=n_classes)
    for k in np.nonzero(counts == 0)[0]:
        warnings.warn(f"class {k} has no training examples", UserWarning)
    feats = np.stack([model.features(s, spinup=spinup, state_repr=state_repr) for s in seqs])
    onehot = np.zeros((labels.size, n_classes))
    onehot[np.arange(labels.size), labels] = 1.0
    W = ridge_regression(feats, onehot, beta)
    return model.with_readout(model.readout.with_weights(W[None, :, :]))


def train_controller(model, output_seq, control_seq, beta=DEFAULT_BETA,
                     spinup=DEFAULT_SPINUP):
    """Fit a controller surrogate: embed [y_t ; u_t], predict y_{t+1}.

    output_seq and control_seq must be equal length and already aligned the
    way the surrogate will be rolled out (typically observed outputs paired
    with the controls applied one step later).
    """
    Y = _as_values(output_seq)
    U = _as_values(control_seq)
    if Y.shape[0] != U.shape[0]:
        raise DimensionMismatch(
            f"output and control lengths differ: {Y.shape[0]} vs {U.shape[0]}"
        )
    T = Y.shape[0]
    if T < spinup + 2:
        raise TooShort(f"need at least spinup + 2 = {spinup + 2} samples, got {T}")
    Z = np.concatenate([Y, U], axis=1)
    states = model.force(Z)
    X = states[spinup:-1, 0, :]
    targets = Y[spinup + 1:]
    W = ridge_regression(X, targets, beta)
    return model.with_readout(model.readout.with_weights(W[None, :, :])), states
