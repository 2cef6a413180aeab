"""Numeric containers, deterministic RNG, sparse matrices, and model I/O."""

from __future__ import annotations

import json
import struct
import warnings
import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import CorruptChecksum, DimensionMismatch, NonSquare, VersionMismatch

__all__ = [
    "TimeSeries",
    "ReservoirState",
    "SparseMatrix",
    "seeded_rng",
    "spectral_radius",
    "save_csv",
    "load_csv",
    "save_model",
    "load_model",
    "register_model",
]


@dataclass(frozen=True)
class TimeSeries:
    """A length-T sequence of D-dimensional samples with optional uniform timestamps.

    Attributes:
        values: (T, D) float array.
        dt: seconds per step, or None for unit-step sequences.
        t0: start time of the first sample.
    """

    values: np.ndarray
    dt: Optional[float] = None
    t0: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionMismatch(f"TimeSeries values must be (T, D), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("TimeSeries values must be finite")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        step = 1.0 if self.dt is None else self.dt
        return self.t0 + step * np.arange(len(self))


@dataclass(frozen=True)
class ReservoirState:
    """Per-chunk latent state, shape (chunks, res_dim)."""

    states: np.ndarray

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.states, dtype=np.float64))
        if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 1:
            raise DimensionMismatch(f"states must be (chunks, res_dim), got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("reservoir state must be finite")
        object.__setattr__(self, "states", s)

    @classmethod
    def zeros(cls, chunks: int, res_dim: int) -> "ReservoirState":
        return cls(np.zeros((chunks, res_dim)))


def as_state_array(r, chunks: int, res_dim: int) -> np.ndarray:
    """Normalize a ReservoirState or array to a (chunks, res_dim) float array."""
    s = r.states if isinstance(r, ReservoirState) else np.asarray(r, dtype=np.float64)
    s = np.atleast_2d(s)
    if s.shape != (chunks, res_dim):
        raise DimensionMismatch(
            f"expected reservoir state of shape ({chunks}, {res_dim}), got {s.shape}"
        )
    return s


def seeded_rng(seed: int, *tags: int) -> np.random.Generator:
    """Deterministic counter-based generator for a seed and substream tags.

    The same (seed, tags) combination always yields the same stream; distinct
    tags give statistically independent substreams, which is how one model
    seed fans out to embedding, reservoir, and bias draws.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, tags)])))


class SparseMatrix:
    """CSR sparse matrix with float64 values and int64 indices.

    Construction from triplets enforces sorted row-major order, in-range
    indices, no duplicates, and finite values.
    """

    __slots__ = ("shape", "indptr", "indices", "data", "_scipy", "_transpose")

    def __init__(self, shape, indptr, indices, data):
        self.shape = (int(shape[0]), int(shape[1]))
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self._scipy = None
        self._transpose = None

    @classmethod
    def from_triplets(cls, shape, rows, cols, values) -> "SparseMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        n_rows, n_cols = shape
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols:
                raise DimensionMismatch("triplet index out of range")
        if not np.all(np.isfinite(values)):
            raise ValueError("sparse values must be finite")
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        flat = rows * n_cols + cols
        if flat.size and np.any(np.diff(flat) == 0):
            raise ValueError("duplicate (row, col) entries")
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(shape, indptr, cols, values)

    @property
    def nnz(self) -> int:
        return int(self.data.size)

    def as_scipy(self):
        if self._scipy is None:
            from scipy.sparse import csr_matrix

            self._scipy = csr_matrix(
                (self.data, self.indices, self.indptr), shape=self.shape
            )
        return self._scipy

    def matvec(self, x: np.ndarray, out=None) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.shape[1],):
            raise DimensionMismatch(
                f"matvec expects ({self.shape[1]},), got {x.shape}"
            )
        return kernels.csr_matvec(self, x, out)

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        """Transpose mat-vec, x @ A, used by the MPC reverse pass."""
        return self.transpose().matvec(x)

    def transpose(self) -> "SparseMatrix":
        if self._transpose is None:
            sp = self.as_scipy().T.tocsr()
            self._transpose = SparseMatrix(
                (self.shape[1], self.shape[0]), sp.indptr, sp.indices, sp.data
            )
        return self._transpose

    def scale(self, factor: float) -> "SparseMatrix":
        return SparseMatrix(self.shape, self.indptr, self.indices, self.data * factor)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.shape)
        for i in range(self.shape[0]):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            dense[i, self.indices[lo:hi]] = self.data[lo:hi]
        return dense

    @classmethod
    def random_erdos(
        cls, n: int, avg_degree: float, rng: np.random.Generator
    ) -> "SparseMatrix":
        """Erdos-Renyi random n x n matrix, entries uniform on [-1, 1].

        Each entry is present independently with probability avg_degree / n.
        """
        p = min(1.0, avg_degree / n)
        row_nnz = rng.binomial(n, p, size=n)
        rows = np.repeat(np.arange(n), row_nnz)
        cols = np.concatenate(
            [rng.choice(n, size=k, replace=False) for k in row_nnz]
        ) if row_nnz.sum() else np.empty(0, dtype=np.int64)
        values = rng.uniform(-1.0, 1.0, size=rows.size)
        return cls.from_triplets((n, n), rows, cols, values)


class PowerIterationWarning(UserWarning):
    pass


def spectral_radius(
    m: SparseMatrix, tol: float = 1e-8, max_iter: int = 1000, rng=None
) -> float:
    """Magnitude of the dominant eigenvalue, by power iteration.

    Uses a two-vector Krylov fit so complex-conjugate dominant pairs (common
    for random reservoir matrices) converge as well as real ones. Warns and
    returns the best estimate if `max_iter` is exhausted.
    """
    if m.shape[0] != m.shape[1]:
        raise NonSquare(f"matrix is {m.shape}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if m.nnz == 0 or not np.any(m.data):
        return 0.0
    n = m.shape[0]
    if rng is None:
        rng = seeded_rng(0x5EED, n)
    u0 = rng.standard_normal(n)
    u0 /= np.linalg.norm(u0)
    u1 = m.matvec(u0)
    estimate = np.linalg.norm(u1)
    for _ in range(max_iter):
        s = np.linalg.norm(u1)
        if s == 0.0:
            return 0.0
        u2 = m.matvec(u1)
        # fit u2 = a*u1 + b*u0; |eigenvalue| from roots of x^2 - a x - b
        coeffs, *_ = np.linalg.lstsq(np.column_stack((u1, u0)), u2, rcond=None)
        a, b = coeffs
        roots = np.roots([1.0, -a, -b])
        new_estimate = float(np.max(np.abs(roots)))
        if abs(new_estimate - estimate) < tol:
            return new_estimate
        estimate = new_estimate
        u0 = u1 / s
        u1 = u2 / s
    warnings.warn(
        f"power iteration did not converge in {max_iter} iterations",
        PowerIterationWarning,
    )
    return estimate


# --- CSV interchange -------------------------------------------------------

def save_csv(ts: TimeSeries, path) -> None:
    """Write a TimeSeries as CSV with header t,x0,x1,... at full precision."""
    header = "t," + ",".join(f"x{i}" for i in range(ts.dim))
    table = np.column_stack([ts.times, ts.values])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")


def load_csv(path) -> TimeSeries:
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = table[:, 0]
    values = table[:, 1:]
    dt = None
    t0 = float(t[0]) if t.size else 0.0
    if t.size > 1:
        steps = np.diff(t)
        if np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            dt = float(steps[0])
    if dt is not None and dt == 1.0 and t0 == 0.0:
        dt = None  # unit-step sequence
    return TimeSeries(values, dt=dt, t0=t0)


# --- model checkpoints -----------------------------------------------------

_MAGIC = b"ORCM"
_VERSION = 1
_MODEL_REGISTRY: dict[str, type] = {}


def register_model(kind: str):
    """Class decorator registering a model type for load_model dispatch."""

    def wrap(cls):
        cls._model_kind = kind
        _MODEL_REGISTRY[kind] = cls
        return cls

    return wrap


def save_model(model, path) -> None:
    """Write a model checkpoint; round-trips are bit-exact on all weights."""
    kind = model._model_kind
    hyper, arrays = model._to_state()
    manifest = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype == np.float64:
            dtype = "f8"
        elif arr.dtype == np.int64:
            dtype = "i8"
        else:
            raise TypeError(f"unsupported checkpoint dtype {arr.dtype} for {name}")
        manifest.append({"name": name, "shape": list(arr.shape), "dtype": dtype})
        blobs.append(arr.tobytes())
    header = json.dumps({"kind": kind, "hyper": hyper, "arrays": manifest}).encode()
    body = bytearray()
    body += _MAGIC
    body += struct.pack("<IQ", _VERSION, len(header))
    body += header
    for blob in blobs:
        body += blob
    body += struct.pack("<I", zlib.crc32(bytes(body)))
    with open(path, "wb") as f:
        f.write(bytes(body))


def load_model(path):
    """Read a model checkpoint written by save_model."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 20 or raw[:4] != _MAGIC:
        raise CorruptChecksum("not a model checkpoint (bad magic)")
    stored_crc = struct.unpack("<I", raw[-4:])[0]
    if zlib.crc32(raw[:-4]) != stored_crc:
        raise CorruptChecksum("checksum mismatch")
    version, header_len = struct.unpack("<IQ", raw[4:16])
    if version > _VERSION:
        raise VersionMismatch(f"file version {version} > supported {_VERSION}")
    header = json.loads(raw[16 : 16 + header_len].decode())
    offset = 16 + header_len
    arrays = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        dtype = np.dtype(entry["dtype"])
        nbytes = int(np.prod(shape)) * dtype.itemsize
        arrays[entry["name"]] = np.frombuffer(
            raw[offset : offset + nbytes], dtype=dtype
        ).reshape(shape).copy()
        offset += nbytes
    kind = header["kind"]
    if kind not in _MODEL_REGISTRY:
        raise VersionMismatch(f"unknown model kind {kind!r}")
    return _MODEL_REGISTRY[kind]._from_state(header["hyper"], arrays)
