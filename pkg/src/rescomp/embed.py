"""Input lifting: chunked windowing and fixed random embeddings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import seeded_rng
from .errors import DimensionMismatch, IndivisibleChunks, LocalityTooLarge

# substream tags for weight generation; one model seed fans out through these
EMBED_DOMAIN = 1
MLP_DOMAIN = 4


@dataclass(frozen=True)
class ChunkLayout:
    """Partition of a spatial signal into chunks with periodic overlap.

    Each chunk owns a contiguous segment of `chunk_size = data_dim / chunks`
    grid points and additionally sees `locality` neighboring points on each
    side, wrapping periodically at the domain boundary.
    """

    data_dim: int
    chunks: int = 1
    locality: int = 0
    _window_idx: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.chunks < 1 or self.data_dim < 1:
            raise DimensionMismatch("chunks and data_dim must be >= 1")
        if self.data_dim % self.chunks != 0:
            raise IndivisibleChunks(
                f"chunks={self.chunks} does not divide data_dim={self.data_dim}"
            )
        if self.locality < 0:
            raise LocalityTooLarge("locality must be >= 0")
        if self.window_dim > self.data_dim:
            raise LocalityTooLarge(
                f"window of {self.window_dim} exceeds data_dim={self.data_dim}"
            )
        starts = np.arange(self.chunks) * self.chunk_size - self.locality
        offsets = np.arange(self.window_dim)
        idx = (starts[:, None] + offsets[None, :]) % self.data_dim
        object.__setattr__(self, "_window_idx", idx)

    @property
    def chunk_size(self) -> int:
        return self.data_dim // self.chunks

    @property
    def window_dim(self) -> int:
        return self.chunk_size + 2 * self.locality

    def chunk_slice(self, c: int) -> slice:
        """Output (non-overlapped) segment owned by chunk c."""
        return slice(c * self.chunk_size, (c + 1) * self.chunk_size)


def window_input(layout: ChunkLayout, u: np.ndarray) -> np.ndarray:
    """Per-chunk input windows with periodic wraparound.

    Accepts a (data_dim,) vector or a (T, data_dim) sequence; returns
    (chunks, window_dim) or (T, chunks, window_dim) respectively.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape[-1] != layout.data_dim:
        raise DimensionMismatch(
            f"expected last axis {layout.data_dim}, got {u.shape[-1]}"
        )
    return u[..., layout._window_idx]


class LinearEmbedding:
    """Random linear lift, one weight matrix per chunk.

    Entries are i.i.d. uniform on [-scaling, scaling], drawn once from
    per-chunk substreams and never trained.
    """

    def __init__(self, weights: np.ndarray, scaling: float):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 3:
            raise DimensionMismatch("weights must be (chunks, res_dim, window_dim)")
        self.weights = weights
        self.scaling = float(scaling)

    @property
    def chunks(self) -> int:
        return self.weights.shape[0]

    @property
    def res_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def window_dim(self) -> int:
        return self.weights.shape[2]

    def embed(self, layout: ChunkLayout, u: np.ndarray) -> np.ndarray:
        """Lift one input vector to (chunks, res_dim)."""
        win = window_input(layout, u)
        return np.einsum("crw,cw->cr", self.weights, win)

    def embed_sequence(self, layout: ChunkLayout, U: np.ndarray) -> np.ndarray:
        """Lift a (T, data_dim) sequence to (T, chunks, res_dim)."""
        win = window_input(layout, U)  # (T, chunks, window_dim)
        out = np.empty((U.shape[0], self.chunks, self.res_dim))
        for c in range(self.chunks):
            out[:, c, :] = win[:, c, :] @ self.weights[c].T
        return out


def make_linear_embedding(
    in_dim: int,
    res_dim: int,
    chunks: int = 1,
    locality: int = 0,
    scaling: float = 1.0,
    seed: int = 0,
) -> tuple[LinearEmbedding, ChunkLayout]:
    """Build the random linear embedding and its chunk layout."""
    if scaling <= 0:
        raise ValueError("scaling must be positive")
    layout = ChunkLayout(in_dim, chunks, locality)
    weights = np.empty((chunks, res_dim, layout.window_dim))
    for c in range(chunks):
        rng = seeded_rng(seed, EMBED_DOMAIN, c)
        weights[c] = rng.uniform(-scaling, scaling, size=(res_dim, layout.window_dim))
    return LinearEmbedding(weights, scaling), layout


def _elu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


class MlpEmbedding:
    """Fixed two-layer ELU embedding (single chunk, weights never trained).

    Layer weights are standard normal scaled by 1/sqrt(fan_in * fan_out) and
    biases by 1/sqrt(dim), matching the usual random-feature normalization.
    """

    def __init__(self, w1, b1, w2, b2):
        self.w1 = np.asarray(w1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.w2 = np.asarray(w2, dtype=np.float64)
        self.b2 = np.asarray(b2, dtype=np.float64)

    chunks = 1

    @property
    def res_dim(self) -> int:
        return self.w2.shape[0]

    @property
    def window_dim(self) -> int:
        return self.w1.shape[1]

    def embed(self, layout: ChunkLayout, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.window_dim,):
            raise DimensionMismatch(f"expected ({self.window_dim},), got {u.shape}")
        h = _elu(self.w1 @ u + self.b1)
        return _elu(self.w2 @ h + self.b2)[None, :]

    def embed_sequence(self, layout: ChunkLayout, U: np.ndarray) -> np.ndarray:
        h = _elu(U @ self.w1.T + self.b1)
        return _elu(h @ self.w2.T + self.b2)[:, None, :]


def make_mlp_embedding(in_dim: int, res_dim: int, seed: int = 0) -> tuple[MlpEmbedding, ChunkLayout]:
    hidden = res_dim // 2
    rng_w1 = seeded_rng(seed, MLP_DOMAIN, 0)
    rng_w2 = seeded_rng(seed, MLP_DOMAIN, 1)
    rng_b1 = seeded_rng(seed, MLP_DOMAIN, 2)
    rng_b2 = seeded_rng(seed, MLP_DOMAIN, 3)
    w1 = rng_w1.standard_normal((hidden, in_dim)) / np.sqrt(hidden * in_dim)
    w2 = rng_w2.standard_normal((res_dim, hidden)) / np.sqrt(res_dim * hidden)
    b1 = rng_b1.standard_normal(hidden) / np.sqrt(hidden)
    b2 = rng_b2.standard_normal(res_dim) / np.sqrt(res_dim)
    return MlpEmbedding(w1, b1, w2, b2), ChunkLayout(in_dim, 1, 0)
