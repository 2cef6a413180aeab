"""Linear readout from reservoir states, block-structured across chunks."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch


class LinearReadout:
    """Per-chunk linear map (out_chunk_dim x res_dim), zero-initialized.

    The full output is the concatenation of the chunk outputs in layout
    order, so across chunks the readout acts block-diagonally.
    """

    def __init__(self, weights: np.ndarray):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 3:
            raise DimensionMismatch("weights must be (chunks, out_chunk_dim, res_dim)")
        self.weights = weights

    @classmethod
    def zeros(cls, out_dim: int, res_dim: int, chunks: int = 1) -> "LinearReadout":
        if out_dim % chunks != 0:
            raise DimensionMismatch(
                f"chunks={chunks} does not divide out_dim={out_dim}"
            )
        return cls(np.zeros((chunks, out_dim // chunks, res_dim)))

    @property
    def chunks(self) -> int:
        return self.weights.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0] * self.weights.shape[1]

    @property
    def res_dim(self) -> int:
        return self.weights.shape[2]

    def read(self, states: np.ndarray) -> np.ndarray:
        """Map a (chunks, res_dim) state to the concatenated (out_dim,) output."""
        states = np.asarray(states, dtype=np.float64)
        if states.shape != (self.chunks, self.res_dim):
            raise DimensionMismatch(
                f"expected ({self.chunks}, {self.res_dim}), got {states.shape}"
            )
        return np.einsum("cor,cr->co", self.weights, states).reshape(-1)

    def read_sequence(self, states: np.ndarray) -> np.ndarray:
        """Map (T, chunks, res_dim) states to (T, out_dim) outputs."""
        T = states.shape[0]
        out = np.empty((T, self.chunks, self.weights.shape[1]))
        for c in range(self.chunks):
            out[:, c, :] = states[:, c, :] @ self.weights[c].T
        return out.reshape(T, -1)

    def with_weights(self, weights: np.ndarray) -> "LinearReadout":
        return LinearReadout(weights)
