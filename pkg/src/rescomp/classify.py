"""Sequence classification with a reservoir feature extractor."""

from __future__ import annotations

import numpy as np

from .core import register_model, seeded_rng
from .driver import GruDriver, LeakyEsnDriver
from .embed import ChunkLayout
from .errors import DimensionMismatch, TooShort
from .forecast import _embedding_from_state, _embedding_state, _make_embedding
from .forecast import _GRU_FIELDS, _sparse_arrays, _sparse_from_arrays
from .forecast import force_sequence
from .readout import LinearReadout

STATE_REPRS = ("final", "mean")


def softmax(logits: np.ndarray) -> np.ndarray:
    """Overflow-safe softmax (max-subtracted)."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@register_model("esn_classifier")
class EsnClassifier:
    """Single-reservoir classifier: force a sequence, summarize states,
    score classes with a linear readout plus softmax.

    `state_repr` chooses the summary: "final" keeps the last reservoir
    state, "mean" averages states after an optional spinup.
    """

    is_continuous = False

    def __init__(self, embedding, layout: ChunkLayout, driver,
                 readout: LinearReadout, state_repr: str = "final"):
        if layout.chunks != 1:
            raise DimensionMismatch("classification uses a single reservoir")
        if readout.out_dim < 2:
            raise ValueError("need at least two classes")
        if state_repr not in STATE_REPRS:
            raise ValueError(f"state_repr must be one of {STATE_REPRS}")
        self.embedding = embedding
        self.layout = layout
        self.driver = driver
        self.readout = readout
        self.state_repr = state_repr

    @classmethod
    def build(
        cls,
        data_dim: int,
        n_classes: int,
        res_dim: int,
        leak_rate: float = 1.0,
        spectral_radius: float = 0.9,
        input_scaling: float = 0.1,
        bias: float = 1.0,
        seed: int = 0,
        state_repr: str = "final",
        embedding: str = "linear",
        driver: str = "leaky",
    ) -> "EsnClassifier":
        emb, layout = _make_embedding(embedding, data_dim, res_dim, 1, 0,
                                      input_scaling, seed)
        if driver == "leaky":
            drv = LeakyEsnDriver.build(res_dim, 1, leak_rate, spectral_radius,
                                       bias, seed=seed)
        elif driver == "gru":
            drv = GruDriver.build(res_dim, seed=seed)
        else:
            raise ValueError(f"unknown driver kind {driver!r}")
        return cls(emb, layout, drv, LinearReadout.zeros(n_classes, res_dim),
                   state_repr)

    @property
    def res_dim(self) -> int:
        return self.driver.res_dim

    @property
    def data_dim(self) -> int:
        return self.layout.data_dim

    @property
    def n_classes(self) -> int:
        return self.readout.out_dim

    def with_readout(self, readout: LinearReadout) -> "EsnClassifier":
        return type(self)(self.embedding, self.layout, self.driver, readout,
                          self.state_repr)

    def force(self, U: np.ndarray, r0=None) -> np.ndarray:
        return force_sequence(self.embedding, self.layout, self.driver, U, r0)

    def features(self, seq: np.ndarray, r0=None, spinup: int = 0,
                 state_repr=None) -> np.ndarray:
        """Summarize one (T, data_dim) sequence into a (res_dim,) feature vector."""
        repr_ = self.state_repr if state_repr is None else state_repr
        if repr_ not in STATE_REPRS:
            raise ValueError(f"state_repr must be one of {STATE_REPRS}")
        states = self.force(np.asarray(seq, dtype=np.float64), r0=r0)
        if repr_ == "final":
            return states[-1, 0]
        if spinup >= states.shape[0]:
            raise TooShort(
                f"spinup {spinup} >= sequence length {states.shape[0]}"
            )
        return states[spinup:, 0].mean(axis=0)

    def classify(self, seq: np.ndarray, r0=None, spinup: int = 0) -> np.ndarray:
        """Class probabilities for one sequence (softmax over readout logits)."""
        feat = self.features(seq, r0=r0, spinup=spinup)
        logits = self.readout.weights[0] @ feat
        return softmax(logits)

    def _to_state(self):
        embed_kind, arrays = _embedding_state(self.embedding)
        hyper = {
            "data_dim": self.data_dim,
            "res_dim": self.res_dim,
            "n_classes": self.n_classes,
            "embedding": embed_kind,
            "input_scaling": getattr(self.embedding, "scaling", 1.0),
            "state_repr": self.state_repr,
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
        layout = ChunkLayout(hyper["data_dim"], 1, 0)
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
                   LinearReadout(arrays["readout_weights"]), hyper["state_repr"])


def sinusoid_dataset(
    n_per_class: int,
    n_classes: int = 3,
    data_dim: int = 3,
    seq_len: int = 200,
    noise: float = 0.05,
    seed: int = 0,
):
    """Synthetic multi-frequency sinusoid classification task.

    Class k is sin(0.5 (k+1) t m) on channel m = 1..data_dim over
    t in [0, 4 pi], plus i.i.d. Gaussian noise. Returns (seqs, labels)
    with seqs of shape (n_classes * n_per_class, seq_len, data_dim).
    """
    rng = seeded_rng(seed, 7)
    t = np.linspace(0.0, 4.0 * np.pi, seq_len).reshape(-1, 1)
    channels = np.arange(1, data_dim + 1)
    seqs = np.empty((n_classes * n_per_class, seq_len, data_dim))
    labels = np.empty(n_classes * n_per_class, dtype=np.int64)
    i = 0
    for class_idx in range(n_classes):
        freq = 0.5 * (class_idx + 1)
        base = np.sin(freq * t * channels)
        for _ in range(n_per_class):
            seqs[i] = base + noise * rng.standard_normal((seq_len, data_dim))
            labels[i] = class_idx
            i += 1
    return seqs, labels


def accuracy(model: EsnClassifier, seqs, labels, spinup: int = 0) -> float:
    """Fraction of sequences whose argmax class matches the label."""
    labels = np.asarray(labels)
    preds = np.array([
        int(np.argmax(model.classify(s, spinup=spinup))) for s in seqs
    ])
    return float(np.mean(preds == labels))
