import numpy as np
import pytest

from rescomp.embed import (
    ChunkLayout,
    make_linear_embedding,
    make_mlp_embedding,
    window_input,
)
from rescomp.errors import IndivisibleChunks, LocalityTooLarge


def test_layout_validation():
    with pytest.raises(IndivisibleChunks):
        ChunkLayout(data_dim=10, chunks=3, locality=0)
    with pytest.raises(LocalityTooLarge):
        ChunkLayout(data_dim=8, chunks=4, locality=4)


def test_window_periodic_wraparound():
    layout = ChunkLayout(data_dim=8, chunks=4, locality=1)
    u = np.arange(8.0)
    win = window_input(layout, u)
    assert win.shape == (4, 4)
    # chunk 0 owns [0, 1] and sees one neighbor on each side, wrapping left
    np.testing.assert_array_equal(win[0], [7.0, 0.0, 1.0, 2.0])
    np.testing.assert_array_equal(win[3], [5.0, 6.0, 7.0, 0.0])


def test_window_no_locality_is_plain_split():
    layout = ChunkLayout(data_dim=6, chunks=3, locality=0)
    u = np.arange(6.0)
    win = window_input(layout, u)
    np.testing.assert_array_equal(win, u.reshape(3, 2))


def test_linear_embedding_matches_matrix_product():
    emb, layout = make_linear_embedding(6, 20, chunks=2, locality=1, scaling=0.3, seed=4)
    u = np.random.default_rng(0).standard_normal(6)
    out = emb.embed(layout, u)
    win = window_input(layout, u)
    for c in range(2):
        np.testing.assert_allclose(out[c], emb.weights[c] @ win[c], atol=1e-12)


def test_embed_sequence_equals_stepwise():
    emb, layout = make_linear_embedding(4, 15, chunks=2, locality=1, scaling=0.1, seed=1)
    U = np.random.default_rng(2).standard_normal((11, 4))
    seq = emb.embed_sequence(layout, U)
    for t in range(11):
        np.testing.assert_allclose(seq[t], emb.embed(layout, U[t]), atol=1e-12)


def test_embedding_scaling_is_linear():
    emb1, layout = make_linear_embedding(3, 10, scaling=0.1, seed=7)
    emb2, _ = make_linear_embedding(3, 10, scaling=0.2, seed=7)
    u = np.random.default_rng(1).standard_normal(3)
    np.testing.assert_allclose(
        2.0 * emb1.embed(layout, u), emb2.embed(layout, u), atol=1e-12
    )


def test_mlp_embedding_shapes_and_determinism():
    emb, layout = make_mlp_embedding(3, 16, seed=9)
    emb2, _ = make_mlp_embedding(3, 16, seed=9)
    u = np.random.default_rng(3).standard_normal(3)
    out = emb.embed(layout, u)
    assert out.shape == (1, 16)
    np.testing.assert_array_equal(out, emb2.embed(layout, u))
    U = np.random.default_rng(4).standard_normal((7, 3))
    seq = emb.embed_sequence(layout, U)
    for t in range(7):
        np.testing.assert_allclose(seq[t], emb.embed(layout, U[t]), atol=1e-12)
