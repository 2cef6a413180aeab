import numpy as np
import pytest

from rescomp.classify import EsnClassifier, accuracy, sinusoid_dataset, softmax
from rescomp.core import load_model, save_model
from rescomp.errors import TooShort
from rescomp.train import train_classifier


def test_softmax_sums_to_one_and_is_shift_invariant():
    logits = np.array([1.0, -2.0, 0.5])
    p = softmax(logits)
    assert p.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(p, softmax(logits + 100.0), atol=1e-12)
    assert np.all(p > 0)


def test_softmax_handles_large_logits():
    p = softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(p))
    assert p[0] == pytest.approx(1.0)


def test_sinusoid_dataset_shapes_and_determinism():
    seqs, labels = sinusoid_dataset(5, n_classes=3, seq_len=100, seed=7)
    assert seqs.shape == (15, 100, 3)
    np.testing.assert_array_equal(labels, np.repeat([0, 1, 2], 5))
    seqs2, _ = sinusoid_dataset(5, n_classes=3, seq_len=100, seed=7)
    np.testing.assert_array_equal(seqs, seqs2)


def test_features_final_vs_mean():
    model = EsnClassifier.build(3, 3, 40, seed=0)
    seq = sinusoid_dataset(1, seed=0)[0][0]
    states = model.force(seq)
    np.testing.assert_allclose(
        model.features(seq, state_repr="final"), states[-1, 0], atol=1e-12
    )
    np.testing.assert_allclose(
        model.features(seq, spinup=10, state_repr="mean"),
        states[10:, 0].mean(axis=0),
        atol=1e-12,
    )


def test_features_spinup_too_long():
    model = EsnClassifier.build(3, 3, 20, seed=0)
    seq = np.zeros((30, 3))
    with pytest.raises(TooShort):
        model.features(seq, spinup=30, state_repr="mean")


def test_classifier_probabilities_valid_and_accuracy_high():
    seqs, labels = sinusoid_dataset(10, seed=0)
    model = EsnClassifier.build(3, 3, 200, seed=42)
    model = train_classifier(model, seqs, labels, beta=1e-6)
    test_seqs, test_labels = sinusoid_dataset(5, seed=3)
    p = model.classify(test_seqs[0])
    assert p.shape == (3,)
    assert p.sum() == pytest.approx(1.0)
    assert accuracy(model, test_seqs, test_labels) >= 0.9


def test_classifier_mean_mode_round_trips(tmp_path):
    seqs, labels = sinusoid_dataset(6, seed=0)
    model = EsnClassifier.build(3, 3, 100, seed=1, state_repr="mean")
    model = train_classifier(model, seqs, labels, spinup=20)
    path = tmp_path / "clf.bin"
    save_model(model, path)
    back = load_model(path)
    assert back.state_repr == "mean"
    np.testing.assert_array_equal(
        model.classify(seqs[0], spinup=20), back.classify(seqs[0], spinup=20)
    )


def test_classifier_rejects_bad_state_repr():
    with pytest.raises(ValueError):
        EsnClassifier.build(3, 3, 20, state_repr="median")
