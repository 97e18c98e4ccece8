import numpy as np
import pytest

from bfa_casestudy.quantize import QuantizedModel, quantize_layer


def test_quantize_round_trip_within_one_step():
    rng = np.random.default_rng(3)
    W = rng.normal(size=(12, 7))
    q, scale = quantize_layer(W)
    assert q.dtype == np.int8
    assert np.all(np.abs(q.astype(float) * scale - W) <= scale / 2 + 1e-12)


def test_quantize_zero_layer():
    q, scale = quantize_layer(np.zeros((3, 3)))
    assert np.all(q == 0) and scale == 1.0


def test_bit_accessor_matches_twos_complement(model):
    q = model.qweights[0]
    out, inp = 2, 5
    stored = int(q[out, inp]) & 0xFF
    bits = [model.bit(0, out, inp, b) for b in range(8)]
    assert sum(b << i for i, b in enumerate(bits)) == stored


def test_flip_bit_toggles_and_round_trips(model):
    before = model.qweights[1].copy()
    b0 = model.bit(1, 0, 3, 7)
    model.flip_bit(1, 0, 3, 7)
    assert model.bit(1, 0, 3, 7) == 1 - b0
    assert int(np.sum(model.qweights[1] != before)) == 1
    model.flip_bit(1, 0, 3, 7)
    assert np.array_equal(model.qweights[1], before)


def test_flip_changes_float_view_and_forward(model, dataset):
    X, y, _, _ = dataset
    loss0 = model.loss(X, y)
    w0 = model.weight(0).copy()
    model.flip_bit(0, 0, 0, 7)
    assert not np.allclose(model.weight(0), w0)
    assert model.loss(X, y) != loss0


def test_bit_position_validated(model):
    with pytest.raises(ValueError):
        model.bit(0, 0, 0, 8)
    with pytest.raises(ValueError):
        model.flip_bit(0, 0, 0, -1)


def test_copy_is_independent(model):
    clone = model.copy()
    assert clone.bits_equal(model)
    clone.flip_bit(0, 1, 1, 3)
    assert not clone.bits_equal(model)


def test_gradients_match_finite_differences(model, dataset):
    X, y, _, _ = dataset
    grads = model.weight_gradients(X[:50], y[:50])
    eps = 1e-5
    rng = np.random.default_rng(0)
    for layer in range(2):
        q = model.qweights[layer]
        out = int(rng.integers(q.shape[0]))
        inp = int(rng.integers(q.shape[1]))
        # nudge the float view through the scale
        saved = model.scales[layer]

        def loss_at(delta, layer=layer, out=out, inp=inp):
            W = [model.weight(0), model.weight(1)]
            W[layer][out, inp] += delta
            z1 = X[:50] @ W[0].T + model.biases[0]
            a1 = np.maximum(z1, 0.0)
            z2 = a1 @ W[1].T + model.biases[1]
            z2 = z2 - z2.max(axis=1, keepdims=True)
            p = np.exp(z2) / np.exp(z2).sum(axis=1, keepdims=True)
            return float(-np.mean(np.log(p[np.arange(50), y[:50]] + 1e-12)))

        fd = (loss_at(eps) - loss_at(-eps)) / (2 * eps)
        assert grads[layer][out, inp] == pytest.approx(fd, abs=1e-4)
        assert model.scales[layer] == saved
