import numpy as np
import pytest

from qgan.cli import backprop_rel_error
from qgan.discriminator import (
    AdamState,
    Discriminator,
    adam_step,
    backward,
    bce_loss,
    forward,
    init_discriminator,
)
from qgan.errors import ShapeError

from helpers import random_discriminator


def test_init_shapes_and_biases(rng):
    d = init_discriminator(4, 50, rng)
    assert d.W1.shape == (50, 4) and d.b1.shape == (50,)
    assert d.W2.shape == (1, 50) and d.b2.shape == (1,)
    assert not d.b1.any() and not d.b2.any()
    limit = np.sqrt(6 / 54)
    assert np.all(np.abs(d.W1) <= limit)


def test_init_deterministic():
    a = init_discriminator(4, 50, np.random.default_rng(3))
    b = init_discriminator(4, 50, np.random.default_rng(3))
    for name in ("W1", "b1", "W2", "b2"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_forward_zero_weights():
    d = Discriminator(np.zeros((3, 2)), np.zeros(3), np.zeros((1, 3)), np.zeros(1))
    np.testing.assert_array_equal(forward(d, [[0, 1], [1, 1]]), [0.5, 0.5])


def test_forward_saturates():
    d = Discriminator(np.zeros((3, 2)), np.zeros(3), np.zeros((1, 3)), np.array([800.0]))
    assert forward(d, [1, 0]) == 1.0
    d.b2[0] = -800.0
    assert 0.0 <= forward(d, [1, 0]) < 1e-300


def test_forward_hand_computed():
    # hidden = relu([[1, -2], [0.5, 1]] @ [1, 1] + [0.5, -1]) = relu([-0.5, 0.5]) = [0, 0.5]
    # logit = [2, -3] @ [0, 0.5] + 0.25 = -1.25
    d = Discriminator(np.array([[1.0, -2.0], [0.5, 1.0]]), np.array([0.5, -1.0]),
                      np.array([[2.0, -3.0]]), np.array([0.25]))
    assert forward(d, [1.0, 1.0]) == pytest.approx(1 / (1 + np.exp(1.25)), abs=1e-12)


def test_forward_shape_error(rng):
    with pytest.raises(ShapeError):
        forward(init_discriminator(4, 5, rng), [1, 0, 1])


def test_bce_examples():
    labels = np.array([1, 1, 0, 0])
    assert bce_loss(labels.astype(float), labels) < 1e-6
    assert bce_loss(np.full(4, 0.5), labels) == pytest.approx(np.log(2), abs=1e-12)
    # one real/fake pair: -(log 0.8 + log(1 - 0.3)) / 2
    assert bce_loss([0.8, 0.3], [1, 0]) == pytest.approx(-(np.log(0.8) + np.log(0.7)) / 2, abs=1e-15)
    with pytest.raises(ShapeError):
        bce_loss([0.5, 0.5], [1])


def test_bce_permutation_invariant(rng):
    preds, labels = rng.uniform(size=101), rng.integers(0, 2, 101)
    for _ in range(5):
        perm = rng.permutation(101)
        assert bce_loss(preds, labels) == bce_loss(preds[perm], labels[perm])


def test_backprop_matches_finite_differences(rng):
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 5))
        d = random_discriminator(n, rng, hidden=int(rng.integers(2, 10)))
        x = rng.integers(0, 2, size=(8, n)).astype(float)
        labels = np.repeat([1.0, 0.0], 4)
        worst = max(worst, backprop_rel_error(d, x, labels))
    assert worst < 1e-5


def test_backprop_confident_predictions_have_small_gradients():
    d = Discriminator(np.array([[10.0, 0.0]]), np.array([0.0]), np.array([[40.0]]), np.array([-20.0]))
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    _, grads = backward(d, x, np.array([1.0, 0.0]))
    assert max(np.max(np.abs(g)) for g in grads.values()) < 1e-5


def test_backprop_duplicate_samples_double(rng):
    d = random_discriminator(3, rng)
    x = rng.integers(0, 2, size=(2, 3)).astype(float)
    y = np.array([1.0, 0.0])
    _, single = backward(d, x, y)
    _, double = backward(d, np.vstack([x, x]), np.concatenate([y, y]))
    # gradients of the summed loss: the mean over 2n samples times 2n
    for name in single:
        np.testing.assert_allclose(4 * double[name], 2 * (2 * single[name]), rtol=1e-12)


def test_adam_zero_gradient_no_move(rng):
    d = random_discriminator(2, rng)
    before = d.copy()
    adam_step(d, AdamState(), {k: np.zeros_like(v) for k, v in d.params().items()})
    for name, value in before.params().items():
        np.testing.assert_array_equal(getattr(d, name), value)


def test_adam_first_step_is_lr_times_sign(rng):
    d = random_discriminator(3, rng)
    before = d.copy()
    grads = {k: rng.normal(size=v.shape) for k, v in d.params().items()}
    state = AdamState()
    assert state.lr == 1e-3
    adam_step(d, state, grads)
    assert state.step_count == 1
    for name, g in grads.items():
        np.testing.assert_allclose(before.params()[name] - getattr(d, name), 1e-3 * np.sign(g), rtol=1e-6)


def test_training_on_separable_data_converges(rng):
    d = init_discriminator(4, 50, rng)
    state = AdamState()
    x = np.array([[int(b) for b in format(i, "04b")] for i in range(16)], dtype=float)
    y = x[:, 0]  # label = first pixel
    for _ in range(500):
        loss, grads = backward(d, x, y)
        adam_step(d, state, grads)
    assert bce_loss(forward(d, x), y) < 0.1
