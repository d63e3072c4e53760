import numpy as np
import pytest

from qgan.circuit import CircuitSpec, distributions, init_params, param_count, shift_param
from qgan.errors import LayoutError
from qgan.gradient import (
    GradMode,
    finite_diff_grad,
    generator_loss_exact,
    grad_exact,
    grad_sampled,
    loss_and_grad_exact,
    prob_derivatives,
    sgd_update,
)

from helpers import constant_discriminator, random_discriminator

SMALL_SPECS = [
    CircuitSpec("layered", 1, 1), CircuitSpec("layered", 2, 1), CircuitSpec("layered", 3, 2),
    CircuitSpec("mps", 1, 1, 1), CircuitSpec("mps", 2, 1, 1), CircuitSpec("mps", 3, 2, 2),
]


def test_loss_at_half_is_ln2(rng):
    dist = rng.dirichlet(np.ones(8))
    assert generator_loss_exact(dist, constant_discriminator(3, 0.5)) == pytest.approx(np.log(2), abs=1e-12)


def test_loss_with_perfect_fooling_is_near_zero():
    dist = np.full(4, 0.25)
    loss = generator_loss_exact(dist, constant_discriminator(2, 1 - 1e-12))
    assert loss == pytest.approx(-np.log(1 - 1e-7), abs=1e-12)
    assert loss >= 0


def test_loss_point_mass(rng):
    d = random_discriminator(2, rng)
    from qgan.discriminator import forward

    dist = np.array([0, 0, 1.0, 0])
    assert generator_loss_exact(dist, d) == pytest.approx(-np.log(forward(d, [1, 0])), rel=1e-12)


@pytest.mark.parametrize("spec", SMALL_SPECS)
def test_constant_discriminator_gives_zero_gradient(spec, rng):
    theta = init_params(spec, rng)
    d = constant_discriminator(spec.num_bits, 0.3)
    assert np.max(np.abs(grad_exact(spec, theta, d))) < 1e-12
    assert np.max(np.abs(finite_diff_grad(spec, theta, d))) < 1e-9


@pytest.mark.parametrize("spec", SMALL_SPECS)
def test_parameter_shift_matches_finite_difference(spec, rng):
    for _ in range(3):
        theta = init_params(spec, rng)
        d = random_discriminator(spec.num_bits, rng)
        diff = grad_exact(spec, theta, d) - finite_diff_grad(spec, theta, d, h=1e-5)
        assert np.max(np.abs(diff)) < 1e-6


def test_finite_difference_symmetric_in_step(rng):
    spec = CircuitSpec("layered", 2, 1)
    theta = init_params(spec, rng)
    d = random_discriminator(2, rng)
    np.testing.assert_array_equal(finite_diff_grad(spec, theta, d, 1e-4), finite_diff_grad(spec, theta, d, -1e-4))


def test_finite_difference_step_guard(rng):
    spec = CircuitSpec("layered", 1, 1)
    with pytest.raises(ValueError):
        finite_diff_grad(spec, np.zeros(5), constant_discriminator(1, 0.5), h=1e-2)


@pytest.mark.parametrize("spec", SMALL_SPECS[1:3] + SMALL_SPECS[4:])
def test_half_turn_flips_gradient_component(spec, rng):
    # each probability is a + b cos(t) + c sin(t) in any single angle t
    theta = init_params(spec, rng)
    d = random_discriminator(spec.num_bits, rng)
    base = grad_exact(spec, theta, d)
    for i in range(param_count(spec)):
        flipped = grad_exact(spec, shift_param(theta, i, np.pi), d)[i]
        assert flipped == pytest.approx(-base[i], abs=1e-10)


@pytest.mark.parametrize("spec", SMALL_SPECS)
def test_probability_derivatives_sum_to_zero(spec, rng):
    derivs = prob_derivatives(spec, init_params(spec, rng))
    assert np.max(np.abs(derivs.sum(axis=1))) < 1e-10


@pytest.mark.parametrize("spec", SMALL_SPECS)
def test_gradient_two_pi_invariant(spec, rng):
    theta = init_params(spec, rng)
    d = random_discriminator(spec.num_bits, rng)
    base = grad_exact(spec, theta, d)
    for i in range(param_count(spec)):
        np.testing.assert_allclose(grad_exact(spec, shift_param(theta, i, 2 * np.pi), d), base, atol=1e-9)


def test_loss_and_grad_exact_consistent(rng):
    spec = CircuitSpec("mps", 2, 2, 1)
    theta = init_params(spec, rng)
    d = random_discriminator(2, rng)
    loss, grad, dist = loss_and_grad_exact(spec, theta, d)
    np.testing.assert_allclose(dist, distributions(spec, theta), atol=1e-13)
    assert loss == pytest.approx(generator_loss_exact(dist, d), abs=1e-13)
    np.testing.assert_allclose(grad, grad_exact(spec, theta, d), atol=1e-13)


@pytest.mark.parametrize("spec", [CircuitSpec("layered", 2, 1), CircuitSpec("mps", 2, 1, 1)])
def test_sampled_gradient_is_unbiased(spec, rng):
    theta = init_params(spec, rng)
    d = random_discriminator(2, rng)
    exact = grad_exact(spec, theta, d)
    estimates = np.array([grad_sampled(spec, theta, d, 100, rng) for _ in range(200)])
    stderr = estimates.std(axis=0, ddof=1) / np.sqrt(len(estimates))
    assert np.all(np.abs(estimates.mean(axis=0) - exact) <= 3 * stderr + 1e-12)


def test_sampled_gradient_constant_discriminator(rng):
    spec = CircuitSpec("layered", 2, 1)
    theta = init_params(spec, rng)
    est = grad_sampled(spec, theta, constant_discriminator(2, 0.4), 100, rng)
    # every log D(x) is the same constant, so the two sums cancel exactly
    np.testing.assert_allclose(est, 0, atol=1e-12)


def test_grad_mode_defaults():
    assert GradMode("sampled").batch_g == 100
    with pytest.raises(ValueError):
        GradMode("sampled", 0)
    with pytest.raises(ValueError):
        GradMode("analytic")


def test_sgd_update(rng):
    theta, grad = rng.normal(size=5), rng.normal(size=5)
    np.testing.assert_array_equal(sgd_update(theta, np.zeros(5), 2e-2), theta)
    np.testing.assert_allclose(sgd_update(sgd_update(theta, grad, 2e-2), -grad, 2e-2), theta, atol=1e-15)
    np.testing.assert_allclose(sgd_update(theta, grad, 2e-2), theta - 2e-2 * grad)
    with pytest.raises(LayoutError):
        sgd_update(theta, grad[:4], 0.1)
