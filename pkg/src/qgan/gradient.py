"""Generator loss and its parameter-shift gradient.

Every gradient here is taken at one fixed ``theta`` and one fixed
discriminator; the discriminator only enters through ``log D(x)`` over the
``2**N`` outcomes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import (
    CircuitSpec,
    distributions,
    param_count,
    sample_outcomes,
    shifted_distributions,
)
from .discriminator import Discriminator, clamp, forward
from .errors import LayoutError
from .statevector import bit_table

SHIFT = np.pi / 2
GRAD_MODES = ("exact", "sampled")


@dataclass(frozen=True)
class GradMode:
    mode: str = "exact"
    batch_g: int = 100

    def __post_init__(self):
        if self.mode not in GRAD_MODES:
            raise ValueError(f"grad mode must be one of {GRAD_MODES}, got {self.mode!r}")
        if self.batch_g < 1:
            raise ValueError("batch_g must be >= 1")


def log_d_table(d: Discriminator, num_bits: int) -> np.ndarray:
    """``log D(x)`` (clamped) for every outcome index ``x``."""
    return np.log(clamp(forward(d, bit_table(num_bits))))


def generator_loss_exact(dist, d: Discriminator) -> float:
    dist = np.asarray(dist, dtype=float)
    num_bits = int(np.log2(dist.size))
    return float(-dist @ log_d_table(d, num_bits))


def shifted_stack(theta, shift: float = SHIFT) -> np.ndarray:
    """Rows ``theta + shift*e_i`` for all i, then ``theta - shift*e_i``: shape (2P, P)."""
    theta = np.asarray(theta, dtype=float)
    eye = shift * np.eye(theta.size)
    return np.concatenate([theta + eye, theta - eye])


def prob_derivatives(spec: CircuitSpec, theta) -> np.ndarray:
    """``dP(x)/dtheta_i`` for all i, x via the shift rule, shape (P, 2**N)."""
    _, plus, minus = shifted_distributions(spec, theta, SHIFT)
    return 0.5 * (plus - minus)


def loss_and_grad_exact(spec: CircuitSpec, theta, d: Discriminator, shifted=None):
    """Loss at ``theta``, its shift-rule gradient and the distribution at ``theta``.

    ``shifted`` may carry a precomputed ``shifted_distributions`` result; the
    circuit distributions do not depend on the discriminator.
    """
    dist, plus, minus = shifted_distributions(spec, theta, SHIFT) if shifted is None else shifted
    log_d = log_d_table(d, spec.num_bits)
    grad = -0.5 * (plus - minus) @ log_d
    return float(-dist @ log_d), grad, dist


def grad_exact(spec: CircuitSpec, theta, d: Discriminator) -> np.ndarray:
    return -prob_derivatives(spec, theta) @ log_d_table(d, spec.num_bits)


def grad_sampled(spec: CircuitSpec, theta, d: Discriminator, batch_g: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Shot-based estimate: ``batch_g`` samples at each of theta^+_i and theta^-_i.

    Each (component, sign) row gets its own disjoint block of draws from ``rng``.
    """
    if batch_g < 1:
        raise ValueError("batch_g must be >= 1")
    stack = shifted_stack(theta)
    outcomes = sample_outcomes(spec, stack, batch_g, rng)
    log_d = log_d_table(d, spec.num_bits)[outcomes]
    p = stack.shape[0] // 2
    return (log_d[p:].sum(axis=1) - log_d[:p].sum(axis=1)) / (2 * batch_g)


def sgd_update(theta, grad, lr: float) -> np.ndarray:
    theta, grad = np.asarray(theta, dtype=float), np.asarray(grad, dtype=float)
    if theta.shape != grad.shape:
        raise LayoutError(f"theta {theta.shape} and gradient {grad.shape} differ")
    return theta - lr * grad


def finite_diff_grad(spec: CircuitSpec, theta, d: Discriminator, h: float = 1e-5) -> np.ndarray:
    """Central differences of the exact generator loss, one coordinate at a time."""
    if not 1e-7 <= abs(h) <= 1e-3:
        raise ValueError(f"step size {h} outside [1e-7, 1e-3]")
    theta = np.asarray(theta, dtype=float)
    if theta.size != param_count(spec):
        raise LayoutError(f"expected {param_count(spec)} parameters, got {theta.size}")
    log_d = log_d_table(d, spec.num_bits)
    grad = np.empty(theta.size)
    for i in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[i] += h
        down[i] -= h
        loss_up = -distributions(spec, up) @ log_d
        loss_down = -distributions(spec, down) @ log_d
        grad[i] = (loss_up - loss_down) / (2 * h)
    return grad
