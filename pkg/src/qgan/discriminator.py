"""Two-layer feedforward discriminator (ReLU hidden, sigmoid output) trained with Adam.

Inputs are bit arrays mapped to ``0.0 / 1.0`` with shape ``(batch, input_dim)``.
"""
from __future__ import annotations

import math

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError

CLAMP_EPS = 1e-7
PARAM_NAMES = ("W1", "b1", "W2", "b2")


@dataclass
class Discriminator:
    W1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (1, hidden)
    b2: np.ndarray  # (1,)

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W1.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> Discriminator:
        return Discriminator(*(getattr(self, n).copy() for n in PARAM_NAMES))


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)


def init_discriminator(input_dim: int, hidden_dim: int = 50,
                       rng: np.random.Generator | None = None) -> Discriminator:
    """Glorot-uniform weights, zero biases."""
    if input_dim < 1 or hidden_dim < 1:
        raise ValueError("layer sizes must be >= 1")
    rng = np.random.default_rng() if rng is None else rng

    def glorot(fan_out, fan_in):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_out, fan_in))

    return Discriminator(
        W1=glorot(hidden_dim, input_dim),
        b1=np.zeros(hidden_dim),
        W2=glorot(1, hidden_dim),
        b2=np.zeros(1),
    )


def _as_inputs(d: Discriminator, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d.input_dim:
        raise ShapeError(f"discriminator expects {d.input_dim} inputs, got {x.shape[-1]}")
    return x


def _sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(d: Discriminator, x) -> np.ndarray:
    """D(x) for a single input (returns a 0-d array) or a batch."""
    x = _as_inputs(d, x)
    hidden = np.maximum(x @ d.W1.T + d.b1, 0.0)
    z = hidden @ d.W2[0] + d.b2[0]
    return _sigmoid(np.atleast_1d(z)).reshape(np.shape(z))


def clamp(preds) -> np.ndarray:
    return np.clip(preds, CLAMP_EPS, 1.0 - CLAMP_EPS)


def bce_loss(preds, labels) -> float:
    """Binary cross entropy averaged over the concatenated real+fake batch."""
    preds, labels = np.asarray(preds, dtype=float), np.asarray(labels, dtype=float)
    if preds.shape != labels.shape:
        raise ShapeError(f"preds {preds.shape} and labels {labels.shape} differ")
    p = clamp(preds)
    terms = labels * np.log(p) + (1 - labels) * np.log(1 - p)
    # fsum is correctly rounded, so the value does not depend on sample order
    return -math.fsum(terms.tolist()) / terms.size


def backward(d: Discriminator, x, labels) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and its exact gradients w.r.t. every discriminator parameter.

    The clamp on predictions only matters for the loss value: with the
    sigmoid/BCE pair the logit gradient is ``(D(x) - y) / n``.
    """
    x = _as_inputs(d, x)
    labels = np.asarray(labels, dtype=float)
    if x.ndim != 2 or labels.shape != (x.shape[0],):
        raise ShapeError(f"batch of {x.shape} inputs does not match labels {labels.shape}")
    n = x.shape[0]
    pre = x @ d.W1.T + d.b1
    hidden = np.maximum(pre, 0.0)
    preds = _sigmoid(hidden @ d.W2[0] + d.b2[0])
    loss = bce_loss(preds, labels)

    dz = (preds - labels) / n
    dhidden = np.outer(dz, d.W2[0]) * (pre > 0)
    grads = {
        "W1": dhidden.T @ x,
        "b1": dhidden.sum(axis=0),
        "W2": (dz @ hidden)[None, :],
        "b2": np.array([dz.sum()]),
    }
    return loss, grads


def adam_step(d: Discriminator, adam: AdamState, grads: dict[str, np.ndarray]):
    """In-place Adam update with bias correction; returns ``(d, adam)``."""
    adam.step_count += 1
    t = adam.step_count
    for name in PARAM_NAMES:
        g = grads[name]
        m = adam.first_moment.get(name, np.zeros_like(g))
        v = adam.second_moment.get(name, np.zeros_like(g))
        m = adam.beta1 * m + (1 - adam.beta1) * g
        v = adam.beta2 * v + (1 - adam.beta2) * g * g
        adam.first_moment[name], adam.second_moment[name] = m, v
        m_hat = m / (1 - adam.beta1**t)
        v_hat = v / (1 - adam.beta2**t)
        param = getattr(d, name)
        param -= adam.lr * m_hat / (np.sqrt(v_hat) + adam.epsilon)
    return d, adam
