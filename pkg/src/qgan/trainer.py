"""Adversarial training loop and the metrics reported during training."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import (
    CircuitSpec,
    distributions,
    init_params,
    sample_outcomes,
    shifted_distributions,
)
from .data import BasSpec, bas_patterns, sample_real_batch, valid_mask
from .discriminator import AdamState, adam_step, backward, clamp, forward, init_discriminator
from .errors import ConfigError
from .gradient import GradMode, grad_sampled, loss_and_grad_exact, sgd_update
from .statevector import bit_table

logger = logging.getLogger(__name__)

KLD_CLAMP = 1e-12
METRICS = ("accuracy", "kld", "loss_g", "loss_d")


@dataclass(frozen=True)
class TrainConfig:
    circuit: CircuitSpec
    m: int = 2
    batch_d: int = 64
    batch_g: int = 100
    d_step: int = 1
    g_step: int = 1
    epochs: int = 5000
    lr_g: float = 2e-2
    lr_d: float = 1e-3
    grad_mode: str = "exact"
    report_interval: int = 50
    seed: int = 0
    hidden_dim: int = 50

    def __post_init__(self):
        for key in ("batch_d", "batch_g", "d_step", "g_step", "report_interval", "hidden_dim"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1", key)
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0", "epochs")
        for key in ("lr_g", "lr_d"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be > 0", key)
        if self.grad_mode not in ("exact", "sampled"):
            raise ConfigError(f"unknown grad_mode {self.grad_mode!r}", "grad_mode")
        if self.circuit.num_bits != self.m * self.m:
            raise ConfigError(
                f"circuit emits {self.circuit.num_bits} bits but m={self.m} images need {self.m**2}",
                "m",
            )

    @property
    def mode(self) -> GradMode:
        return GradMode(self.grad_mode, self.batch_g)


@dataclass(frozen=True)
class MetricsRecord:
    epoch: int
    accuracy: float
    kld: float
    loss_g: float
    loss_d: float
    kld_saturated: bool = False


@dataclass
class RunResult:
    theta: np.ndarray
    records: list[MetricsRecord] = field(default_factory=list)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def accuracy(samples, spec: BasSpec) -> float:
    """Fraction of samples (outcome indices or bitstrings) that are BAS patterns."""
    samples = list(samples) if not isinstance(samples, np.ndarray) else samples
    if len(samples) == 0:
        raise ValueError("accuracy of an empty sample batch is undefined")
    if isinstance(samples[0], str):
        samples = [int(s, 2) for s in samples]
    return float(np.mean(valid_mask(spec, samples)))


def _kld_terms(target, generated):
    target, generated = np.asarray(target, dtype=float), np.asarray(generated, dtype=float)
    support = target > 0
    gen = generated[support]
    return target[support], np.maximum(gen, KLD_CLAMP), bool(np.any(gen < KLD_CLAMP))


def kl_divergence(target, generated) -> float:
    """KLD(target || generated), natural log, generated clamped at 1e-12 on the target support."""
    t, g, _ = _kld_terms(target, generated)
    return float(max(np.sum(t * np.log(t / g)), 0.0))


def kld_saturated(target, generated) -> bool:
    """True when the clamp in :func:`kl_divergence` had to fire."""
    return _kld_terms(target, generated)[2]


def equilibrium_loss() -> float:
    return math.log(2.0)


def run_seed(seed: int, run_index: int) -> np.random.SeedSequence:
    """Per-run seed material: numpy's SeedSequence hash of ``(seed, run_index)``."""
    return np.random.SeedSequence([seed, run_index])


def train(config: TrainConfig, seed_seq: np.random.SeedSequence | None = None) -> RunResult:
    """One run: each epoch does d_step discriminator updates, then g_step generator updates."""
    seed_seq = np.random.SeedSequence(config.seed) if seed_seq is None else seed_seq
    init_rng, data_rng, fake_rng, grad_rng, eval_rng = (
        np.random.default_rng(s) for s in seed_seq.spawn(5)
    )
    spec = config.circuit
    bas = bas_patterns(config.m)
    target = bas.target_dist
    bits = bit_table(spec.num_bits)

    theta = init_params(spec, init_rng)
    disc = init_discriminator(spec.num_bits, config.hidden_dim, init_rng)
    adam = AdamState(lr=config.lr_d)
    labels = np.concatenate([np.ones(config.batch_d), np.zeros(config.batch_d)])
    result = RunResult(theta=theta.copy())
    loss_g = loss_d = float("nan")

    exact = config.grad_mode == "exact"
    for epoch in range(1, config.epochs + 1):
        # one pass gives the fake-sample distribution and the first g-step's shifts
        shifted = shifted_distributions(spec, theta) if exact else None
        dist = shifted[0] if exact else None
        for _ in range(config.d_step):
            real = sample_real_batch(bas, config.batch_d, data_rng)
            fake = sample_outcomes(spec, theta, config.batch_d, fake_rng, probs=dist)
            loss_d, grads = backward(disc, bits[np.concatenate([real, fake])], labels)
            adam_step(disc, adam, grads)

        for _ in range(config.g_step):
            if exact:
                loss_g, grad, _ = loss_and_grad_exact(spec, theta, disc, shifted)
                shifted = None
            else:
                fake = sample_outcomes(spec, theta, config.batch_g, grad_rng)
                loss_g = float(-np.mean(np.log(clamp(forward(disc, bits[fake])))))
                grad = grad_sampled(spec, theta, disc, config.batch_g, grad_rng)
            theta = sgd_update(theta, grad, config.lr_g)

        if epoch % config.report_interval == 0:
            dist = distributions(spec, theta)
            samples = sample_outcomes(spec, theta, config.batch_d, eval_rng)
            record = MetricsRecord(
                epoch=epoch,
                accuracy=accuracy(samples, bas),
                kld=kl_divergence(target, dist),
                loss_g=loss_g,
                loss_d=loss_d,
                kld_saturated=kld_saturated(target, dist),
            )
            result.records.append(record)
            logger.debug("epoch %d: %s", epoch, record)

    result.theta = theta
    return result


@dataclass
class Aggregate:
    epochs: np.ndarray
    mean: dict[str, np.ndarray]
    std: dict[str, np.ndarray]
    runs: list[RunResult]


def aggregate(runs: list[RunResult]) -> Aggregate:
    epochs = np.array([r.epoch for r in runs[0].records], dtype=int)
    mean, std = {}, {}
    for name in METRICS:
        values = np.array([run.series(name) for run in runs]).reshape(len(runs), len(epochs))
        mean[name] = values.mean(axis=0)
        std[name] = values.std(axis=0)
    return Aggregate(epochs, mean, std, runs)


def _train_indexed(args):
    config, index = args
    return train(config, run_seed(config.seed, index))


def run_many(config: TrainConfig, num_runs: int, workers: int = 1) -> Aggregate:
    """Independent runs (seeded by ``(config.seed, run_index)``) and their per-epoch mean/std."""
    if num_runs < 1:
        raise ValueError("num_runs must be >= 1")
    jobs = [(config, i) for i in range(num_runs)]
    if workers > 1 and num_runs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_train_indexed, jobs))
    else:
        runs = [_train_indexed(job) for job in jobs]
    return aggregate(runs)
