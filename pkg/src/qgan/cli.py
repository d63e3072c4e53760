"""Command-line driver.

``qgan run`` trains one or more generators and writes metrics plus the final
parameters into ``--out``.  ``qgan gradcheck`` compares the analytic
gradients against finite differences.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import CircuitSpec, init_params
from .discriminator import CLAMP_EPS, backward, init_discriminator
from .errors import ConfigError
from .gradient import finite_diff_grad, grad_exact
from .trainer import Aggregate, TrainConfig, run_many

logger = logging.getLogger(__name__)

PARAM_SHIFT_TOL = 1e-6
BACKPROP_TOL = 1e-5


@dataclass(frozen=True)
class ExperimentFile:
    circuit: str
    m: int
    layers: int
    ancilla: int = 0
    epochs: int = 5000
    runs: int = 1
    seed: int = 0
    batch_d: int = 64
    batch_g: int = 100
    d_step: int = 1
    g_step: int = 1
    lr_g: float = 2e-2
    lr_d: float = 1e-3
    grad_mode: str = "exact"
    report_interval: int = 50
    out: str = "results"

    def train_config(self) -> TrainConfig:
        spec = CircuitSpec(self.circuit, self.m * self.m, self.layers, self.ancilla)
        return TrainConfig(
            circuit=spec, m=self.m, batch_d=self.batch_d, batch_g=self.batch_g,
            d_step=self.d_step, g_step=self.g_step, epochs=self.epochs,
            lr_g=self.lr_g, lr_d=self.lr_d, grad_mode=self.grad_mode,
            report_interval=self.report_interval, seed=self.seed,
        )


_FIELDS = {f.name: f for f in fields(ExperimentFile)}
_TYPES = {"str": str, "int": int, "float": float}
REQUIRED = ("circuit", "m", "layers")


def _coerce(key: str, value):
    kind = _TYPES[_FIELDS[key].type]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        if not (isinstance(value, str) and value.lstrip("-").isdigit()):
            raise ConfigError(f"{key} must be an integer, got {value!r}", key)
        value = int(value)
    elif kind is float:
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a number, got {value!r}", key) from None
    elif kind is str and not isinstance(value, str):
        raise ConfigError(f"{key} must be a string, got {value!r}", key)
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train generators and write metrics")
    run.add_argument("--config", help="JSON file with flat experiment keys")
    run.add_argument("--circuit", choices=("layered", "mps"))
    run.add_argument("--m", type=int)
    run.add_argument("--layers", type=int)
    run.add_argument("--ancilla", type=int)
    run.add_argument("--epochs", type=int)
    run.add_argument("--runs", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--batch-d", type=int)
    run.add_argument("--batch-g", type=int)
    run.add_argument("--d-step", type=int)
    run.add_argument("--g-step", type=int)
    run.add_argument("--lr-g", type=float)
    run.add_argument("--lr-d", type=float)
    run.add_argument("--grad-mode", choices=("exact", "sampled"))
    run.add_argument("--report-interval", type=int)
    run.add_argument("--out")
    run.add_argument("-v", "--verbose", action="store_true")

    check = sub.add_parser("gradcheck", help="verify analytic gradients against finite differences")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--trials", type=int, default=50)
    return parser


def parse_config(argv=None) -> ExperimentFile:
    """Merge ``--config`` file values with command-line flags (flags win)."""
    if isinstance(argv, argparse.Namespace):
        args = argv
    else:
        args = build_parser().parse_args(["run", *(argv or [])])
    values = {}
    if args.config:
        path = Path(args.config)
        try:
            loaded = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found", "config") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}", "config") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a flat JSON object", "config")
        for key, value in loaded.items():
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r}", key)
            values[key] = _coerce(key, value)
    for key in _FIELDS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag

    for key in REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}", key)
    if values["circuit"] not in ("layered", "mps"):
        raise ConfigError(f"circuit must be 'layered' or 'mps', got {values['circuit']!r}", "circuit")
    if values["circuit"] == "mps" and values.get("ancilla", 0) < 1:
        raise ConfigError("mps circuits need ancilla >= 1", "ancilla")
    if values["circuit"] == "layered" and values.get("ancilla", 0) != 0:
        raise ConfigError("ancilla qubits only apply to mps circuits", "ancilla")
    if values.get("runs", 1) < 1:
        raise ConfigError("runs must be >= 1", "runs")
    if values["m"] < 1 or values["layers"] < 1:
        key = "m" if values["m"] < 1 else "layers"
        raise ConfigError(f"{key} must be >= 1", key)

    experiment = ExperimentFile(**values)
    experiment.train_config()  # raises ConfigError on invalid training values
    return experiment


def _fmt(x) -> str:
    return format(float(x), ".10g")


def write_metrics(path: Path, agg: Aggregate) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        if len(agg.runs) == 1:
            writer.writerow(["run", "epoch", "accuracy", "kld", "loss_g", "loss_d"])
            for r in agg.runs[0].records:
                writer.writerow([0, r.epoch, *map(_fmt, (r.accuracy, r.kld, r.loss_g, r.loss_d))])
        else:
            writer.writerow(["epoch", "acc_mean", "acc_std", "kld_mean", "kld_std",
                             "lossg_mean", "lossg_std", "lossd_mean", "lossd_std"])
            for i, epoch in enumerate(agg.epochs):
                row = [int(epoch)]
                for name in ("accuracy", "kld", "loss_g", "loss_d"):
                    row += [_fmt(agg.mean[name][i]), _fmt(agg.std[name][i])]
                writer.writerow(row)


def _workers() -> int:
    env = os.environ.get("QGAN_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_experiment(experiment: ExperimentFile) -> int:
    out = Path(experiment.out)
    start = time.perf_counter()
    agg = run_many(experiment.train_config(), experiment.runs, workers=_workers())
    wall = time.perf_counter() - start

    final = {}
    if len(agg.epochs):
        for name in ("accuracy", "kld"):
            values = np.array([run.series(name)[-1] for run in agg.runs])
            final[name] = {"mean": float(values.mean()), "std": float(values.std())}
    saturated = sum(any(r.kld_saturated for r in run.records) for run in agg.runs)
    summary = {
        "final": final,
        "kld_clamp_saturated_runs": saturated,
        "wall_time_s": wall,
        "version": __version__,
        "config": asdict(experiment),
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_metrics(out / "metrics.csv", agg)
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        for k, run in enumerate(agg.runs):
            np.savetxt(out / f"theta_run{k}.txt", run.theta, fmt="%.17g")
    except OSError as exc:
        print(f"qgan: cannot write results to {out}: {exc}", file=sys.stderr)
        return 1
    logger.info("wrote %s (%.1fs)", out, wall)
    return 0


@dataclass
class GradcheckReport:
    param_shift_max_abs: float
    backprop_max_rel: float
    trials: int

    @property
    def failures(self) -> list[str]:
        failed = []
        if not self.param_shift_max_abs < PARAM_SHIFT_TOL:
            failed.append("parameter-shift")
        if not self.backprop_max_rel < BACKPROP_TOL:
            failed.append("backprop")
        return failed


def _random_discriminator(input_dim: int, rng: np.random.Generator):
    d = init_discriminator(input_dim, int(rng.integers(2, 12)), rng)
    d.b1 += rng.normal(scale=0.5, size=d.b1.shape)
    d.b2 += rng.normal(scale=0.5, size=d.b2.shape)
    return d


def _reference_loss(d, x, labels) -> np.longdouble:
    """Clamped BCE evaluated in extended precision.

    Central differences of a double-precision loss carry roundoff near
    ``eps * loss / h``, which swamps gradient components around 1e-7.
    """
    ld = np.longdouble
    x, labels = np.asarray(x, dtype=ld), np.asarray(labels, dtype=ld)
    hidden = np.maximum(x @ d.W1.T.astype(ld) + d.b1.astype(ld), 0)
    z = hidden @ d.W2[0].astype(ld) + ld(d.b2[0])
    p = np.clip(1 / (1 + np.exp(-z)), ld(CLAMP_EPS), 1 - ld(CLAMP_EPS))
    return -np.mean(labels * np.log(p) + (1 - labels) * np.log(1 - p))


def backprop_rel_error(d, x, labels, h: float = 1e-5) -> float:
    """Largest |analytic - central difference| / (|central difference| + 1e-8)."""
    _, grads = backward(d, x, labels)
    worst = 0.0
    for name, param in d.params().items():
        for idx in np.ndindex(param.shape):
            old = param[idx]
            param[idx] = old + h
            up = _reference_loss(d, x, labels)
            param[idx] = old - h
            down = _reference_loss(d, x, labels)
            param[idx] = old
            fd = float((up - down) / (2 * h))
            worst = max(worst, float(abs(grads[name][idx] - fd) / (abs(fd) + 1e-8)))
    return worst


def run_gradcheck(seed: int, trials: int) -> GradcheckReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    shift_err = 0.0
    for _ in range(trials):
        family = "layered" if rng.random() < 0.5 else "mps"
        n = int(rng.integers(1, 4))
        layers = int(rng.integers(1, 3))
        spec = CircuitSpec(family, n, layers, int(rng.integers(1, 3)) if family == "mps" else 0)
        theta = init_params(spec, rng)
        d = _random_discriminator(n, rng)
        shift_err = max(shift_err, float(np.max(np.abs(grad_exact(spec, theta, d)
                                                       - finite_diff_grad(spec, theta, d)))))
    rel_err = 0.0
    for _ in range(max(trials, 20)):
        n = int(rng.integers(1, 5))
        d = _random_discriminator(n, rng)
        batch = int(rng.integers(1, 9))
        x = rng.integers(0, 2, size=(2 * batch, n)).astype(float)
        labels = np.concatenate([np.ones(batch), np.zeros(batch)])
        rel_err = max(rel_err, backprop_rel_error(d, x, labels))
    return GradcheckReport(shift_err, rel_err, trials)


def gradcheck_command(seed: int, trials: int) -> int:
    report = run_gradcheck(seed, trials)
    print(f"parameter-shift vs finite difference: max abs deviation {report.param_shift_max_abs:.3e}"
          f" (threshold {PARAM_SHIFT_TOL:g})")
    print(f"backprop vs finite difference: max rel deviation {report.backprop_max_rel:.3e}"
          f" (threshold {BACKPROP_TOL:g})")
    if report.failures:
        print("FAILED: " + ", ".join(report.failures), file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gradcheck":
        if args.trials < 1:
            parser.error("--trials must be >= 1")
        return gradcheck_command(args.seed, args.trials)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        experiment = parse_config(args)
    except ConfigError as exc:
        print(f"qgan: config error [{exc.key}]: {exc}", file=sys.stderr)
        return 2
    return run_experiment(experiment)


if __name__ == "__main__":
    sys.exit(main())
