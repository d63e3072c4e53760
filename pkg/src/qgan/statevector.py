"""Dense pure-state simulator.

Convention used everywhere in the package: qubit 0 is the most significant bit
of a basis-state index, so the bitstring of index ``x`` reads qubit 0 ... qubit
n-1 from left to right.

The public single-state functions work on :class:`StateVector`.  The
``*_batched`` kernels underneath act on plain complex arrays of shape
``(*batch, 2**n)`` and are what the circuit module uses to evaluate many
parameter vectors in one pass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidGateError, NumericalDegeneracyError, ResourceError

MAX_QUBITS = 24
DEGENERACY_TOL = 1e-14


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def copy(self) -> StateVector:
        return StateVector(self.num_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class SingleQubitGate:
    """2x2 unitary ``u11|0><0| + u12|0><1| + u21|1><0| + u22|1><1|``."""

    u11: complex
    u12: complex
    u21: complex
    u22: complex

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.u11, self.u12], [self.u21, self.u22]], dtype=np.complex128)

    def is_unitary(self, tol: float = 1e-12) -> bool:
        m = self.matrix
        return bool(np.allclose(m.conj().T @ m, np.eye(2), atol=tol, rtol=0))


def rx(theta: float) -> SingleQubitGate:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return SingleQubitGate(c, -1j * s, -1j * s, c)


def rz(theta: float) -> SingleQubitGate:
    return SingleQubitGate(np.exp(-0.5j * theta), 0.0, 0.0, np.exp(0.5j * theta))


def rx_matrices(thetas) -> np.ndarray:
    """Stack of Rx matrices, shape ``(*thetas.shape, 2, 2)``."""
    thetas = np.asarray(thetas, dtype=float)
    out = np.empty((*thetas.shape, 2, 2), dtype=np.complex128)
    out[..., 0, 0] = out[..., 1, 1] = np.cos(thetas / 2)
    out[..., 0, 1] = out[..., 1, 0] = -1j * np.sin(thetas / 2)
    return out


def rz_matrices(thetas) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    out = np.zeros((*thetas.shape, 2, 2), dtype=np.complex128)
    out[..., 0, 0] = np.exp(-0.5j * thetas)
    out[..., 1, 1] = np.exp(0.5j * thetas)
    return out


def _check_qubit(qubit: int, n: int) -> None:
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n}-qubit state")


def apply_matrix_batched(amps: np.ndarray, n: int, qubit: int, mats: np.ndarray) -> np.ndarray:
    """Apply 2x2 matrices to ``qubit`` of every state in ``amps``.

    ``mats`` is ``(2, 2)`` or ``(*batch, 2, 2)`` broadcastable against the
    leading dimensions of ``amps``.
    """
    batch = amps.shape[:-1]
    view = amps.reshape(*batch, 2**qubit, 2, 2 ** (n - qubit - 1))
    a0, a1 = view[..., :, 0, :], view[..., :, 1, :]
    u = mats[..., None, None]
    out = np.empty_like(view)
    out[..., :, 0, :] = u[..., 0, 0, :, :] * a0 + u[..., 0, 1, :, :] * a1
    out[..., :, 1, :] = u[..., 1, 0, :, :] * a0 + u[..., 1, 1, :, :] * a1
    return out.reshape(amps.shape)


def apply_cp_batched(amps: np.ndarray, n: int, control: int, target: int, phases) -> np.ndarray:
    """Multiply the |..1..1..> amplitudes of (control, target) by ``exp(1j*phases)``."""
    lo, hi = sorted((control, target))
    batch = amps.shape[:-1]
    out = amps.reshape(*batch, 2**lo, 2, 2 ** (hi - lo - 1), 2, 2 ** (n - hi - 1)).copy()
    factor = np.exp(1j * np.asarray(phases, dtype=float))[..., None, None, None]
    out[..., :, 1, :, 1, :] *= factor
    return out.reshape(amps.shape)


def zero_state(num_qubits: int) -> StateVector:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ResourceError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def apply_single(state: StateVector, qubit: int, gate: SingleQubitGate) -> StateVector:
    _check_qubit(qubit, state.num_qubits)
    amps = apply_matrix_batched(state.amplitudes, state.num_qubits, qubit, gate.matrix)
    return StateVector(state.num_qubits, amps)


def apply_cp(state: StateVector, control: int, target: int, theta: float) -> StateVector:
    n = state.num_qubits
    _check_qubit(control, n)
    _check_qubit(target, n)
    if control == target:
        raise InvalidGateError(f"controlled-phase needs distinct qubits, got {control} twice")
    return StateVector(n, apply_cp_batched(state.amplitudes, n, control, target, theta))


def probabilities(state: StateVector) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


def marginal_prob(state: StateVector, qubit: int, bit: int) -> float:
    _check_qubit(qubit, state.num_qubits)
    n = state.num_qubits
    probs = probabilities(state).reshape(2**qubit, 2, 2 ** (n - qubit - 1))
    return float(probs[:, bit, :].sum())


def index_to_bits(index: int, n: int) -> str:
    return format(int(index), f"0{n}b")


def bits_to_index(bits: str) -> int:
    return int(bits, 2)


def bit_table(n: int) -> np.ndarray:
    """All n-bit strings as a float array of shape (2**n, n), row x = bits of x."""
    idx = np.arange(2**n)
    return ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(float)


def sample_indices(probs: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` outcome indices from each row of ``probs`` by inverse CDF.

    ``probs`` may be 1-D or ``(*batch, K)``; returns ``(*batch, size)`` ints.
    """
    cdf = np.cumsum(probs, axis=-1)
    cdf /= cdf[..., -1:]
    u = rng.random((*probs.shape[:-1], size))
    idx = (u[..., :, None] >= cdf[..., None, :]).sum(-1)
    return np.minimum(idx, probs.shape[-1] - 1)


def sample(state: StateVector, rng: np.random.Generator) -> str:
    idx = sample_indices(probabilities(state), 1, rng)[0]
    return index_to_bits(idx, state.num_qubits)


def measure_reset_batched(amps: np.ndarray, n: int, qubit: int, rng: np.random.Generator):
    """Measure ``qubit`` in every state of ``amps``, then reset it to |0>.

    Returns ``(bits, new_amps)`` with ``bits`` of shape ``amps.shape[:-1]``.
    """
    batch = amps.shape[:-1]
    view = amps.reshape(*batch, 2**qubit, 2, 2 ** (n - qubit - 1))
    p = np.abs(view) ** 2
    p0 = p[..., :, 0, :].sum(axis=(-2, -1))
    p1 = p[..., :, 1, :].sum(axis=(-2, -1))
    if np.any((p0 < DEGENERACY_TOL) & (p1 < DEGENERACY_TOL)):
        raise NumericalDegeneracyError("both measurement outcomes have vanishing probability")
    total = p0 + p1
    bits = (rng.random(batch) * total >= p0).astype(np.int64)
    kept = np.where(bits[..., None, None] == 1, view[..., :, 1, :], view[..., :, 0, :])
    kept = kept / np.sqrt(np.where(bits == 1, p1, p0))[..., None, None]
    out = np.zeros_like(view)
    out[..., :, 0, :] = kept
    return bits, out.reshape(amps.shape)


def measure_and_reset(state: StateVector, qubit: int, rng: np.random.Generator):
    _check_qubit(qubit, state.num_qubits)
    bits, amps = measure_reset_batched(state.amplitudes, state.num_qubits, qubit, rng)
    return int(bits), StateVector(state.num_qubits, amps)
