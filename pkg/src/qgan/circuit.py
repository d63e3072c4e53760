"""Generator circuits: the layered ansatz and the MPS circuit with qubit recycling.

Parameter layout
----------------
One layer on ``w`` qubits owns ``5 * w`` consecutive parameters, grouped per
qubit: qubit ``q`` holds slots ``(rz_1, rx_2, rz_3, cp_4, rx_5)`` at offsets
``5*q .. 5*q + 4``.  Slots 1-3 are the ``Rz Rx Rz`` rotation on qubit ``q``
(``rz_1`` acts first).  Slots 4-5 drive the entangler pair whose control is
``q``: ``CP(q, q+1 mod w)`` then ``Rx`` on ``q+1 mod w``.  The entangler pairs
run in ascending control order.

Layers follow each other in a flat vector; MPS nodes own contiguous slices of
``5 * L * (V + 1)`` parameters, node 1 first.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LayoutError, ResourceError
from .statevector import (
    MAX_QUBITS,
    StateVector,
    apply_cp_batched,
    apply_matrix_batched,
    index_to_bits,
    measure_reset_batched,
    rx_matrices,
    rz_matrices,
    sample_indices,
)

FAMILIES = ("layered", "mps")
MAX_MPS_BITS = 16
SLOTS = 5


@dataclass(frozen=True)
class CircuitSpec:
    family: str
    num_bits: int
    layers: int
    ancilla: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown circuit family {self.family!r}")
        if self.num_bits < 1 or self.layers < 1:
            raise ValueError("num_bits and layers must be >= 1")
        if self.family == "mps" and self.ancilla < 1:
            raise ValueError("mps circuits need at least one ancilla qubit")

    @property
    def width(self) -> int:
        """Number of simulated qubits."""
        return self.num_bits if self.family == "layered" else self.ancilla + 1

    @property
    def num_nodes(self) -> int:
        return 1 if self.family == "layered" else self.num_bits


def param_count(spec: CircuitSpec) -> int:
    return SLOTS * spec.num_nodes * spec.layers * spec.width


def param_index(spec: CircuitSpec, node: int, layer: int, qubit: int, slot: int) -> int:
    """Flat index of a parameter; ``slot`` counts from 0 (``rz_1``) to 4 (``rx_5``)."""
    return (((node * spec.layers) + layer) * spec.width + qubit) * SLOTS + slot


def param_location(spec: CircuitSpec, index: int) -> tuple[int, int, int, int]:
    """Inverse of :func:`param_index`: ``(node, layer, qubit, slot)``."""
    if not 0 <= index < param_count(spec):
        raise IndexError(index)
    rest, slot = divmod(index, SLOTS)
    rest, qubit = divmod(rest, spec.width)
    node, layer = divmod(rest, spec.layers)
    return node, layer, qubit, slot


def init_params(spec: CircuitSpec, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-np.pi, np.pi, size=param_count(spec))


def shift_param(theta, i: int, delta: float) -> np.ndarray:
    theta = np.array(theta, dtype=float)
    if not 0 <= i < theta.size:
        raise IndexError(f"parameter index {i} out of range for {theta.size} parameters")
    theta[i] += delta
    return theta


def _check_length(spec: CircuitSpec, thetas: np.ndarray) -> None:
    if thetas.shape[-1] != param_count(spec):
        raise LayoutError(
            f"{spec.family} circuit needs {param_count(spec)} parameters, got {thetas.shape[-1]}"
        )


def _layer_batched(amps: np.ndarray, width: int, params: np.ndarray) -> np.ndarray:
    """One layer on states ``amps`` (``(*batch, 2**width)``), ``params`` ``(*batch, width, 5)``."""
    rot = rz_matrices(params[..., 2]) @ rx_matrices(params[..., 1]) @ rz_matrices(params[..., 0])
    for q in range(width):
        amps = apply_matrix_batched(amps, width, q, rot[..., q, :, :])
    if width == 1:
        return amps
    for q in range(width):
        target = (q + 1) % width
        amps = apply_cp_batched(amps, width, q, target, params[..., q, 3])
        amps = apply_matrix_batched(amps, width, target, rx_matrices(params[..., q, 4]))
    return amps


def apply_layer(state: StateVector, width: int, layer_params) -> StateVector:
    layer_params = np.asarray(layer_params, dtype=float)
    if layer_params.shape != (SLOTS * width,) or state.num_qubits != width:
        raise LayoutError(f"layer on {width} qubits needs {SLOTS * width} parameters")
    amps = _layer_batched(state.amplitudes, width, layer_params.reshape(width, SLOTS))
    return StateVector(width, amps)


def _blocks(spec: CircuitSpec, thetas: np.ndarray) -> np.ndarray:
    """Reshape ``(*batch, P)`` to ``(*batch, nodes, layers, width, 5)``."""
    return thetas.reshape(*thetas.shape[:-1], spec.num_nodes, spec.layers, spec.width, SLOTS)


def _node_batched(amps, spec: CircuitSpec, node_params) -> np.ndarray:
    for layer in range(spec.layers):
        amps = _layer_batched(amps, spec.width, node_params[..., layer, :, :])
    return amps


def layered_states(spec: CircuitSpec, thetas) -> np.ndarray:
    """Final amplitudes for a batch of parameter vectors, shape ``(*batch, 2**N)``."""
    thetas = np.asarray(thetas, dtype=float)
    _check_length(spec, thetas)
    if spec.width > MAX_QUBITS:
        raise ResourceError(f"{spec.width} qubits exceeds the simulator limit of {MAX_QUBITS}")
    amps = np.zeros((*thetas.shape[:-1], 2**spec.width), dtype=np.complex128)
    amps[..., 0] = 1.0
    return _node_batched(amps, spec, _blocks(spec, thetas)[..., 0, :, :, :])


def run_layered(spec: CircuitSpec, theta) -> StateVector:
    if spec.family != "layered":
        raise ValueError("run_layered needs a layered circuit spec")
    theta = np.asarray(theta, dtype=float)
    return StateVector(spec.width, layered_states(spec, theta))


def layered_distribution(spec: CircuitSpec, theta) -> np.ndarray:
    return np.abs(run_layered(spec, theta).amplitudes) ** 2


def mps_distributions(spec: CircuitSpec, thetas) -> np.ndarray:
    """Exact outcome distribution of the recycled MPS circuit, batched.

    Branches are enumerated breadth-first with unnormalised amplitudes: after
    each node the register is projected onto both values of qubit 0, which
    is then reset, so the squared norm of a branch is the probability of its
    bit prefix.  Branch index ``2*b + bit`` keeps node 1 as the most
    significant bit of the outcome.
    """
    thetas = np.asarray(thetas, dtype=float)
    _check_length(spec, thetas)
    if spec.num_bits > MAX_MPS_BITS:
        raise ResourceError(f"exact MPS enumeration limited to {MAX_MPS_BITS} bits")
    batch = thetas.shape[:-1]
    w = spec.width
    blocks = _blocks(spec, thetas)[..., None, :, :, :, :]  # broadcast over branches
    amps = np.zeros((*batch, 1, 2**w), dtype=np.complex128)
    amps[..., 0] = 1.0
    for node in range(spec.num_nodes):
        amps = _node_batched(amps, spec, blocks[..., node, :, :, :])
        halves = amps.reshape(*amps.shape[:-1], 2, 2 ** (w - 1))
        nxt = np.zeros((*amps.shape[:-1], 2, 2**w), dtype=np.complex128)
        nxt[..., 0, : 2 ** (w - 1)] = halves[..., 0, :]
        nxt[..., 1, : 2 ** (w - 1)] = halves[..., 1, :]
        amps = nxt.reshape(*batch, -1, 2**w)
    return np.sum(np.abs(amps) ** 2, axis=-1)


def mps_distribution(spec: CircuitSpec, theta) -> np.ndarray:
    if spec.family != "mps":
        raise ValueError("mps_distribution needs an mps circuit spec")
    return mps_distributions(spec, theta)


def mps_sample_indices(spec: CircuitSpec, thetas, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Run the recycled circuit ``shots`` times with mid-circuit measurement.

    ``thetas`` may carry batch dimensions; the result has shape
    ``(*batch, shots)`` of outcome indices with node 1's bit most significant.
    """
    thetas = np.asarray(thetas, dtype=float)
    _check_length(spec, thetas)
    batch = thetas.shape[:-1]
    w = spec.width
    blocks = _blocks(spec, thetas)[..., None, :, :, :, :]
    amps = np.zeros((*batch, shots, 2**w), dtype=np.complex128)
    amps[..., 0] = 1.0
    out = np.zeros((*batch, shots), dtype=np.int64)
    for node in range(spec.num_nodes):
        amps = _node_batched(amps, spec, blocks[..., node, :, :, :])
        bits, amps = measure_reset_batched(amps, w, 0, rng)
        out = 2 * out + bits
    return out


def mps_sample(spec: CircuitSpec, theta, rng: np.random.Generator) -> str:
    if spec.family != "mps":
        raise ValueError("mps_sample needs an mps circuit spec")
    return index_to_bits(mps_sample_indices(spec, theta, 1, rng)[0], spec.num_bits)


def distributions(spec: CircuitSpec, thetas) -> np.ndarray:
    """Exact output distribution(s) for either family; batch dims are preserved."""
    if spec.family == "layered":
        return np.abs(layered_states(spec, thetas)) ** 2
    return mps_distributions(spec, thetas)


def sample_outcomes(spec: CircuitSpec, theta, shots: int, rng: np.random.Generator,
                    probs: np.ndarray | None = None) -> np.ndarray:
    """Draw ``shots`` outcome indices from the generator at ``theta`` (batchable).

    Without ``probs`` the circuit itself is measured: every qubit of the final
    layered state, or the recycled MPS circuit with mid-circuit measurement
    and reset.  Passing the exact distribution ``probs`` samples it directly,
    which has the same law and is much cheaper for MPS circuits.
    """
    if probs is None:
        if spec.family == "mps":
            return mps_sample_indices(spec, theta, shots, rng)
        probs = distributions(spec, theta)
    return sample_indices(probs, shots, rng)


# Shift-structured evaluation
# ---------------------------
# A parameter shift changes exactly one gate factor.  Writing a node unitary
# as F_K ... F_1, the shifted node is S_f F'_f P_{f-1} with prefix/suffix
# products of the unshifted factors, so all 2P shifted circuits cost a few
# batched matmuls instead of 2P full simulations.


def _embed(mats: np.ndarray, qubit: int, width: int) -> np.ndarray:
    """Lift 2x2 matrices ``(..., 2, 2)`` acting on ``qubit`` to the full register."""
    hi, lo = np.eye(2**qubit), np.eye(2 ** (width - qubit - 1))
    frame = hi[:, None, None, :, None, None] * lo[None, None, :, None, None, :]
    full = mats[..., None, :, None, None, :, None] * frame
    return full.reshape(*mats.shape[:-2], 2**width, 2**width)


def _cp_matrix(angles, control: int, target: int, width: int) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    idx = np.arange(2**width)
    both = ((idx >> (width - 1 - control)) & 1) & ((idx >> (width - 1 - target)) & 1)
    diag = np.where(both == 1, np.exp(1j * angles[..., None]), 1.0 + 0j)
    return diag[..., :, None] * np.eye(2**width)


def _factor_order(width: int, layers: int) -> list[tuple[int, int, int]]:
    """Application order of gate factors in one node as ``(layer, qubit, kind)``.

    kind 0 is the merged ``Rz Rx Rz`` rotation, 1 the controlled phase, 2 the
    entangler's ``Rx``.
    """
    order = []
    for layer in range(layers):
        order += [(layer, q, 0) for q in range(width)]
        if width > 1:
            for q in range(width):
                order += [(layer, q, 1), (layer, q, 2)]
    return order


def _rot_factor(angles: np.ndarray, qubit: int, width: int) -> np.ndarray:
    rot = rz_matrices(angles[..., 2]) @ rx_matrices(angles[..., 1]) @ rz_matrices(angles[..., 0])
    return _embed(rot, qubit, width)


def _cp_factor(angles: np.ndarray, qubit: int, width: int) -> np.ndarray:
    return _cp_matrix(angles[..., 3], qubit, (qubit + 1) % width, width)


def _rx_factor(angles: np.ndarray, qubit: int, width: int) -> np.ndarray:
    return _embed(rx_matrices(angles[..., 4]), (qubit + 1) % width, width)


_FACTOR_BUILDERS = (_rot_factor, _cp_factor, _rx_factor)


_SLOT_KIND = (0, 0, 0, 1, 2)


def _split_reset(amps: np.ndarray) -> np.ndarray:
    """Project ``(..., br, D)`` onto both values of qubit 0, reset it: ``(..., 2*br, D)``."""
    half = amps.shape[-1] // 2
    out = np.zeros((*amps.shape[:-1], 2, amps.shape[-1]), dtype=np.complex128)
    out[..., 0, :half] = amps[..., :half]
    out[..., 1, :half] = amps[..., half:]
    return out.reshape(*amps.shape[:-2], -1, amps.shape[-1])


def shifted_distributions(spec: CircuitSpec, theta, shift: float = np.pi / 2):
    """Distributions at ``theta`` and at ``theta +- shift * e_i`` for every i.

    Returns ``(dist, plus, minus)`` with ``plus``/``minus`` of shape
    ``(P, 2**N)``; row i equals ``distributions(spec, shift_param(theta, i, +-shift))``.
    """
    theta = np.asarray(theta, dtype=float)
    _check_length(spec, theta)
    if spec.family == "mps" and spec.num_bits > MAX_MPS_BITS:
        raise ResourceError(f"exact MPS enumeration limited to {MAX_MPS_BITS} bits")
    w, dim, mps = spec.width, 2**spec.width, spec.family == "mps"
    nodes, layers = spec.num_nodes, spec.layers
    blocks = _blocks(spec, theta)  # (nodes, L, w, 5)

    # variant[sign, node, l, q, s] = qubit q's five angles with slot s shifted
    variants = np.broadcast_to(blocks[None, :, :, :, None, :], (2, nodes, layers, w, SLOTS, SLOTS)).copy()
    eye = np.eye(SLOTS) * shift
    variants[0] += eye
    variants[1] -= eye

    base = np.empty((nodes, layers, w, 3, dim, dim), dtype=np.complex128)
    shifted = np.empty((2, nodes, layers, w, SLOTS, dim, dim), dtype=np.complex128)
    kind = np.array(_SLOT_KIND)
    for q in range(w):
        for k, build in enumerate(_FACTOR_BUILDERS[: 3 if w > 1 else 1]):
            base[:, :, q, k] = build(blocks[:, :, q], q, w)
            slots = np.flatnonzero(kind == k)
            shifted[:, :, :, q, slots] = build(variants[:, :, :, q, slots], q, w)

    order = _factor_order(w, layers)
    position = {key: i for i, key in enumerate(order)}
    suffixes = []
    for node in range(nodes):
        # suffix[f + 1] = product of the factors applied after factor f
        suffix = [np.eye(dim, dtype=np.complex128)]
        for layer, q, k in reversed(order):
            suffix.append(suffix[-1] @ base[node, layer, q, k])
        suffixes.append(np.stack(suffix[::-1]))
    unitaries = [suffix[0] for suffix in suffixes]

    def finish(amps, node):
        # amps (..., br, D) as produced by ``node``
        if not mps:
            return np.abs(amps[..., 0, :]) ** 2
        amps = _split_reset(amps)
        for later in range(node + 1, nodes):
            amps = _split_reset(amps @ unitaries[later].T)
        return np.sum(np.abs(amps) ** 2, axis=-1)

    # node-local parameter bookkeeping, identical for every node
    layer_of, rest = np.divmod(np.arange(SLOTS * layers * w), w * SLOTS)
    qubit_of, slot_of = np.divmod(rest, SLOTS)
    active = (slot_of < 3) | (w > 1)  # entangler slots are inert on a single qubit
    factor_of = np.array([position.get((l, q, kind[s]), -1)
                          for l, q, s in zip(layer_of, qubit_of, slot_of)])[active]
    sel = np.flatnonzero(active)

    per_node = SLOTS * layers * w
    plus = np.empty((param_count(spec), 2**spec.num_bits))
    minus = np.empty_like(plus)
    branches = np.zeros((1, dim), dtype=np.complex128)
    branches[0, 0] = 1.0
    for node in range(nodes):
        prefix = [branches.T]
        for layer, q, k in order:
            prefix.append(base[node, layer, q, k] @ prefix[-1])

        pre = np.stack(prefix)[factor_of]
        post = suffixes[node][factor_of + 1]
        changed = shifted[:, node, layer_of[sel], qubit_of[sel], slot_of[sel]]
        out = post @ (changed @ pre)  # (2, active, D, br)
        dists = finish(np.swapaxes(out, -1, -2), node)

        produced = branches @ unitaries[node].T
        rows = node * per_node + np.arange(per_node)
        plus[rows] = minus[rows] = finish(produced, node)
        plus[rows[sel]], minus[rows[sel]] = dists[0], dists[1]
        branches = _split_reset(produced) if mps else produced

    dist = np.sum(np.abs(branches) ** 2, axis=-1) if mps else np.abs(branches[0]) ** 2
    return dist, plus, minus
