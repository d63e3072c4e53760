"""Bars-and-Stripes images.

Pixel ``(r, c)`` of an ``m x m`` image is bit ``r*m + c`` of the pattern, and
bit 0 is the most significant bit of the pattern's integer index (the same
convention as the simulator, so qubit ``k`` holds pixel ``k``).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ResourceError, ShapeError
from .statevector import bits_to_index, index_to_bits

MAX_SIDE = 4


@dataclass(frozen=True)
class BasSpec:
    m: int
    patterns: tuple[int, ...]  # sorted outcome indices

    @property
    def num_bits(self) -> int:
        return self.m * self.m

    @property
    def pattern_strings(self) -> list[str]:
        return [index_to_bits(p, self.num_bits) for p in self.patterns]

    @property
    def target_dist(self) -> np.ndarray:
        dist = np.zeros(2**self.num_bits)
        dist[list(self.patterns)] = 1.0 / len(self.patterns)
        return dist


def _image_to_index(img: np.ndarray) -> int:
    return bits_to_index("".join(str(int(b)) for b in img.ravel()))


def bas_patterns(m: int) -> BasSpec:
    if not 1 <= m <= MAX_SIDE:
        raise ResourceError(f"m must be in [1, {MAX_SIDE}], got {m}")
    found = set()
    for value in range(2**m):
        line = np.array([int(b) for b in format(value, f"0{m}b")])
        found.add(_image_to_index(np.tile(line, (m, 1))))  # bars: each column constant
        found.add(_image_to_index(np.tile(line[:, None], (1, m))))  # stripes: each row constant
    return BasSpec(m, tuple(sorted(found)))


def is_valid(spec: BasSpec, x) -> bool:
    """Membership test for a bitstring (``str``) or outcome index (``int``)."""
    if isinstance(x, str):
        if len(x) != spec.num_bits:
            raise ShapeError(f"expected {spec.num_bits} bits, got {len(x)}")
        x = bits_to_index(x)
    return int(x) in spec.patterns


def valid_mask(spec: BasSpec, indices) -> np.ndarray:
    return np.isin(np.asarray(indices), spec.patterns)


def sample_real_batch(spec: BasSpec, batch: int, rng: np.random.Generator) -> np.ndarray:
    """``batch`` outcome indices drawn uniformly, with replacement, from the patterns."""
    if batch < 1:
        raise ValueError("batch must be >= 1")
    return np.asarray(spec.patterns)[rng.integers(len(spec.patterns), size=batch)]


def write_patterns(spec: BasSpec, path) -> None:
    Path(path).write_text("\n".join(spec.pattern_strings) + "\n")
