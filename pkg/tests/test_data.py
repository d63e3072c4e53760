import numpy as np
import pytest
from hypothesis import given, strategies as st

from qgan.data import bas_patterns, is_valid, sample_real_batch, valid_mask, write_patterns
from qgan.errors import ResourceError, ShapeError

from helpers import chi_square_pvalue


def test_two_by_two_patterns():
    assert set(bas_patterns(2).pattern_strings) == {"0000", "1111", "0101", "1010", "0011", "1100"}


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_pattern_count(m):
    assert len(bas_patterns(m).patterns) == 2 ** (m + 1) - 2


def test_brute_force_enumeration():
    spec = bas_patterns(3)
    expected = set()
    for x in range(2**9):
        img = np.array([int(b) for b in format(x, "09b")]).reshape(3, 3)
        if (img == img[:, :1]).all() or (img == img[:1, :]).all():
            expected.add(x)
    assert set(spec.patterns) == expected


@pytest.mark.parametrize("m", [2, 3, 4])
def test_transpose_closure(m):
    spec = bas_patterns(m)
    for s in spec.pattern_strings:
        img = np.array(list(s)).reshape(m, m)
        assert is_valid(spec, "".join(img.T.ravel()))


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_target_distribution(m):
    spec = bas_patterns(m)
    dist = spec.target_dist
    assert dist.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(dist[list(spec.patterns)], 1 / (2 ** (m + 1) - 2))
    assert np.count_nonzero(dist) == len(spec.patterns)


@pytest.mark.parametrize("m", [0, 5])
def test_size_guard(m):
    with pytest.raises(ResourceError):
        bas_patterns(m)


def test_is_valid_examples():
    spec = bas_patterns(2)
    assert is_valid(spec, "0000")
    assert not is_valid(spec, "0110")
    assert is_valid(spec, "1100")
    assert is_valid(spec, 0b0101) and not is_valid(spec, 0b0111)
    with pytest.raises(ShapeError):
        is_valid(spec, "010")


@given(st.integers(0, 15))
def test_valid_mask_agrees_with_is_valid(x):
    spec = bas_patterns(2)
    assert bool(valid_mask(spec, [x])[0]) == is_valid(spec, x)


def test_real_batch_is_uniform_over_patterns(rng):
    spec = bas_patterns(2)
    draws = sample_real_batch(spec, 100_000, rng)
    assert valid_mask(spec, draws).all()
    counts = np.array([(draws == p).sum() for p in spec.patterns])
    expected = np.full(len(counts), 1 / len(counts))
    sigma = np.sqrt(100_000 * expected * (1 - expected))
    assert np.all(np.abs(counts - 100_000 * expected) < 3 * sigma)
    assert chi_square_pvalue(counts, expected) > 1e-3


def test_real_batch_guard(rng):
    with pytest.raises(ValueError):
        sample_real_batch(bas_patterns(2), 0, rng)


def test_write_patterns(tmp_path):
    path = tmp_path / "bas.txt"
    write_patterns(bas_patterns(2), path)
    assert path.read_text().split() == bas_patterns(2).pattern_strings
