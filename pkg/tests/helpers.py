import numpy as np
from scipy import stats

from qgan.discriminator import Discriminator, init_discriminator
from qgan.statevector import StateVector


def constant_discriminator(input_dim, value, hidden=3):
    logit = np.log(value / (1 - value))
    return Discriminator(np.zeros((hidden, input_dim)), np.zeros(hidden),
                         np.zeros((1, hidden)), np.array([logit]))


def random_discriminator(input_dim, rng, hidden=8):
    d = init_discriminator(input_dim, hidden, rng)
    d.b1 += rng.normal(scale=0.5, size=hidden)
    d.b2 += rng.normal(scale=0.5, size=1)
    return d


def random_state(n, rng):
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(n, amps / np.linalg.norm(amps))


def chi_square_pvalue(counts, probs):
    """Pearson test of ``counts`` against ``probs``; bins expecting < 5 are pooled."""
    counts, probs = np.asarray(counts, float), np.asarray(probs, float)
    expected = probs * counts.sum()
    big = expected >= 5
    obs = np.append(counts[big], counts[~big].sum())
    exp = np.append(expected[big], expected[~big].sum())
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    return stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue
