import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_relative_drift(values, coeffs, n):
    """Visit every (p, q) pair and keep the nonzero sigma products."""
    from relmotion.index import enumerate_pairs, sigma

    pairs = enumerate_pairs(n)
    out = np.zeros_like(values)
    for a, p in enumerate(pairs):
        for b, q in enumerate(pairs):
            w = int(sigma(p, n) @ sigma(q, n))
            if w:
                out[a] -= w * coeffs[b] * values[b]
    return out


def brute_particle_drift(z, coeff_of):
    n = len(z)
    out = np.zeros_like(z)
    for i in range(n):
        for j in range(n):
            if j != i:
                out[i] -= coeff_of(max(i, j) + 1, min(i, j) + 1) * (z[i] - z[j])
    return out
