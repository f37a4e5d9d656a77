"""Brownian increments for both SDE classes, and covariation estimates.

Random streams: every (replicate, particle) gets its own ``numpy`` PCG64
generator seeded from ``SeedSequence(seed, spawn_key=(domain, replicate,
particle))``. Normal variates come from ``Generator.standard_normal``
(numpy's ziggurat sampler), scaled by ``sqrt(dt)``. For a fixed numpy major
version this makes every array bit-reproducible from ``seed`` alone, and
distinct replicates or particles can be drawn in any order or in parallel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .consistency import relative_coordinates
from .errors import InvalidDimensionError
from .index import adjacent_positions, check_n, enumerate_pairs, incidence_matrix, n_pairs
from .transform import apply_R_inverse

PARTICLE_DOMAIN = 0
AUXILIARY_DOMAIN = 1
MIN_COVARIATION_STEPS = 100


def _check_shape(n, d, dt, steps):
    check_n(n)
    if int(d) != d or d < 1:
        raise InvalidDimensionError(f"spatial dimension must be >= 1, got {d!r}")
    if not (np.isfinite(dt) and dt > 0):
        raise InvalidDimensionError(f"dt must be a positive number, got {dt!r}")
    if int(steps) != steps or steps < 1:
        raise InvalidDimensionError(f"steps must be >= 1, got {steps!r}")


def _stream(seed: int, domain: int, replicate: int, particle: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(domain, int(replicate), particle))
    return np.random.Generator(np.random.PCG64(ss))


def _draw(n, d, dt, steps, seed, replicate, domain) -> np.ndarray:
    out = np.empty((steps, n, d))
    scale = np.sqrt(dt)
    for i in range(n):
        out[:, i, :] = _stream(seed, domain, replicate, i).standard_normal((steps, d))
    out *= scale
    return out


@dataclass(frozen=True)
class ParticleNoise:
    n: int
    d: int
    dt: float
    steps: int
    increments: np.ndarray = field(repr=False)
    seed: int | None = None
    replicate: int = 0

    def __post_init__(self):
        if self.increments.shape != (self.steps, self.n, self.d):
            raise InvalidDimensionError(
                f"increments shape {self.increments.shape} != {(self.steps, self.n, self.d)}"
            )

    @classmethod
    def from_increments(cls, increments, dt: float, seed=None) -> "ParticleNoise":
        inc = np.asarray(increments, dtype=float)
        if inc.ndim != 3:
            raise InvalidDimensionError(f"increments need shape (steps, N, d), got {inc.shape}")
        steps, n, d = inc.shape
        _check_shape(n, d, dt, steps)
        return cls(n, d, float(dt), steps, inc, seed)

    def cumulative(self) -> np.ndarray:
        """Brownian path ``W`` at grid times, starting from zero."""
        w = np.zeros((self.steps + 1, self.n, self.d))
        np.cumsum(self.increments, axis=0, out=w[1:])
        return w


@dataclass(frozen=True)
class RelativeNoise:
    n: int
    d: int
    dt: float
    steps: int
    pair_increments: np.ndarray = field(repr=False)
    com_increments: np.ndarray = field(repr=False)
    construction: str = "derived"
    # True when the com stream is independent of the pair streams by
    # construction (auxiliary i.i.d. streams or a genuine particle noise).
    com_independent: bool = True
    seed: int | None = None

    def __post_init__(self):
        if self.pair_increments.shape != (self.steps, n_pairs(self.n), self.d):
            raise InvalidDimensionError(f"pair increments have shape {self.pair_increments.shape}")
        if self.com_increments.shape != (self.steps, self.d):
            raise InvalidDimensionError(f"com increments have shape {self.com_increments.shape}")


def sample_particle_noise(n: int, d: int, dt: float, steps: int, seed: int, replicate: int = 0) -> ParticleNoise:
    """Independent ``N(0, dt)`` increments, shape ``(steps, n, d)``."""
    _check_shape(n, d, dt, steps)
    inc = _draw(n, d, dt, steps, seed, replicate, PARTICLE_DOMAIN)
    return ParticleNoise(n, d, float(dt), int(steps), inc, seed, replicate)


def derive_relative_noise(pn: ParticleNoise) -> RelativeNoise:
    """Pair streams ``(dW[hi] - dW[lo]) / sqrt2`` and the mean stream."""
    pairs = relative_coordinates(pn.increments)
    com = pn.increments.mean(axis=-2)
    return RelativeNoise(pn.n, pn.d, pn.dt, pn.steps, pairs, com, "derived", True, pn.seed)


def sample_relative_noise(n: int, d: int, dt: float, steps: int, seed: int, replicate: int = 0) -> RelativeNoise:
    """Correlated pair streams plus an independent com stream.

    Built from auxiliary i.i.d. particle streams, so the pair covariations
    and the independence of the com stream hold exactly in law. Uses a
    separate seed domain from ``sample_particle_noise``.
    """
    _check_shape(n, d, dt, steps)
    aux = _draw(n, d, dt, steps, seed, replicate, AUXILIARY_DOMAIN)
    pairs = relative_coordinates(aux)
    com = aux.mean(axis=-2)
    return RelativeNoise(n, d, float(dt), int(steps), pairs, com, "auxiliary-iid", True, seed)


def reconstruct_particle_noise(rn: RelativeNoise) -> ParticleNoise:
    """Invert the transform step by step from adjacent pair and com increments."""
    adjacent = rn.pair_increments[:, adjacent_positions(rn.n), :]
    inc = apply_R_inverse(adjacent, rn.com_increments)
    return ParticleNoise(rn.n, rn.d, rn.dt, rn.steps, inc, rn.seed)


def reference_covariation(n: int, d: int) -> np.ndarray:
    """Expected ``<X_a, X_b>_t / t`` for the stacked (pair..., com) streams.

    Rows/columns are ordered entity-major, component-minor.
    """
    s = incidence_matrix(n)
    pair_block = (s @ s.T) / 2.0
    ent = np.zeros((n_pairs(n) + 1, n_pairs(n) + 1))
    ent[:-1, :-1] = pair_block
    ent[-1, -1] = 1.0 / n
    return np.kron(ent, np.eye(d))


@dataclass(frozen=True)
class CovariationEstimate:
    labels: list[tuple[str, int]]
    estimate: np.ndarray
    stderr: np.ndarray
    reference: np.ndarray
    com_scaled_variance: np.ndarray
    com_scaled_stderr: np.ndarray
    steps: int

    @property
    def zscores(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (self.estimate - self.reference) / self.stderr
        return np.where(self.stderr > 0, z, np.where(self.estimate == self.reference, 0.0, np.inf))

    @property
    def max_abs_z(self) -> float:
        return float(np.abs(self.zscores).max())

    @property
    def com_zscores(self) -> np.ndarray:
        return (self.com_scaled_variance - 1.0) / self.com_scaled_stderr

    def within(self, k: float = 4.0) -> bool:
        return self.max_abs_z <= k and bool(np.all(np.abs(self.com_zscores) <= k))

    def worst(self):
        """Label pair, estimate and reference of the largest |z| entry."""
        a, b = np.unravel_index(np.argmax(np.abs(self.zscores)), self.estimate.shape)
        return self.labels[a], self.labels[b], self.estimate[a, b], self.reference[a, b]


def estimate_covariation(rn: RelativeNoise) -> CovariationEstimate:
    """Empirical ``sum_k dX_a dX_b / (steps dt)`` with per-entry standard errors.

    The standard error of each entry is the sample standard deviation of the
    per-step products ``dX_a dX_b / dt`` over ``sqrt(steps)``. Also returns
    the per-component variance of the sqrt(N)-scaled com stream in units of
    ``dt`` (reference value 1).
    """
    if rn.steps < MIN_COVARIATION_STEPS:
        raise InvalidDimensionError(
            f"need at least {MIN_COVARIATION_STEPS} steps for standard errors, got {rn.steps}"
        )
    steps, dt = rn.steps, rn.dt
    x = np.concatenate([rn.pair_increments, rn.com_increments[:, None, :]], axis=1)
    x = x.reshape(steps, -1) / np.sqrt(dt)
    m1 = x.T @ x / steps
    x2 = x * x
    m2 = x2.T @ x2 / steps
    var = np.maximum(m2 - m1 * m1, 0.0) * steps / (steps - 1)
    se = np.sqrt(var / steps)

    com = rn.com_increments * np.sqrt(rn.n / dt)
    c2 = com * com
    com_var = c2.mean(axis=0)
    com_se = c2.std(axis=0, ddof=1) / np.sqrt(steps)

    labels = [(p.label, ell) for p in enumerate_pairs(rn.n) for ell in range(rn.d)]
    labels += [("com", ell) for ell in range(rn.d)]
    return CovariationEstimate(
        labels, m1, se, reference_covariation(rn.n, rn.d), com_var, com_se, steps
    )
