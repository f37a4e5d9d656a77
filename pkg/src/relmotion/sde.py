"""Euler-Maruyama integration of the particle and relative-motion SDEs.

Particle class, for ``i = 1..N``::

    dZ^i = -sum_{j != i} a_{ij}(t) (Z^i - Z^j) dt + dW^i

Relative class, for each pair ``p``::

    dZ^p = -sum_q sigma(p).sigma(q) a_q(t) Z^q dt + dW^p

Drift coefficients are symmetric by construction: a ``DriftSpec`` returns one
coefficient per unordered pair, in canonical pair order. Coefficients may
depend on the step index, the time and the pair separations
``z[hi] - z[lo]`` of the current state. Both classes can compute those
separations from their own state (the relative class as ``sqrt2 * Z^p``), so
the same spec drives both sides of the correspondence.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .consistency import DEFAULT_TOL, RelativeFamily, is_difference_consistent
from .errors import ConsistencyError, DriftEvaluationError, InvalidDimensionError
from .index import check_n, enumerate_pairs, incidence_matrix, n_pairs, pair_arrays
from .noise import ParticleNoise, RelativeNoise
from .transform import SQRT2

# Coefficient callback: (step, t, separations[P, d]) -> coefficients[P].
# Separations are particle-scale differences z[hi] - z[lo]. History-dependent
# drifts would need the path so far; not supported yet.
CoefficientFn = Callable[[int, float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DriftSpec:
    kind: str
    func: Callable | None = None
    value: float = 0.0
    name: str = ""

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def coefficients(self, step: int, t: float, separations: np.ndarray) -> np.ndarray:
        p = separations.shape[0]
        if self.kind == "constant":
            c = np.full(p, self.value)
        elif self.kind == "kernel":
            c = self.func(np.sqrt(np.einsum("pd,pd->p", separations, separations)))
        elif self.kind == "time_varying":
            c = np.full(p, float(self.func(t)))
        elif self.kind == "custom":
            c = self.func(step, t, separations)
        else:
            raise DriftEvaluationError(f"unknown drift kind {self.kind!r}")
        c = np.asarray(c, dtype=float)
        if c.ndim == 0:
            c = np.full(p, float(c))
        if c.shape != (p,):
            raise DriftEvaluationError(f"drift returned shape {c.shape}, expected ({p},)")
        if np.isnan(c).any():
            raise DriftEvaluationError(f"{self.describe()} produced NaN coefficients at t={t}")
        return c

    def describe(self) -> str:
        if self.kind == "constant":
            return f"constant:{self.value!r}"
        return f"{self.kind}:{self.name or getattr(self.func, '__name__', '?')}"


def constant(lam: float) -> DriftSpec:
    return DriftSpec("constant", value=float(lam))


def kernel(g: Callable[[np.ndarray], np.ndarray], name: str = "") -> DriftSpec:
    """Coefficient ``g(|z[hi] - z[lo]|)``; ``g`` must accept an array of distances."""
    return DriftSpec("kernel", func=g, name=name)


def time_varying(h: Callable[[float], float], name: str = "") -> DriftSpec:
    return DriftSpec("time_varying", func=h, name=name)


def custom(fn: CoefficientFn, name: str = "") -> DriftSpec:
    return DriftSpec("custom", func=fn, name=name)


def lorentzian(scale: float = 1.0, width: float = 1.0):
    def g(r):
        return scale / (1.0 + (r / width) ** 2)
    return g


def gaussian(scale: float = 1.0, width: float = 1.0):
    def g(r):
        return scale * np.exp(-0.5 * (r / width) ** 2)
    return g


def cosine(base: float = 1.0, amp: float = 0.5, freq: float = 1.0):
    def h(t):
        return base + amp * np.cos(freq * t)
    return h


def exp_decay(scale: float = 1.0, tau: float = 1.0):
    def h(t):
        return scale * np.exp(-t / tau)
    return h


def linear(base: float = 0.0, slope: float = 1.0):
    def h(t):
        return base + slope * t
    return h


KERNELS = {"lorentzian": lorentzian, "gaussian": gaussian}
TIME_PROFILES = {"cosine": cosine, "exp_decay": exp_decay, "linear": linear}


def named_kernel(name: str, **params) -> DriftSpec:
    if name not in KERNELS:
        raise KeyError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}")
    return kernel(KERNELS[name](**params), name=name)


def named_time_profile(name: str, **params) -> DriftSpec:
    if name not in TIME_PROFILES:
        raise KeyError(f"unknown time profile {name!r}; choose from {sorted(TIME_PROFILES)}")
    return time_varying(TIME_PROFILES[name](**params), name=name)


def _particle_drift(z, coeff, s, hi, lo):
    w = coeff[:, None] * (z[hi] - z[lo])
    return -(s.T @ w)


def _relative_drift(v, coeff, s, hi, lo):
    u = s.T @ (coeff[:, None] * v)
    return u[lo] - u[hi]


def drift_particles(states, a: DriftSpec, t: float = 0.0, step: int = 0) -> np.ndarray:
    """``-sum_{j != i} a_{ij} (z^i - z^j)`` for every particle, shape ``(N, d)``."""
    z = np.asarray(states, dtype=float)
    if z.ndim != 2:
        raise InvalidDimensionError(f"states need shape (N, d), got {z.shape}")
    n = check_n(z.shape[0])
    hi, lo = pair_arrays(n)
    coeff = a.coefficients(step, t, z[hi] - z[lo])
    return _particle_drift(z, coeff, incidence_matrix(n), hi, lo)


def drift_relative(f: RelativeFamily, a: DriftSpec, t: float = 0.0, step: int = 0) -> RelativeFamily:
    """``-sum_q sigma(p).sigma(q) a_q z^q`` for every pair ``p``.

    Evaluated through the incidence factorisation, so pairs with a zero
    sigma product never contribute a term.
    """
    if not isinstance(f, RelativeFamily):
        raise InvalidDimensionError(f"expected a RelativeFamily, got {type(f).__name__}")
    hi, lo = pair_arrays(f.n)
    coeff = a.coefficients(step, t, SQRT2 * f.values)
    return RelativeFamily(f.n, _relative_drift(f.values, coeff, incidence_matrix(f.n), hi, lo))


@dataclass
class PathBundle:
    """Trajectories on the grid ``t_k = t0 + k dt``.

    ``states`` has shape ``(len(times), entities, d)``. When a run explodes
    the arrays stop at the last finite state and ``exploded_at`` holds the
    index of the first non-finite one.
    """

    kind: str
    n: int
    dt: float
    times: np.ndarray
    states: np.ndarray
    labels: list[str]
    noise: ParticleNoise | RelativeNoise | None = field(default=None, repr=False)
    drift_log: np.ndarray | None = field(default=None, repr=False)
    exploded_at: int | None = None

    @property
    def exploded(self) -> bool:
        return self.exploded_at is not None

    @property
    def d(self) -> int:
        return self.states.shape[-1]

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    def diagnostic(self) -> str:
        if not self.exploded:
            return "ok"
        return f"exploded: non-finite state at step {self.exploded_at} (t={self.t0 + self.exploded_at * self.dt:g})"

    @property
    def t0(self) -> float:
        return float(self.times[0]) if len(self.times) else 0.0


def particle_labels(n: int) -> list[str]:
    return [f"p{i}" for i in range(1, n + 1)]


def pair_labels(n: int) -> list[str]:
    return [p.label for p in enumerate_pairs(n)]


def _integrate(x0, increments, dt, rhs, t0, log_drift):
    steps = increments.shape[0]
    out = np.empty((steps + 1,) + x0.shape)
    out[0] = x0
    log = np.empty((steps,) + x0.shape) if log_drift else None
    x = out[0]
    bad = None
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            drift = rhs(k, t0 + k * dt, x)
            if log is not None:
                log[k] = drift
            nxt = x + drift * dt + increments[k]
            if not np.isfinite(nxt).all():
                bad = k + 1
                break
            out[k + 1] = nxt
            x = out[k + 1]
    if bad is not None:
        out = out[:bad]
        if log is not None:
            log = log[:bad - 1]
    return out, log, bad


def _rhs(a: DriftSpec, n: int, relative: bool):
    s = incidence_matrix(n)
    hi, lo = pair_arrays(n)
    fixed = a.coefficients(0, 0.0, np.zeros((n_pairs(n), 1))) if a.is_constant else None

    if relative:
        def rhs(k, t, v):
            c = fixed if fixed is not None else a.coefficients(k, t, SQRT2 * v)
            return _relative_drift(v, c, s, hi, lo)
    else:
        def rhs(k, t, z):
            c = fixed if fixed is not None else a.coefficients(k, t, z[hi] - z[lo])
            return _particle_drift(z, c, s, hi, lo)
    return rhs


def simulate_particles(z0, a: DriftSpec, noise: ParticleNoise, t0: float = 0.0, log_drift: bool = False) -> PathBundle:
    """Euler-Maruyama for the particle class driven by ``noise``."""
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (noise.n, noise.d):
        raise InvalidDimensionError(f"initial states shape {z0.shape} != {(noise.n, noise.d)}")
    rhs = _rhs(a, noise.n, relative=False)
    states, log, bad = _integrate(z0, noise.increments, noise.dt, rhs, t0, log_drift)
    times = t0 + noise.dt * np.arange(len(states))
    return PathBundle("particles", noise.n, noise.dt, times, states, particle_labels(noise.n),
                      noise, log, bad)


def simulate_relative(f0: RelativeFamily, com0, a: DriftSpec, noise: RelativeNoise,
                      t0: float = 0.0, log_drift: bool = False, tol: float = DEFAULT_TOL):
    """Euler-Maruyama for the relative class; returns ``(pair path, com path)``.

    ``f0`` must be difference-consistent. The com path is driftless:
    ``com0`` plus the cumulative com increments.
    """
    if not isinstance(f0, RelativeFamily):
        raise InvalidDimensionError(f"expected a RelativeFamily, got {type(f0).__name__}")
    if (f0.n, f0.d) != (noise.n, noise.d):
        raise InvalidDimensionError(f"initial family is N={f0.n}, d={f0.d}; noise is N={noise.n}, d={noise.d}")
    report = is_difference_consistent(f0, tol)
    if not report.ok:
        raise ConsistencyError(
            f"initial family is not difference-consistent (violation {report.max_violation:.3e})",
            max_violation=report.max_violation, step=0,
        )
    com0 = np.asarray(com0, dtype=float)
    if com0.shape != (noise.d,):
        raise InvalidDimensionError(f"com0 must have shape ({noise.d},), got {com0.shape}")
    rhs = _rhs(a, noise.n, relative=True)
    states, log, bad = _integrate(f0.values, noise.pair_increments, noise.dt, rhs, t0, log_drift)
    com = np.cumsum(np.concatenate([com0[None, :], noise.com_increments]), axis=0)[: len(states)]
    times = t0 + noise.dt * np.arange(len(states))
    path = PathBundle("relative", noise.n, noise.dt, times, states, pair_labels(noise.n),
                      noise, log, bad)
    return path, com
