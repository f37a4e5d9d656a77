"""Difference-consistent families of relative coordinates.

A family ``{z^p}`` over all pairs is difference-consistent when
``z^(i',m) + z^(m,j) == z^(i',j)`` for every chaining combination. Exactly
those families arise as ``(z[hi] - z[lo]) / sqrt2`` from particle states, and
each is fixed by its adjacent entries through telescoping sums.

Array-level helpers take values of shape ``(..., P, d)`` with ``P = N(N-1)/2``
pairs in canonical order, so whole paths can be checked in one call.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ConsistencyError, IncompleteFamilyError, InvalidDimensionError
from .index import (
    IndexPair,
    adjacent_positions,
    chain_triples,
    check_n,
    enumerate_pairs,
    incidence_matrix,
    n_pairs,
    pair_arrays,
    pair_index,
)
from .transform import SQRT2, apply_R_inverse

DEFAULT_TOL = 1e-9


def n_from_pair_count(p: int) -> int:
    n = int(round((1 + np.sqrt(1 + 8 * p)) / 2))
    if n < 2 or n_pairs(n) != p:
        raise IncompleteFamilyError(f"{p} entries is not N(N-1)/2 for any N >= 2")
    return n


@dataclass(frozen=True)
class RelativeFamily:
    """Values at every pair of ``E_N``, stored in canonical pair order."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        check_n(self.n)
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != n_pairs(self.n) or v.shape[1] < 1:
            raise IncompleteFamilyError(
                f"family for N={self.n} needs shape ({n_pairs(self.n)}, d), got {v.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __getitem__(self, p) -> np.ndarray:
        return self.values[pair_index(p, self.n)]

    def items(self):
        return zip(enumerate_pairs(self.n), self.values)

    def as_dict(self) -> dict[IndexPair, np.ndarray]:
        return dict(self.items())

    @classmethod
    def from_mapping(cls, n: int, mapping: Mapping) -> "RelativeFamily":
        pairs = enumerate_pairs(n)
        keys = {IndexPair(*k) for k in mapping}
        missing = set(pairs) - keys
        extra = keys - set(pairs)
        if missing or extra:
            raise IncompleteFamilyError(
                f"family keys must be exactly E_{n}; missing={sorted(missing)} extra={sorted(extra)}"
            )
        rows = [np.atleast_1d(np.asarray(mapping[p], dtype=float)) for p in pairs]
        return cls(n, np.stack(rows))

    @classmethod
    def from_array(cls, values) -> "RelativeFamily":
        v = np.asarray(values, dtype=float)
        if v.ndim != 2:
            raise IncompleteFamilyError(f"family array needs shape (P, d), got {v.shape}")
        return cls(n_from_pair_count(v.shape[0]), v)


def relative_coordinates(states) -> np.ndarray:
    """All pair coordinates ``(z[hi] - z[lo]) / sqrt2`` for states ``(..., N, d)``."""
    z = np.asarray(states, dtype=float)
    hi, lo = pair_arrays(z.shape[-2])
    return (z[..., hi, :] - z[..., lo, :]) / SQRT2


def family_from_states(states) -> RelativeFamily:
    z = np.asarray(states, dtype=float)
    if z.ndim != 2:
        raise InvalidDimensionError(f"states need shape (N, d), got {z.shape}")
    return RelativeFamily(z.shape[0], relative_coordinates(z))


def consistency_residuals(values, n: int) -> np.ndarray:
    """Max-norm violation over all chaining combinations, per leading index.

    ``values`` has shape ``(..., P, d)``; the result has shape ``(...)``.
    """
    v = np.asarray(values, dtype=float)
    a, b, c = chain_triples(n)
    if len(a) == 0:
        return np.zeros(v.shape[:-2])
    r = np.abs(v[..., a, :] + v[..., b, :] - v[..., c, :])
    return r.max(axis=(-2, -1))


def consistency_threshold(values, tol: float, scaled: bool) -> np.ndarray:
    if not scaled:
        return np.asarray(tol)
    v = np.asarray(values)
    scale = np.abs(v).max(axis=(-2, -1)) if v.size else np.zeros(v.shape[:-2])
    return tol * np.maximum(1.0, scale)


@dataclass(frozen=True)
class ConsistencyReport:
    ok: bool
    max_violation: float
    threshold: float


def is_difference_consistent(f: RelativeFamily, tol: float = DEFAULT_TOL, scaled: bool = True) -> ConsistencyReport:
    """Check every chaining identity of ``f``.

    The acceptance threshold is ``tol * max(1, max|f|)`` when ``scaled`` is
    true, else ``tol`` itself. ``max_violation`` is always the raw max-norm
    residual.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    if not isinstance(f, RelativeFamily):
        raise IncompleteFamilyError(f"expected a RelativeFamily, got {type(f).__name__}")
    worst = float(consistency_residuals(f.values, f.n))
    thr = float(consistency_threshold(f.values, tol, scaled))
    return ConsistencyReport(worst <= thr, worst, thr)


def telescope(adjacent) -> np.ndarray:
    """Array form of ``telescope_expand`` for shape ``(..., N-1, d)``.

    Canonical order groups pairs by lower index, so the block for ``lo``
    is the running sum of ``adjacent[lo-1:]``.
    """
    a = np.asarray(adjacent, dtype=float)
    if a.ndim < 2 or a.shape[-2] < 1:
        raise InvalidDimensionError(f"adjacent needs shape (..., N-1, d), got {a.shape}")
    blocks = [np.cumsum(a[..., k:, :], axis=-2) for k in range(a.shape[-2])]
    return np.concatenate(blocks, axis=-2)


def telescope_expand(adjacent) -> RelativeFamily:
    a = np.asarray(adjacent, dtype=float)
    if a.ndim != 2:
        raise InvalidDimensionError(f"adjacent needs shape (N-1, d), got {a.shape}")
    return RelativeFamily(a.shape[0] + 1, telescope(a))


def project_adjacent(f: RelativeFamily) -> np.ndarray:
    """Adjacent entries ``(z(2,1), ..., z(N,N-1))``; consistency is not checked."""
    if not isinstance(f, RelativeFamily):
        raise IncompleteFamilyError(f"expected a RelativeFamily, got {type(f).__name__}")
    return f.values[adjacent_positions(f.n)].copy()


def recover_states(f: RelativeFamily, com, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Particle states whose relative family is ``f`` and whose mean is ``com``.

    Raises ``ConsistencyError`` if ``f`` is not difference-consistent; for
    N >= 3 the pair equations have no solution otherwise.
    """
    report = is_difference_consistent(f, tol)
    if not report.ok:
        raise ConsistencyError(
            f"family is not difference-consistent: violation {report.max_violation:.3e} "
            f"> {report.threshold:.3e}",
            max_violation=report.max_violation,
        )
    c = np.asarray(com, dtype=float)
    if c.shape != (f.d,):
        raise InvalidDimensionError(f"centre of mass must have shape ({f.d},), got {c.shape}")
    return apply_R_inverse(project_adjacent(f), c)


def sigma_mix(values, n: int) -> np.ndarray:
    """``q^i = -sum_j sigma(i).sigma(j) p^j`` for values of shape ``(..., P, d)``.

    Computed as ``-S S^T p`` with ``S`` the incidence matrix: the inner
    product collapses the pair values onto particles, the outer one takes
    differences again.
    """
    s = incidence_matrix(n)
    v = np.asarray(values, dtype=float)
    per_particle = np.einsum("pk,...pd->...kd", s, v)
    hi, lo = pair_arrays(n)
    return per_particle[..., lo, :] - per_particle[..., hi, :]


def lemma_dc_map(p: RelativeFamily) -> RelativeFamily:
    """Send an arbitrary family to a difference-consistent one.

    For N = 2 there is a single pair and the map is ``q = -2 p``; the
    consistency statement is vacuous there but the map is still defined.
    """
    if not isinstance(p, RelativeFamily):
        raise IncompleteFamilyError(f"expected a RelativeFamily, got {type(p).__name__}")
    return RelativeFamily(p.n, sigma_mix(p.values, p.n))
