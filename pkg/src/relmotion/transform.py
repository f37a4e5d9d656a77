"""The adjacent-difference / centre-of-mass transform and its exact inverse.

``R`` sends particle states ``(z1, ..., zN)`` to the adjacent relative
coordinates ``(z(2,1), ..., z(N,N-1))`` followed by the centre of mass. It
factors as ``R = diag(1/sqrt2, ..., 1/sqrt2, 1/N) @ Q`` with ``Q`` an integer
matrix whose inverse ``M`` has entries in ``(1/N) * Z``; the inverse of ``R``
is then ``M @ diag(sqrt2, ..., sqrt2, N)``.

State arrays have shape ``(..., N, d)``: particle axis second to last,
spatial components last. Leading axes (time steps, replicates) broadcast.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError
from .index import check_n

SQRT2 = np.sqrt(2.0)

KINDS = ("R", "Rinv", "Q", "M")


@dataclass(frozen=True)
class TransformMatrix:
    n: int
    entries: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        self.entries.setflags(write=False)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __matmul__(self, other):
        return self.entries @ np.asarray(other)


def build_R(n: int) -> TransformMatrix:
    n = check_n(n)
    r = np.zeros((n, n))
    for k in range(n - 1):
        r[k, k] = -1.0 / SQRT2
        r[k, k + 1] = 1.0 / SQRT2
    r[n - 1, :] = 1.0 / n
    return TransformMatrix(n, r, "R")


def build_R_inverse(n: int) -> TransformMatrix:
    n = check_n(n)
    i = np.arange(1, n + 1)[:, None]
    j = np.arange(1, n + 1)[None, :]
    rinv = np.where(i <= j, -SQRT2 * (n - j) / n, SQRT2 * j / n)
    rinv[:, n - 1] = 1.0
    return TransformMatrix(n, rinv, "Rinv")


def build_Q(n: int) -> TransformMatrix:
    n = check_n(n)
    return TransformMatrix(n, _q_int(n), "Q")


def scaled_M(n: int) -> np.ndarray:
    """``N * M`` as an int64 matrix (every entry of ``M`` is a multiple of 1/N)."""
    n = check_n(n)
    i = np.arange(1, n + 1)[:, None]
    j = np.arange(1, n + 1)[None, :]
    nm = np.where(i <= j, -(n - j), j).astype(np.int64)
    nm[:, n - 1] = 1
    return nm


def build_M(n: int) -> TransformMatrix:
    return TransformMatrix(n, scaled_M(n) / n, "M")


def _q_int(n: int) -> np.ndarray:
    q = np.zeros((n, n), dtype=np.int64)
    for k in range(n - 1):
        q[k, k] = -1
        q[k, k + 1] = 1
    q[n - 1, :] = 1
    return q


@dataclass(frozen=True)
class InverseReport:
    n: int
    max_abs_error: float
    exact_QM: bool


def verify_inverse(n: int) -> InverseReport:
    """Check ``R @ Rinv`` numerically and ``Q @ (N M) == N Id`` exactly."""
    n = check_n(n)
    r = build_R(n).entries
    rinv = build_R_inverse(n).entries
    eye = np.eye(n)
    err = max(np.abs(r @ rinv - eye).max(), np.abs(rinv @ r - eye).max())
    exact = bool(np.array_equal(_q_int(n) @ scaled_M(n), n * np.eye(n, dtype=np.int64)))
    return InverseReport(n, float(err), exact)


def _as_states(states) -> np.ndarray:
    z = np.asarray(states, dtype=float)
    if z.ndim < 2:
        raise InvalidDimensionError(f"states need shape (..., N, d), got {z.shape}")
    check_n(z.shape[-2])
    if z.shape[-1] < 1:
        raise InvalidDimensionError("spatial dimension must be >= 1")
    return z


def apply_R(states) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(adjacent, com)`` for states of shape ``(..., N, d)``.

    ``adjacent[..., k, :] = (z[k+1] - z[k]) / sqrt2`` and ``com`` is the mean
    over particles.
    """
    z = _as_states(states)
    adjacent = (z[..., 1:, :] - z[..., :-1, :]) / SQRT2
    com = z.mean(axis=-2)
    return adjacent, com


def apply_R_inverse(adjacent, com) -> np.ndarray:
    """Rebuild particle states from adjacent coordinates and centre of mass.

    Uses the closed form of the inverse: the first particle sits at
    ``com - (sqrt2/N) * sum_j (N-j) a_j`` and each later one adds ``sqrt2 a_k``.
    """
    a = np.asarray(adjacent, dtype=float)
    c = np.asarray(com, dtype=float)
    if a.ndim < 2 or a.shape[-2] < 1:
        raise InvalidDimensionError(f"adjacent needs shape (..., N-1, d), got {a.shape}")
    if c.shape != a.shape[:-2] + a.shape[-1:]:
        raise InvalidDimensionError(
            f"centre of mass shape {c.shape} does not match adjacent shape {a.shape}"
        )
    n = a.shape[-2] + 1
    weights = (n - np.arange(1, n)) / n
    first = c - SQRT2 * np.einsum("k,...kd->...d", weights, a)
    steps = np.cumsum(SQRT2 * a, axis=-2)
    z = np.concatenate([first[..., None, :], first[..., None, :] + steps], axis=-2)
    return z
