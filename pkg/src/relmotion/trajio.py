"""Trajectory CSV files.

Long format, one row per (time, entity)::

    t,entity,c0,c1,...
    0,p1,0.5,1.25
    0,p2,...

Entities are ``p<i>`` for particles, ``r<hi>_<lo>`` for pair coordinates and
``com`` for the centre of mass. Floats are written with 17 significant digits
so a write/read cycle is exact.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .index import enumerate_pairs

FLOAT_FMT = "%.17g"

_PARTICLE = re.compile(r"^p(\d+)$")
_PAIR = re.compile(r"^r(\d+)_(\d+)$")


class TrajectoryFormatError(ValueError):
    pass


@dataclass
class Trajectory:
    times: np.ndarray
    labels: list[str]
    states: np.ndarray  # (len(times), len(labels), d)

    @property
    def d(self) -> int:
        return self.states.shape[-1]

    @property
    def kind(self) -> str:
        """``particles``, ``relative`` or ``com`` from the entity labels."""
        if self.labels == ["com"]:
            return "com"
        if all(_PARTICLE.match(x) for x in self.labels):
            want = [f"p{i}" for i in range(1, len(self.labels) + 1)]
            if self.labels != want:
                raise TrajectoryFormatError(f"particle labels must be p1..pN in order, got {self.labels}")
            return "particles"
        if all(_PAIR.match(x) for x in self.labels):
            n = _pair_n(self.labels)
            if self.labels != [p.label for p in enumerate_pairs(n)]:
                raise TrajectoryFormatError("pair labels must cover all pairs in canonical order")
            return "relative"
        raise TrajectoryFormatError(f"cannot classify entities {self.labels[:5]}")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0


def _pair_n(labels):
    his = [int(_PAIR.match(x).group(1)) for x in labels]
    return max(his) if his else 0


def format_rows(times, labels, states) -> list[str]:
    lines = []
    for k, t in enumerate(times):
        ts = FLOAT_FMT % t
        for e, label in enumerate(labels):
            comps = ",".join(FLOAT_FMT % x for x in states[k, e])
            lines.append(f"{ts},{label},{comps}")
    return lines


def write_trajectory(path, times, labels, states) -> None:
    states = np.asarray(states, dtype=float)
    d = states.shape[-1]
    header = "t,entity," + ",".join(f"c{i}" for i in range(d))
    body = format_rows(times, labels, states)
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        if body:
            fh.write("\n".join(body) + "\n")


def read_trajectory(path) -> Trajectory:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise TrajectoryFormatError(f"{path}: empty file") from None
        if len(header) < 3 or header[:2] != ["t", "entity"]:
            raise TrajectoryFormatError(f"{path}: header must start with 't,entity,c0'")
        comps = header[2:]
        if comps != [f"c{i}" for i in range(len(comps))]:
            raise TrajectoryFormatError(f"{path}: component columns must be c0..c{{d-1}}")
        d = len(comps)
        times, labels, rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 2:
                raise TrajectoryFormatError(f"{path}:{lineno}: expected {d + 2} fields, got {len(row)}")
            try:
                t = float(row[0])
                vals = [float(x) for x in row[2:]]
            except ValueError as exc:
                raise TrajectoryFormatError(f"{path}:{lineno}: {exc}") from None
            times.append(t)
            labels.append(row[1].strip())
            rows.append(vals)
    if not rows:
        raise TrajectoryFormatError(f"{path}: no data rows")
    # entities repeat in a fixed order at every time
    first_t = times[0]
    ents = []
    for t, lab in zip(times, labels):
        if t != first_t:
            break
        ents.append(lab)
    m = len(ents)
    if len(rows) % m:
        raise TrajectoryFormatError(f"{path}: row count {len(rows)} is not a multiple of {m} entities")
    steps = len(rows) // m
    if labels != ents * steps:
        raise TrajectoryFormatError(f"{path}: entity order changes between time steps")
    tarr = np.array(times[::m])
    if any(times[k * m + e] != tarr[k] for k in range(steps) for e in range(m)):
        raise TrajectoryFormatError(f"{path}: rows of one time step carry different times")
    states = np.array(rows, dtype=float).reshape(steps, m, d)
    return Trajectory(tarr, ents, states)
