"""Command line front end: ``relmotion simulate | transform | verify``.

Exit codes: 0 success, 1 a verification check failed, 2 usage or
configuration error, 3 explosion or inconsistent data, 4 I/O failure.
Every error path prints exactly one line to stderr::

    relmotion: error[<code>]: <kind>: <message>
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, suites
from .consistency import RelativeFamily, is_difference_consistent
from .correspondence import particles_to_relative, reconstruct_particles
from .errors import ConsistencyError, RelMotionError
from .index import n_pairs
from .noise import sample_particle_noise, sample_relative_noise
from .sde import PathBundle, simulate_particles, simulate_relative
from .trajio import TrajectoryFormatError, read_trajectory, write_trajectory

SEED_ENV = "RELMOTION_SEED"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _fail(code, kind, message):
    raise CliError(code, kind, message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail(EXIT_USAGE, "usage", message)


SIM_DEFAULTS = {
    "class": "particles",
    "n": None,
    "dim": 1,
    "dt": 1e-3,
    "steps": 1000,
    "seed": None,
    "drift": "constant:0",
    "initial": None,
    "com0": None,
    "out": None,
    "com_out": None,
    "format": "csv",
}


def _read_config(path) -> dict:
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        _fail(EXIT_IO, "io", f"cannot read config {path}: {exc.strerror}")
    except configparser.Error as exc:
        _fail(EXIT_USAGE, "config", f"{path}: {exc}")
    if not cp.has_section("run"):
        _fail(EXIT_USAGE, "config", f"{path}: missing [run] section")
    out = {}
    for key, val in cp.items("run"):
        key = key.replace("-", "_")
        if key not in SIM_DEFAULTS:
            _fail(EXIT_USAGE, "config", f"{path}: unknown key {key!r}")
        out[key] = val
    return out


def _resolve(args) -> dict:
    cfg = dict(SIM_DEFAULTS)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        cfg["seed"] = env_seed
    if args.config:
        cfg.update(_read_config(args.config))
    for key in SIM_DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    try:
        cfg["dim"] = int(cfg["dim"])
        cfg["steps"] = int(cfg["steps"])
        cfg["dt"] = float(cfg["dt"])
        cfg["seed"] = int(cfg["seed"]) if cfg["seed"] is not None else 0
        cfg["n"] = int(cfg["n"]) if cfg["n"] is not None else None
    except (TypeError, ValueError) as exc:
        _fail(EXIT_USAGE, "config", f"bad numeric value: {exc}")
    if cfg["class"] not in ("particles", "relative"):
        _fail(EXIT_USAGE, "config", f"class must be particles or relative, got {cfg['class']!r}")
    if cfg["format"] != "csv":
        _fail(EXIT_USAGE, "config", f"unsupported output format {cfg['format']!r}")
    if not cfg["out"]:
        _fail(EXIT_USAGE, "config", "an output path (--out) is required")
    if cfg["dim"] < 1 or cfg["steps"] < 1 or not (cfg["dt"] > 0 and np.isfinite(cfg["dt"])):
        _fail(EXIT_USAGE, "config", "need dim >= 1, steps >= 1 and dt > 0")
    return cfg


def _parse_points(spec: str, what: str) -> np.ndarray:
    """Inline ``x,y;x,y;...`` or ``@file`` (comma separated rows)."""
    try:
        if spec.startswith("@"):
            arr = np.loadtxt(spec[1:], delimiter=",", ndmin=2)
        else:
            rows = [r for r in spec.split(";") if r.strip()]
            arr = np.array([[float(x) for x in r.split(",")] for r in rows], dtype=float)
    except OSError as exc:
        _fail(EXIT_IO, "io", f"cannot read {what} file {spec[1:]}: {exc}")
    except ValueError as exc:
        _fail(EXIT_USAGE, "config", f"cannot parse {what}: {exc}")
    if arr.ndim != 2 or not np.isfinite(arr).all():
        _fail(EXIT_USAGE, "config", f"{what} must be a finite table of points")
    return arr


def _write(path, times, labels, states):
    try:
        write_trajectory(path, times, labels, states)
    except OSError as exc:
        _fail(EXIT_IO, "io", f"cannot write {path}: {exc.strerror or exc}")


def _com_path_for(out: str, com_out: str | None) -> str:
    if com_out:
        return com_out
    p = Path(out)
    return str(p.with_name(p.stem + ".com" + (p.suffix or ".csv")))


def _fmt_vec(v) -> str:
    return "[" + ",".join(f"{x:.6g}" for x in np.atleast_1d(v)) + "]"


def cmd_simulate(args) -> int:
    cfg = _resolve(args)
    try:
        drift = suites.parse_drift(cfg["drift"])
    except ValueError as exc:
        _fail(EXIT_USAGE, "config", str(exc))
    d, steps, dt, seed = cfg["dim"], cfg["steps"], cfg["dt"], cfg["seed"]
    start = time.perf_counter()

    if cfg["class"] == "particles":
        n = cfg["n"]
        if cfg["initial"] is not None:
            z0 = _parse_points(cfg["initial"], "initial states")
            n = n or z0.shape[0]
            if z0.shape != (n, d):
                _fail(EXIT_USAGE, "config", f"initial states have shape {z0.shape}, expected ({n}, {d})")
        else:
            if n is None:
                _fail(EXIT_USAGE, "config", "--n is required without --initial")
            z0 = np.zeros((n, d))
        if n < 2:
            _fail(EXIT_USAGE, "config", "need n >= 2")
        noise = sample_particle_noise(n, d, dt, steps, seed)
        path = simulate_particles(z0, drift, noise)
        com = path.states.mean(axis=1)
        _write(cfg["out"], path.times, path.labels, path.states)
    else:
        n = cfg["n"]
        if n is None or n < 2:
            _fail(EXIT_USAGE, "config", "--n >= 2 is required for the relative class")
        if cfg["initial"] is not None:
            vals = _parse_points(cfg["initial"], "initial family")
        else:
            vals = np.zeros((n_pairs(n), d))
        if vals.shape != (n_pairs(n), d):
            _fail(EXIT_USAGE, "config",
                  f"initial family has shape {vals.shape}, expected ({n_pairs(n)}, {d}) in canonical pair order")
        com0 = _parse_points(cfg["com0"], "com0")[0] if cfg["com0"] is not None else np.zeros(d)
        if com0.shape != (d,):
            _fail(EXIT_USAGE, "config", f"com0 must have {d} components")
        f0 = RelativeFamily(n, vals)
        rep = is_difference_consistent(f0)
        if not rep.ok:
            _fail(EXIT_USAGE, "inconsistent-initial",
                  f"initial family violates difference-consistency by {rep.max_violation:.3e}")
        noise = sample_relative_noise(n, d, dt, steps, seed)
        path, com = simulate_relative(f0, com0, drift, noise)
        _write(cfg["out"], path.times, path.labels, path.states)
        _write(_com_path_for(cfg["out"], cfg["com_out"]), path.times, ["com"], com[:, None, :])

    wall = time.perf_counter() - start
    print(f"class={cfg['class']} n={n} d={d} steps={path.steps} final_com={_fmt_vec(com[-1])} "
          f"exploded={'yes' if path.exploded else 'no'} wall_time={wall:.3f}s")
    if path.exploded:
        _fail(EXIT_RUNTIME, "explosion", path.diagnostic())
    return EXIT_OK


def _load(path):
    try:
        return read_trajectory(path)
    except OSError as exc:
        _fail(EXIT_IO, "io", f"cannot read {path}: {exc.strerror or exc}")
    except TrajectoryFormatError as exc:
        _fail(EXIT_USAGE, "parse", str(exc))


def cmd_transform(args) -> int:
    if args.direction == "to-particles" and not args.com:
        _fail(EXIT_USAGE, "usage", "to-particles needs the centre-of-mass file (--com)")
    traj = _load(args.input)
    try:
        kind = traj.kind
    except TrajectoryFormatError as exc:
        _fail(EXIT_USAGE, "parse", str(exc))

    if args.direction == "to-relative":
        if kind != "particles":
            _fail(EXIT_USAGE, "parse", f"to-relative needs a particle trajectory, got {kind}")
        n = len(traj.labels)
        path = PathBundle("particles", n, traj.dt, traj.times, traj.states, traj.labels)
        rel, com = particles_to_relative(path)
        _write(args.out, rel.times, rel.labels, rel.states)
        _write(_com_path_for(args.out, args.com_out), rel.times, ["com"], com[:, None, :])
        print(f"direction=to-relative n={n} steps={rel.steps}")
        return EXIT_OK

    if kind != "relative":
        _fail(EXIT_USAGE, "parse", f"to-particles needs a pair trajectory, got {kind}")
    com_traj = _load(args.com)
    if com_traj.labels != ["com"]:
        _fail(EXIT_USAGE, "parse", f"{args.com} is not a centre-of-mass trajectory")
    if len(com_traj.times) != len(traj.times) or not np.array_equal(com_traj.times, traj.times):
        _fail(EXIT_USAGE, "parse", "pair and com trajectories have different time grids")
    if com_traj.d != traj.d:
        _fail(EXIT_USAGE, "parse", "pair and com trajectories have different dimensions")
    n = max(int(x.split("_")[0][1:]) for x in traj.labels)
    rel = PathBundle("relative", n, traj.dt, traj.times, traj.states, traj.labels)
    try:
        back = reconstruct_particles(rel, com_traj.states[:, 0, :], args.tol)
    except ConsistencyError as exc:
        _fail(EXIT_RUNTIME, "inconsistent", f"step {exc.step}: {exc}")
    _write(args.out, back.times, back.labels, back.states)
    print(f"direction=to-particles n={n} steps={back.steps}")
    return EXIT_OK


def _run_suite(name, args, seed) -> list:
    if name == "inverse":
        return suites.inverse_suite(args.n_max or 64, threads=args.threads)
    if name == "consistency":
        return suites.consistency_suite(args.n_max or 8, trials=args.trials, seed=seed)
    if name == "covariance":
        return suites.covariance_suite(args.n or 4, args.dim or 2, args.steps or 200_000,
                                       args.dt or 1e-3, seed, args.k, args.source)
    if name == "correspondence":
        drifts = args.drift or ["constant:0.7", "kernel:lorentzian"]
        for tag in drifts:
            try:
                suites.parse_drift(tag)
            except ValueError as exc:
                _fail(EXIT_USAGE, "config", str(exc))
        return suites.correspondence_suite(args.n or 5, args.dim or 2, args.steps or 10_000,
                                           args.dt or 1e-3, seed, tuple(drifts), args.tol,
                                           threads=args.threads)
    raise AssertionError(name)


def cmd_verify(args) -> int:
    seed = args.seed
    if seed is None:
        try:
            seed = int(os.environ.get(SEED_ENV, "0"))
        except ValueError:
            _fail(EXIT_USAGE, "config", f"{SEED_ENV} must be an integer")
    names = suites.SUITES if args.suite == "all" else (args.suite,)
    results = {}
    for name in names:
        checks = _run_suite(name, args, seed)
        results[name] = checks
        for c in checks:
            print(c.line())
    failing = [c for checks in results.values() for c in checks if not c.passed]
    report = {
        "suite": args.suite,
        "seed": seed,
        "passed": not failing,
        "first_failure": failing[0].name if failing else None,
        "suites": {k: [c.as_dict() for c in v] for k, v in results.items()},
    }
    if args.report:
        try:
            with open(args.report, "w") as fh:
                json.dump(report, fh, indent=2, default=float)
                fh.write("\n")
        except OSError as exc:
            _fail(EXIT_IO, "io", f"cannot write {args.report}: {exc.strerror or exc}")
    total = sum(len(v) for v in results.values())
    print(f"{'PASS' if not failing else 'FAIL'} {total - len(failing)}/{total} checks")
    if failing:
        _fail(EXIT_FAIL, "check-failed", failing[0].name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relmotion", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"relmotion {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="integrate one SDE class and write its trajectory")
    sim.add_argument("--config", help="INI file with a [run] section; flags override it")
    sim.add_argument("--class", dest="class", choices=["particles", "relative"])
    sim.add_argument("--n", type=int)
    sim.add_argument("--dim", type=int)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--steps", type=int)
    sim.add_argument("--seed", type=int, help=f"defaults to ${SEED_ENV}, then 0")
    sim.add_argument("--drift", help="constant:<lam> | kernel:<name>[:k=v,..] | time:<name>[:k=v,..]")
    sim.add_argument("--initial", help="inline 'x,y;x,y;...' or @file; pair rows in canonical order for --class relative")
    sim.add_argument("--com0", help="initial centre of mass for --class relative")
    sim.add_argument("--out")
    sim.add_argument("--com-out", dest="com_out")
    sim.add_argument("--format", choices=["csv"])
    sim.set_defaults(func=cmd_simulate)

    tr = sub.add_parser("transform", help="convert between particle and relative trajectories")
    tr.add_argument("input")
    tr.add_argument("--direction", required=True, choices=["to-relative", "to-particles"])
    tr.add_argument("--com", help="centre-of-mass trajectory (required for to-particles)")
    tr.add_argument("--out", required=True)
    tr.add_argument("--com-out", dest="com_out")
    tr.add_argument("--tol", type=float, default=1e-9)
    tr.set_defaults(func=cmd_transform)

    ver = sub.add_parser("verify", help="run invariant suites")
    ver.add_argument("suite", choices=list(suites.SUITES) + ["all"])
    ver.add_argument("--n-max", type=int)
    ver.add_argument("--n", type=int)
    ver.add_argument("--dim", type=int)
    ver.add_argument("--steps", type=int)
    ver.add_argument("--dt", type=float)
    ver.add_argument("--seed", type=int)
    ver.add_argument("--drift", action="append", help="repeatable; correspondence suite only")
    ver.add_argument("--tol", type=float, default=1e-8, help="path residual tolerance")
    ver.add_argument("--k", type=float, default=4.0, help="standard errors allowed in covariance checks")
    ver.add_argument("--source", choices=["relative", "derived"], default="relative")
    ver.add_argument("--trials", type=int, default=200)
    ver.add_argument("--threads", type=int, default=1)
    ver.add_argument("--report", default="verify_report.json", help="machine-readable JSON report path")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        msg = " ".join(str(exc).split())
        print(f"relmotion: error[{exc.code}]: {exc.kind}: {msg}", file=sys.stderr)
        return exc.code
    except RelMotionError as exc:
        msg = " ".join(str(exc).split())
        print(f"relmotion: error[{EXIT_USAGE}]: invalid-input: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
