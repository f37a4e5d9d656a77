"""Verification suites behind ``relmotion verify``.

Each suite returns a list of ``Check`` records; a suite passes when every
check does. Checks are deterministic given the seed.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import sde
from .consistency import (
    RelativeFamily,
    family_from_states,
    is_difference_consistent,
    lemma_dc_map,
    recover_states,
)
from .correspondence import verify_drift_identity, verify_pathwise_correspondence
from .index import contributing_pairs, enumerate_pairs, pair_index, sigma_dot
from .noise import derive_relative_noise, estimate_covariation, sample_particle_noise, sample_relative_noise
from .transform import apply_R, apply_R_inverse, verify_inverse

SUITES = ("inverse", "consistency", "covariance", "correspondence")


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = ""
        if self.value is not None:
            extra = f" value={self.value:.3e}"
            if self.threshold is not None:
                extra += f" threshold={self.threshold:.3e}"
        return f"{status} {self.name}{extra}"

    def as_dict(self) -> dict:
        return asdict(self)


def _pmap(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def inverse_suite(n_max: int = 64, tol: float = 1e-12, threads: int = 1) -> list[Check]:
    reports = _pmap(verify_inverse, range(2, n_max + 1), threads)
    checks = []
    exact = [r.n for r in reports if not r.exact_QM]
    checks.append(Check(f"inverse.exact_QM[N=2..{n_max}]", not exact, details={"failing_n": exact}))
    worst = max(reports, key=lambda r: r.max_abs_error)
    checks.append(Check(f"inverse.R_Rinv_identity[N=2..{n_max}]", worst.max_abs_error <= tol,
                        worst.max_abs_error, tol, {"worst_n": worst.n}))
    return checks


def consistency_suite(n_max: int = 8, trials: int = 200, seed: int = 0, tol: float = 1e-12) -> list[Check]:
    rng = np.random.default_rng(seed)
    induced = lemma = perturb_err = roundtrip = 0.0
    perturb_detected = True
    for _ in range(trials):
        n = int(rng.integers(3, n_max + 1))
        d = int(rng.integers(1, 4))
        z = rng.normal(size=(n, d))
        f = family_from_states(z)
        induced = max(induced, is_difference_consistent(f, 0.0).max_violation)
        back = recover_states(f, z.mean(axis=0), tol)
        roundtrip = max(roundtrip, float(np.abs(back - z).max()))

        q = lemma_dc_map(RelativeFamily(n, rng.normal(size=f.values.shape)))
        lemma = max(lemma, is_difference_consistent(q, 0.0).max_violation)

        eps = rng.uniform(1e-6, 1e-3) * rng.choice([-1.0, 1.0])
        vals = f.values.copy()
        p = enumerate_pairs(n)[int(rng.integers(len(vals)))]
        vals[pair_index(p, n), int(rng.integers(d))] += eps
        rep = is_difference_consistent(RelativeFamily(n, vals), tol)
        perturb_detected &= not rep.ok
        perturb_err = max(perturb_err, abs(rep.max_violation - abs(eps)))

    adj_err = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, n_max + 1))
        z = rng.normal(size=(n, 3))
        adj, com = apply_R(z)
        adj_err = max(adj_err, float(np.abs(apply_R_inverse(adj, com) - z).max()))

    return [
        Check("consistency.induced_families", induced <= tol, induced, tol),
        Check("consistency.lemma_map_output", lemma <= tol, lemma, tol),
        Check("consistency.perturbation_detected", perturb_detected),
        Check("consistency.perturbation_magnitude", perturb_err <= tol, perturb_err, tol),
        Check("consistency.recover_states_roundtrip", roundtrip <= tol, roundtrip, tol),
        Check("consistency.apply_R_roundtrip", adj_err <= tol, adj_err, tol),
    ]


def covariance_suite(n: int = 4, dim: int = 2, steps: int = 200_000, dt: float = 1e-3,
                     seed: int = 0, k: float = 4.0, source: str = "relative") -> list[Check]:
    if source == "relative":
        rn = sample_relative_noise(n, dim, dt, steps, seed)
    else:
        rn = derive_relative_noise(sample_particle_noise(n, dim, dt, steps, seed))
    est = estimate_covariation(rn)
    (la, lb, got, ref) = est.worst()
    com_z = float(np.abs(est.com_zscores).max())
    return [
        Check(f"covariance.entries_within_{k:g}se[{source}]", est.max_abs_z <= k, est.max_abs_z, k,
              {"worst": [list(la), list(lb)], "estimate": float(got), "reference": float(ref)}),
        Check(f"covariance.scaled_com_variance[{source}]", com_z <= k, com_z, k,
              {"scaled_variance": est.com_scaled_variance.tolist()}),
    ]


def parse_drift(tag: str) -> sde.DriftSpec:
    """``constant:<lam>``, ``kernel:<name>[:k=v,...]`` or ``time:<name>[:k=v,...]``."""
    kind, _, rest = tag.partition(":")
    if kind == "constant":
        try:
            return sde.constant(float(rest))
        except ValueError:
            raise ValueError(f"bad constant drift {tag!r}") from None
    if kind in ("kernel", "time"):
        name, _, params = rest.partition(":")
        kw = {}
        for item in filter(None, params.split(",")):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"bad drift parameter {item!r} in {tag!r}")
            try:
                kw[key.strip()] = float(val)
            except ValueError:
                raise ValueError(f"bad drift parameter {item!r} in {tag!r}") from None
        try:
            if kind == "kernel":
                return sde.named_kernel(name, **kw)
            return sde.named_time_profile(name, **kw)
        except (KeyError, TypeError) as exc:
            raise ValueError(str(exc).strip("'\"")) from None
    raise ValueError(f"unrecognised drift tag {tag!r}")


def correspondence_suite(n: int = 5, dim: int = 2, steps: int = 10_000, dt: float = 1e-3, seed: int = 0,
                         drifts=("constant:0.7", "kernel:lorentzian"), tol: float = 1e-8,
                         identity_trials: int = 200, threads: int = 1) -> list[Check]:
    rng = np.random.default_rng(seed)
    z0 = rng.normal(size=(n, dim))
    noise = sample_particle_noise(n, dim, dt, steps, seed)

    def run(tag):
        return tag, verify_pathwise_correspondence(z0, parse_drift(tag), noise, tol)

    checks = []
    for tag, rep in _pmap(run, list(drifts), threads):
        details = {"steps_compared": rep.steps_compared}
        if rep.exploded:
            details.update(particle_exploded_at=rep.particle_exploded_at,
                           relative_exploded_at=rep.relative_exploded_at)
        checks.append(Check(f"correspondence.path_residual[{tag}]", rep.ok, rep.max_residual, tol, details))
        checks.append(Check(f"correspondence.reconstruction[{tag}]", rep.reconstruction_error <= 1e-12,
                            rep.reconstruction_error, 1e-12))
        com = max(rep.com_drift_max, rep.com_step_error)
        checks.append(Check(f"correspondence.com_driftless[{tag}]", com <= 1e-13, com, 1e-13))

    worst = 0.0
    for _ in range(identity_trials):
        m = int(rng.integers(2, 9))
        z = rng.normal(size=(m, int(rng.integers(1, 4))))
        coeffs = rng.uniform(-2.0, 2.0, size=m * (m - 1) // 2)
        a = sde.custom(lambda step, t, sep, c=coeffs: c)
        worst = max(worst, verify_drift_identity(z, a).max_error)
    checks.append(Check("correspondence.drift_identity", worst <= 1e-12, worst, 1e-12))

    mismatch = []
    for m in range(2, 9):
        for p in enumerate_pairs(m):
            brute = [q for q in enumerate_pairs(m) if sigma_dot(p, q) != 0]
            if brute != contributing_pairs(p, m):
                mismatch.append((m, tuple(p)))
    checks.append(Check("correspondence.contributing_pairs[N<=8]", not mismatch, details={"mismatch": mismatch}))
    return checks
