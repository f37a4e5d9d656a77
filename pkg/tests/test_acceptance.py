"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the summary lines.
"""
import time

import numpy as np
import pytest

from conftest import brute_relative_drift
from relmotion import sde
from relmotion.consistency import (
    RelativeFamily,
    family_from_states,
    is_difference_consistent,
    lemma_dc_map,
    recover_states,
    relative_coordinates,
)
from relmotion.correspondence import verify_drift_identity, verify_pathwise_correspondence
from relmotion.index import contributing_pairs, enumerate_pairs, pair_index, sigma
from relmotion.noise import derive_relative_noise, estimate_covariation, sample_particle_noise, sample_relative_noise
from relmotion.transform import apply_R, apply_R_inverse, build_Q, build_R, build_R_inverse, scaled_M


def report(name, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail} ({elapsed:.2f}s / {budget:g}s)")
    return ok


def test_inverse_formula():
    start = time.perf_counter()
    exact_fail, worst = [], 0.0
    for n in range(2, 65):
        if not np.array_equal(build_Q(n).entries @ scaled_M(n), n * np.eye(n, dtype=np.int64)):
            exact_fail.append(n)
        worst = max(worst, float(np.abs(build_R(n).entries @ build_R_inverse(n).entries - np.eye(n)).max()))
    elapsed = time.perf_counter() - start
    assert report("inverse formula", not exact_fail and worst <= 1e-12,
                  f"exact QM fails for {exact_fail}, max|R Rinv - I| = {worst:.2e}", elapsed, 5)


def test_roundtrip_transforms():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    rt = rec = pairs = 0.0
    for _ in range(1000):
        n, d = int(rng.integers(2, 33)), int(rng.integers(1, 9))
        z = rng.normal(size=(n, d)) * rng.uniform(0.1, 10.0)
        adj, com = apply_R(z)
        rt = max(rt, float(np.abs(apply_R_inverse(adj, com) - z).max()))
        f = family_from_states(z)
        back = recover_states(f, z.mean(axis=0), tol=1e-12)
        rec = max(rec, float(np.abs(back - z).max()))
        pairs = max(pairs, float(np.abs(relative_coordinates(back) - f.values).max()))
    elapsed = time.perf_counter() - start
    worst = max(rt, rec, pairs)
    assert report("round-trip transforms", worst <= 1e-12,
                  f"apply_R {rt:.2e}, recover_states {rec:.2e}, all pairs {pairs:.2e}", elapsed, 10)


def test_difference_consistency():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    induced_ok = lemma_ok = detected = True
    magnitude = 0.0
    for _ in range(300):
        n, d = int(rng.integers(3, 9)), int(rng.integers(1, 5))
        f = family_from_states(rng.normal(size=(n, d)))
        induced_ok &= is_difference_consistent(f, 1e-12).ok
        lemma_ok &= is_difference_consistent(lemma_dc_map(RelativeFamily(n, rng.normal(size=f.values.shape))), 1e-12).ok
        eps = rng.uniform(1e-6, 1.0) * rng.choice([-1.0, 1.0])
        vals = f.values.copy()
        p = enumerate_pairs(n)[int(rng.integers(len(vals)))]
        vals[pair_index(p, n), int(rng.integers(d))] += eps
        rep = is_difference_consistent(RelativeFamily(n, vals), 1e-12)
        detected &= not rep.ok
        magnitude = max(magnitude, abs(rep.max_violation - abs(eps)))
    elapsed = time.perf_counter() - start
    ok = induced_ok and lemma_ok and detected and magnitude <= 1e-12
    assert report("difference-consistency", ok,
                  f"induced {induced_ok}, lemma {lemma_ok}, perturbation detected {detected}, "
                  f"|violation - eps| {magnitude:.2e}", elapsed, 5)


def test_drift_identity():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = brute = 0.0
    for _ in range(1000):
        n, d = int(rng.integers(2, 9)), int(rng.integers(1, 4))
        z = rng.normal(size=(n, d))
        coeffs = rng.uniform(-2.0, 2.0, size=n * (n - 1) // 2)
        a = sde.custom(lambda step, t, sep, c=coeffs: c)
        worst = max(worst, verify_drift_identity(z, a).max_error)
        f = family_from_states(z)
        ref = brute_relative_drift(f.values, coeffs, n)
        brute = max(brute, float(np.abs(sde.drift_relative(f, a).values - ref).max()))
    mismatch = 0
    for n in range(2, 9):
        for p in enumerate_pairs(n):
            expected = [q for q in enumerate_pairs(n) if sigma(p, n) @ sigma(q, n) != 0]
            mismatch += expected != contributing_pairs(p, n)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and brute <= 1e-12 and mismatch == 0
    assert report("drift identity", ok,
                  f"differenced {worst:.2e}, brute-force {brute:.2e}, pair-set mismatches {mismatch}",
                  elapsed, 10)


DRIFTS = {"constant 0.7": sde.constant(0.7), "kernel 1/(1+r^2)": sde.named_kernel("lorentzian")}


@pytest.fixture(scope="module")
def correspondence_runs():
    noise = sample_particle_noise(5, 2, 1e-3, 10_000, seed=0)
    z0 = np.random.default_rng(0).normal(size=(5, 2))
    out = {}
    for name, a in DRIFTS.items():
        start = time.perf_counter()
        rep = verify_pathwise_correspondence(z0, a, noise, tol=1e-8)
        path = sde.simulate_particles(z0, a, noise)
        out[name] = (rep, path, time.perf_counter() - start)
    return z0, noise, out


def test_pathwise_correspondence(correspondence_runs):
    _, _, runs = correspondence_runs
    lines, ok, elapsed = [], True, 0.0
    for name, (rep, _, secs) in runs.items():
        ok &= rep.ok and rep.steps_compared == 10_000 and rep.reconstruction_error <= 1e-12
        lines.append(f"{name}: residual {rep.max_residual:.2e}, reconstruction {rep.reconstruction_error:.2e}")
        elapsed += secs
    assert report("pathwise correspondence", ok, "; ".join(lines), elapsed, 30)


def test_center_of_mass(correspondence_runs):
    z0, noise, runs = correspondence_runs
    start = time.perf_counter()
    expected = z0.mean(axis=0) + np.concatenate(
        [np.zeros((1, 2)), np.cumsum(noise.increments.mean(axis=1), axis=0)])
    lines, ok = [], True
    for name, (rep, path, _) in runs.items():
        path_err = float(np.abs(path.states.mean(axis=1) - expected).max())
        step = max(rep.com_drift_max, rep.com_step_error)
        ok &= step <= 1e-13 and path_err <= 1e-12
        lines.append(f"{name}: per-step drift {step:.2e}, path vs cumulative noise {path_err:.2e}")
    elapsed = time.perf_counter() - start
    assert report("center of mass", ok, "; ".join(lines), elapsed, 30)


def test_covariation_structure():
    start = time.perf_counter()
    lines, ok = [], True
    for name, rn in (("auxiliary", sample_relative_noise(4, 2, 1e-3, 200_000, seed=0)),
                     ("derived", derive_relative_noise(sample_particle_noise(4, 2, 1e-3, 200_000, seed=0)))):
        est = estimate_covariation(rn)
        com_z = float(np.abs(est.com_zscores).max())
        ok &= est.max_abs_z <= 4 and com_z <= 4
        lines.append(f"{name}: max |z| entries {est.max_abs_z:.2f}, scaled com {com_z:.2f}")
    elapsed = time.perf_counter() - start
    assert report("covariation structure", ok, "; ".join(lines), elapsed, 60)


def test_ou_oracle():
    n, lam, dt, steps = 3, 0.5, 0.01, 1_000_000
    start = time.perf_counter()
    noise = derive_relative_noise(sample_particle_noise(n, 1, dt, steps, seed=0))
    path, _ = sde.simulate_relative(family_from_states(np.zeros((n, 1))), np.zeros(1), sde.constant(lam), noise)
    burn = 10_000  # about 150 relaxation times
    var = float(path.states[burn:].var(axis=0).mean())
    target = 1.0 / (2 * n * lam)
    rel = abs(var - target) / target
    elapsed = time.perf_counter() - start
    assert report("OU oracle", not path.exploded and rel <= 0.05,
                  f"variance {var:.4f} vs {target:.4f} (rel. error {rel:.2%})", elapsed, 60)
