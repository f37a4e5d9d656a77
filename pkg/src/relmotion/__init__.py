"""Relative-motion transforms for interacting-particle Langevin SDEs.

Maps N-particle SDE paths to the normalised pair coordinates
``(Z[hi] - Z[lo]) / sqrt(2)`` plus the centre of mass, and back, with
Euler-Maruyama integrators for both descriptions and checks that they agree.
"""
__version__ = "0.1.0"

from .consistency import (
    RelativeFamily,
    family_from_states,
    is_difference_consistent,
    lemma_dc_map,
    project_adjacent,
    recover_states,
    telescope_expand,
)
from .correspondence import (
    particles_to_relative,
    reconstruct_particles,
    verify_drift_identity,
    verify_pathwise_correspondence,
)
from .index import IndexPair, enumerate_pairs, oplus, sigma, sigma_dot, vee_wedge
from .noise import (
    derive_relative_noise,
    estimate_covariation,
    sample_particle_noise,
    sample_relative_noise,
)
from .sde import DriftSpec, PathBundle, drift_particles, drift_relative, simulate_particles, simulate_relative
from .transform import apply_R, apply_R_inverse, build_M, build_Q, build_R, build_R_inverse, verify_inverse
