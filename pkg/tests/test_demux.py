"""Supermode demultiplexing: angle solve, mixing matrices, extraction."""

import numpy as np
import pytest

from conftest import random_mps, random_orthonormal_rows
from pulsemps.demux import (
    DemuxPlan,
    SupermodeBasis,
    apply_demux,
    demux_and_extract,
    demux_gate,
    reconstruct_mixing_matrix,
    reduced_density_matrix,
    single_particle_matrix,
    solve_demux_angles,
    solve_demux_plan,
)
from pulsemps.density import coherent_vector, partial_trace
from pulsemps.mps import ValidationError, init_coherent_mps


def test_basis_orthonormality_enforced():
    with pytest.raises(ValidationError):
        SupermodeBasis(np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_uniform_two_site_angles():
    # f = (1, 1)/sqrt(2): the beamsplitter takes half the weight at site 1
    basis = SupermodeBasis(np.array([[1.0, 1.0]]) / np.sqrt(2))
    plan = solve_demux_plan(basis)
    assert abs(plan.phis[0][0] - np.arcsin(1 / np.sqrt(2))) < 1e-12
    assert abs(plan.thetas[0][0]) < 1e-12


def test_identity_envelope_fallback():
    # f = e1 consumes the envelope at the first gate; the rest are identities
    basis = SupermodeBasis(np.array([[1.0, 0.0, 0.0, 0.0]]))
    plan = solve_demux_plan(basis)
    assert np.allclose(plan.phis[0][1:], np.pi / 2)
    m = single_particle_matrix(4, 1, plan.thetas[0], plan.phis[0])
    assert np.max(np.abs(m[0] - basis.vectors[0])) < 1e-12


def test_single_particle_matrix_unitary(rng):
    basis = SupermodeBasis(random_orthonormal_rows(rng, 2, 6))
    plan = solve_demux_plan(basis)
    for r in (1, 2):
        m = single_particle_matrix(6, r, plan.thetas[r - 1], plan.phis[r - 1])
        assert np.max(np.abs(m.conj().T @ m - np.eye(6))) < 1e-12


def test_mixing_matrix_rows_and_band(rng):
    basis = SupermodeBasis(random_orthonormal_rows(rng, 2, 7))
    plan = solve_demux_plan(basis)
    c2 = plan.mixing[2]
    for rr in range(2):
        assert np.max(np.abs(c2[rr] - basis.vectors[rr])) < 1e-8
    # row m depends only on a_l with l >= m - r (1-based), r = 2
    for m in range(3, 8):
        cols = m - 3
        if cols > 0:
            assert np.max(np.abs(c2[m - 1, :cols])) < 1e-8


def test_demux_gate_unitary():
    g = demux_gate(0.3, 0.7, 4, 4)
    m = g.matrix
    assert np.max(np.abs(m.conj().T @ m - np.eye(16))) < 1e-12


def test_interleaved_sparse_basis_solves():
    # disjoint-support supermodes (two-band layout) exercise the degenerate
    # column handling in the angle solve
    n = 8
    fa = np.zeros(n)
    fb = np.zeros(n)
    fa[0::2] = 1.0
    fb[1::2] = 1.0
    basis = SupermodeBasis(np.vstack([fa / np.linalg.norm(fa),
                                      fb / np.linalg.norm(fb)]))
    plan = solve_demux_plan(basis)
    assert plan.s == 2
    c2 = plan.mixing[2]
    assert np.max(np.abs(c2.conj() @ c2.T - np.eye(n))) < 1e-10


def test_own_envelope_extraction(rng):
    env = rng.normal(size=6) + 1j * rng.normal(size=6)
    env /= np.linalg.norm(env)
    alpha = 1.1
    state = init_coherent_mps(env, alpha, [14] * 6, deficit_tol=1e-4)
    # site amplitudes are conj(env) * alpha, so the matching supermode
    # vector (conjugate of the amplitude profile) is env itself
    basis = SupermodeBasis(env[None, :])
    rho, plan = demux_and_extract(state, basis, cutoffs=[14])
    assert rho.purity() > 1 - 1e-6
    assert rho.fidelity_to_pure(coherent_vector(alpha, 14)) > 1 - 1e-6


def test_mpo_and_contract_methods_agree(rng):
    state, _ = random_mps(rng, [3, 3, 3, 3])
    basis = SupermodeBasis(random_orthonormal_rows(rng, 2, 4))
    rho_c, _ = demux_and_extract(state, basis, method="contract")
    rho_m, _ = demux_and_extract(state, basis, method="mpo")
    assert np.max(np.abs(rho_c.matrix - rho_m.matrix)) < 1e-10


def test_reduced_density_matrix_validation(rng):
    state, _ = random_mps(rng, [3, 3, 3])
    with pytest.raises(ValidationError):
        reduced_density_matrix(state, 3)


def test_plan_mismatched_state_rejected(rng):
    state, _ = random_mps(rng, [3, 3, 3])
    basis = SupermodeBasis(random_orthonormal_rows(rng, 1, 4))
    plan = solve_demux_plan(basis)
    with pytest.raises(ValidationError):
        apply_demux(state, plan)
