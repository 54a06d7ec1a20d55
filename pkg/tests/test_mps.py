"""Core MPS machinery: canonical form, gates, conversions, expectations."""

import numpy as np
import pytest

from conftest import random_mps, state_overlap
from pulsemps.mps import (
    CapacityError,
    LocalMPO,
    TwoSiteGate,
    ValidationError,
    VidalMPS,
    annihilation_operator,
    dense_to_mps,
    fidelity,
    g2,
    init_coherent_mps,
    init_product_coherent,
    init_vacuum_mps,
    mean_photon_number,
    number_operator,
    photon_density,
    swap_gate,
)


def haar_unitary(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_vacuum_state_properties():
    state = init_vacuum_mps([3, 3, 3])
    assert state.n_sites == 3
    assert abs(state.norm() - 1.0) < 1e-14
    state.check_canonical()
    assert np.allclose(photon_density(state), 0.0)


def test_coherent_init_norm_and_photon_number():
    env = np.array([0.6, 0.8j])
    state = init_coherent_mps(env, 1.1, [8, 8], deficit_tol=1e-5)
    state.check_canonical()
    assert abs(state.norm() - 1.0) < 1e-10
    assert abs(mean_photon_number(state) - 1.1 ** 2) < 1e-4


def test_coherent_init_capacity_guard():
    with pytest.raises(CapacityError):
        init_coherent_mps(np.array([1.0]), 3.0, [4])


def test_dense_round_trip(rng):
    dims = [3, 2, 4, 3]
    state, vec = random_mps(rng, dims)
    state.check_canonical()
    back = state.to_dense_statevector()
    assert state_overlap(vec, back) > 1 - 1e-12


def test_two_site_gate_matches_dense(rng):
    dims = [3, 3, 3]
    state, vec = random_mps(rng, dims)
    u = haar_unitary(rng, 9)
    gate = TwoSiteGate(u, 3, 3)
    state.apply_two_site_gate(1, gate)
    state.check_canonical()
    dense = np.kron(np.eye(3), u) @ vec
    assert state_overlap(dense, state.to_dense_statevector()) > 1 - 1e-12


def test_one_site_gate_matches_dense(rng):
    dims = [2, 3, 2]
    state, vec = random_mps(rng, dims)
    u = haar_unitary(rng, 3)
    state.apply_one_site_gate(1, u)
    dense = np.kron(np.kron(np.eye(2), u), np.eye(2)) @ vec
    assert state_overlap(dense, state.to_dense_statevector()) > 1 - 1e-12


def test_swap_sites(rng):
    dims = [2, 3, 4]
    state, vec = random_mps(rng, dims)
    state.swap_sites(0)
    assert state.local_dims[:2] == [3, 2]
    swapped = state.to_dense_statevector()
    ref = vec.reshape(2, 3, 4).transpose(1, 0, 2).ravel()
    assert state_overlap(ref, swapped) > 1 - 1e-12


def test_swap_gate_is_unitary():
    g = swap_gate(3, 4)
    m = g.matrix
    assert np.max(np.abs(m.conj().T @ m - np.eye(12))) < 1e-14


def test_truncation_tracks_weight(rng):
    dims = [4, 4, 4]
    state, _ = random_mps(rng, dims)
    capped = VidalMPS([g.copy() for g in state.gammas],
                      [l.copy() for l in state.lambdas], chi_max=2)
    u = haar_unitary(rng, 16)
    capped.apply_two_site_gate(0, TwoSiteGate(u, 4, 4))
    assert capped.cum_trunc_error > 0
    assert capped.bond_dims[1] <= 2


def test_pad_physical_preserves_state(rng):
    dims = [3, 3, 3]
    state, vec = random_mps(rng, dims)
    padded = state.pad_physical([5, 5, 5])
    padded.check_canonical()
    big = padded.to_dense_statevector().reshape(5, 5, 5)[:3, :3, :3].ravel()
    assert state_overlap(vec, big) > 1 - 1e-12
    with pytest.raises(ValidationError):
        state.pad_physical([2, 3, 3])


def test_recanonicalize_after_local_operator(rng):
    dims = [3, 3, 3, 3]
    state, _ = random_mps(rng, dims)
    op = annihilation_operator(3)
    state.apply_local_operator(1, op, renormalize=True)
    state.recanonicalize(renormalize=True)
    state.check_canonical()
    assert abs(state.norm() - 1.0) < 1e-10


def test_expect_mpo_total_number():
    env = np.array([1.0, 1.0, 1.0]) / np.sqrt(3)
    state = init_coherent_mps(env, 1.0, [6, 6, 6], deficit_tol=1e-4)
    ops = {m: number_operator(6) for m in range(3)}
    total = sum(state.expect_local(m, number_operator(6)).real for m in range(3))
    assert abs(total - 1.0) < 1e-4
    mpo = LocalMPO.from_local_ops([6, 6, 6], {1: number_operator(6)})
    assert abs(state.expect_mpo(mpo) - state.expect_local(1, number_operator(6))) < 1e-12


def test_g2_of_coherent_state():
    state = init_product_coherent(np.array([0.9, 0.7]), [10, 10],
                                  deficit_tol=1e-6)
    assert abs(g2(state, 0, 0) - 1.0) < 1e-5
    assert abs(g2(state, 0, 1) - 1.0) < 1e-5


def test_fidelity_of_identical_states(rng):
    dims = [3, 3]
    state, _ = random_mps(rng, dims)
    assert abs(fidelity(state, state.copy()) - 1.0) < 1e-12


def test_local_mpo_dense_matches_kron():
    dims = [2, 3]
    op = number_operator(3)
    mpo = LocalMPO.from_local_ops(dims, {1: op})
    dense = mpo.to_dense()
    assert np.max(np.abs(dense - np.kron(np.eye(2), op))) < 1e-14
