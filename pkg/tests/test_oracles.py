"""Independent oracles: dense propagators, classical integrators, waveforms."""

import numpy as np
import pytest

from pulsemps.mps import annihilation_operator
from pulsemps.oracles import (
    ClassicalField,
    classical_split_step_chi3,
    dense_evolve,
    dense_hamiltonian_chi3,
    dense_total_number,
    lift_interferometer,
    spatial_grid,
    waveform_2sech,
    waveform_sech,
    waveform_simulton,
)


def test_dense_chi3_commutes_with_number():
    dims = [3, 3]
    h = dense_hamiltonian_chi3(0.7, dims)
    n = dense_total_number(dims)
    assert np.max(np.abs(h @ n - n @ h)) < 1e-12
    assert np.max(np.abs(h - h.conj().T)) < 1e-12


def test_dense_evolve_is_unitary(rng):
    dims = [3, 3]
    h = dense_hamiltonian_chi3(0.5, dims)
    vec = rng.normal(size=9) + 1j * rng.normal(size=9)
    vec /= np.linalg.norm(vec)
    out = dense_evolve(vec, h, 0.3)
    assert abs(np.linalg.norm(out) - 1.0) < 1e-12


def test_lift_interferometer_conjugation(rng):
    # U^+ a_m U = sum_l M_{ml} a_l on the truncated product space
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, _ = np.linalg.qr(m)
    dims = [4, 4]
    u = lift_interferometer(q, dims)
    a0 = np.kron(annihilation_operator(4), np.eye(4))
    a1 = np.kron(np.eye(4), annihilation_operator(4))
    lhs = u.conj().T @ a0 @ u
    rhs = q[0, 0] * a0 + q[0, 1] * a1
    # restrict to total photon number <= 2, where the truncated lift is exact
    keep = [i for i in range(16) if i // 4 + i % 4 <= 2]
    assert np.max(np.abs((lhs - rhs)[np.ix_(keep, keep)])) < 1e-10


def test_sech_photon_number_quadrature():
    z = np.linspace(-40, 40, 20001)
    for nbar in (2.0, 3.0):
        phi = waveform_sech(nbar, z)
        n = np.trapezoid(np.abs(phi) ** 2, z)
        assert abs(n - nbar) < 1e-6


def test_breather_carries_four_times_fundamental():
    z = np.linspace(-40, 40, 20001)
    phi = waveform_2sech(2.0, z)
    n = np.trapezoid(np.abs(phi) ** 2, z)
    assert abs(n - 8.0) < 1e-6


def test_simulton_photon_number():
    z = np.linspace(-60, 60, 40001)
    nbar = 4.0
    phi, psi = waveform_simulton(nbar, z)
    n_fh = np.trapezoid(np.abs(phi) ** 2, z)
    n_sh = np.trapezoid(np.abs(psi) ** 2, z)
    # phi0 is chosen so the FH carries nbar photons; the SH carries nbar/4
    assert abs(n_fh - nbar) < 1e-6
    assert abs(n_sh - nbar / 4) < 1e-6


def test_classical_power_conservation():
    z, dz = spatial_grid(20.0, 128)
    field = ClassicalField(phi=waveform_sech(2.0, z), dz=dz)
    out = classical_split_step_chi3(field, 1e-3, 500)
    assert abs(out.power() - field.power()) < 1e-10


def test_spatial_grid_is_centered():
    z, dz = spatial_grid(8.0, 16)
    assert abs(dz - 0.5) < 1e-14
    assert abs(z[0] + z[-1]) < 1e-12
