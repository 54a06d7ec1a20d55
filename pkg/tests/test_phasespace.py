"""Wigner functions, negativity measures, and the disentangling search."""

import math

import numpy as np
import pytest

from pulsemps._wigner_kernels import use_numba, wigner_points_numpy
from pulsemps.density import FockDensityMatrix, coherent_vector, partial_trace
from pulsemps.mps import ValidationError
from pulsemps.phasespace import (
    PHI_RANGE,
    THETA_RANGE,
    disentangle_search,
    entanglement_negativity,
    purity,
    tdhf_state,
    two_mode_bs_transform,
    two_mode_bs_unitary,
    wigner,
    wigner_negativity_volume,
)


def fock_density(n, cutoff):
    m = np.zeros((cutoff, cutoff))
    m[n, n] = 1.0
    return FockDensityMatrix(m, [cutoff])


def coherent_density(alpha, cutoff):
    v = coherent_vector(alpha, cutoff)
    return FockDensityMatrix(np.outer(v, v.conj()), [cutoff])


def test_vacuum_wigner_peak_and_integral():
    rho = fock_density(0, 8)
    grid = wigner(rho, extent=6.0, resolution=161)
    i0 = len(grid.xs) // 2
    assert abs(grid.values[i0, i0] - 1 / math.pi) < 1e-10
    assert abs(grid.integral() - 1.0) < 1e-3


def test_coherent_wigner_peak_location():
    alpha = 1.0 + 0.5j
    rho = coherent_density(alpha, 18)
    grid = wigner(rho, extent=4.0, resolution=161)
    ix, ip = np.unravel_index(np.argmax(grid.values), grid.values.shape)
    assert abs(grid.xs[ix] - math.sqrt(2) * alpha.real) < 0.05
    assert abs(grid.ps[ip] - math.sqrt(2) * alpha.imag) < 0.05
    assert abs(grid.integral() - 1.0) < 1e-3


def test_single_photon_negativity_volume():
    # analytic doubled negative volume of |1>: 2(2 e^{-1/2} - 1)
    rho = fock_density(1, 8)
    vol = wigner_negativity_volume(rho)
    exact = 2 * (2 * math.exp(-0.5) - 1)
    assert abs(vol - exact) < 1e-3


def test_coherent_state_has_no_negativity():
    rho = coherent_density(1.0, 16)
    assert wigner_negativity_volume(rho) < 1e-6


def test_purity_of_mixed_state():
    m = np.diag([0.5, 0.5])
    rho = FockDensityMatrix(m, [2])
    assert abs(purity(rho) - 0.5) < 1e-12
    assert abs(purity(fock_density(0, 4)) - 1.0) < 1e-12


def test_entanglement_negativity_bell_and_product():
    d = 2
    vec = np.zeros(d * d, dtype=complex)
    vec[0] = vec[3] = 1 / math.sqrt(2)
    bell = FockDensityMatrix(np.outer(vec, vec.conj()), [d, d])
    assert abs(entanglement_negativity(bell) - 0.5) < 1e-10
    v0 = np.kron(np.array([1.0, 0.0]), np.array([0.6, 0.8]))
    prod = FockDensityMatrix(np.outer(v0, v0), [d, d])
    assert entanglement_negativity(prod) < 1e-10
    assert entanglement_negativity(bell) >= 0.0


def test_bs_unitary_properties():
    u = two_mode_bs_unitary(4, 4, 0.3, -0.7)
    assert np.max(np.abs(u.conj().T @ u - np.eye(16))) < 1e-12
    # Phi = 0 is the identity
    u0 = two_mode_bs_unitary(4, 4, 0.0, 0.4)
    assert np.max(np.abs(u0 - np.eye(16))) < 1e-12


def test_search_map_gauge_symmetry():
    # (Phi, Theta) and (-Phi, Theta + pi) generate the same transform
    rng = np.random.default_rng(5)
    m = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    rho = FockDensityMatrix(m @ m.conj().T, [3, 3])
    for phi, theta in ((0.3, 0.2), (-0.5, -1.0)):
        a = entanglement_negativity(two_mode_bs_transform(rho, phi, theta))
        b = entanglement_negativity(two_mode_bs_transform(rho, -phi, theta + math.pi))
        assert abs(a - b) < 1e-10


def test_disentangle_search_recovers_planted_transform():
    # nonclassical (x) coherent product state, entangled by a known W
    cut = 8
    one = np.zeros(cut)
    one[1] = 1.0
    vec = np.kron(one, coherent_vector(0.7, cut))
    rho0 = FockDensityMatrix(np.outer(vec, vec.conj()), [cut, cut])
    phi_s, theta_s = 0.35, -0.4
    mixed = two_mode_bs_transform(rho0, -phi_s, theta_s)
    assert entanglement_negativity(mixed) > 0.05
    res = disentangle_search(mixed, resolution=25)
    assert res.minimum < 1e-3
    assert abs(res.phi0 - phi_s) < 0.05
    assert abs(res.theta0 - theta_s) < 0.05
    assert PHI_RANGE[0] <= res.phi0 <= PHI_RANGE[1]
    assert THETA_RANGE[0] <= res.theta0 <= THETA_RANGE[1]


def test_tdhf_state_is_normalized_pure():
    rho = tdhf_state(2.0, 0.3, 16)
    assert abs(np.trace(rho.matrix).real - 1.0) < 1e-12
    assert abs(rho.purity() - 1.0) < 1e-10


def test_wigner_requires_single_mode():
    m = np.eye(4) / 4
    rho = FockDensityMatrix(m, [2, 2])
    with pytest.raises(ValidationError):
        wigner(rho)


def test_numba_kernel_matches_numpy():
    if not use_numba():
        pytest.skip("numba unavailable or disabled")
    from pulsemps._wigner_kernels import wigner_points_numba

    rng = np.random.default_rng(11)
    m = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    rho = m @ m.conj().T
    rho /= np.trace(rho).real
    alphas = (rng.normal(size=64) + 1j * rng.normal(size=64)) * 1.5
    a = wigner_points_numpy(rho, alphas)
    b = wigner_points_numba(rho, alphas)
    assert np.max(np.abs(a - b)) < 1e-12
