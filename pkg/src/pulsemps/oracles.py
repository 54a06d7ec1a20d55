"""Independent verification machinery.

Dense Hilbert-space propagators and classical split-step integrators used to
cross-check the MPS evolution, the demultiplexer, and the analytic waveforms
used to initialize the scenario runs.  Nothing here touches the MPS code
paths it verifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pulsemps.mps import CapacityError, annihilation_operator, number_operator

DENSE_DIM_CAP = 4096


def _check_dim(dims):
    total = 1
    for d in dims:
        total *= d
    if total > DENSE_DIM_CAP:
        raise CapacityError(f"dense dimension {total} exceeds cap {DENSE_DIM_CAP}")
    return total


def _embed(op, dims, site):
    """Lift a one-site (or square multi-site) operator into the full space."""
    left = 1
    for d in dims[:site]:
        left *= d
    right = 1
    # op covers consecutive sites starting at `site`; infer how many
    cov = 1
    acc = dims[site]
    while acc < op.shape[0]:
        cov += 1
        acc *= dims[site + cov - 1]
    for d in dims[site + cov:]:
        right *= d
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def dense_hamiltonian_chi3(dz, dims):
    """Dense Bose-Hubbard chain Hamiltonian targeted by the chi3 gate layers.

    Per bond: -(1/2 dz^2)(a_m^+ a_{m+1} + h.c. - n_m - n_{m+1}); per site the
    Kerr term -(1/2 dz) a^+2 a^2.  The diagonal dispersion term is grouped
    symmetrically with each bond, so boundary sites carry half weight (for a
    single bin the dispersion term is absent entirely and only SPM remains).
    """
    dims = list(dims)
    total = _check_dim(dims)
    h = np.zeros((total, total), dtype=complex)
    for m in range(len(dims) - 1):
        d1, d2 = dims[m], dims[m + 1]
        a1, a2 = annihilation_operator(d1), annihilation_operator(d2)
        n1, n2 = number_operator(d1), number_operator(d2)
        hop = np.kron(a1.conj().T, a2) + np.kron(a1, a2.conj().T)
        diag = np.kron(n1, np.eye(d2)) + np.kron(np.eye(d1), n2)
        h += _embed(-(hop - diag) / (2 * dz ** 2), dims, m)
    for m, d in enumerate(dims):
        a = annihilation_operator(d)
        kerr = a.conj().T @ a.conj().T @ a @ a
        h += _embed(-kerr / (2 * dz), dims, m)
    return h


def dense_hamiltonian_chi2(dz, beta, dims_a, dims_b):
    """Dense chi2 two-band Hamiltonian on the interleaved layout a1,b1,a2,b2,...

    FH/SH dispersion is grouped per bond symmetrically (as for chi3); the
    three-wave-mixing term (a_m^+2 b_m + h.c.)/(2 sqrt(dz)) sits on every bin.
    """
    n_bins = len(dims_a)
    dims = []
    for da, db in zip(dims_a, dims_b):
        dims.extend([da, db])
    total = _check_dim(dims)
    h = np.zeros((total, total), dtype=complex)
    for m in range(n_bins):
        da, db = dims_a[m], dims_b[m]
        a = annihilation_operator(da)
        b = annihilation_operator(db)
        nl = (np.kron(a.conj().T @ a.conj().T, b) + np.kron(a @ a, b.conj().T)) \
            / (2 * math.sqrt(dz))
        h += _embed(nl, dims, 2 * m)
    # dispersion bonds act on next-nearest sites; build via dense kron chain
    def chain_op(ops_by_site):
        out = np.eye(1)
        for s, d in enumerate(dims):
            out = np.kron(out, ops_by_site.get(s, np.eye(d)))
        return out

    for m in range(n_bins - 1):
        for offset, coeff, dim_list in ((0, 1.0, dims_a), (1, beta, dims_b)):
            d1, d2 = dim_list[m], dim_list[m + 1]
            a1, a2 = annihilation_operator(d1), annihilation_operator(d2)
            n1, n2 = number_operator(d1), number_operator(d2)
            s1, s2 = 2 * m + offset, 2 * (m + 1) + offset
            hop = chain_op({s1: a1.conj().T, s2: a2}) + chain_op({s1: a1, s2: a2.conj().T})
            diag = chain_op({s1: n1}) + chain_op({s2: n2})
            h += -coeff * (hop - diag) / (2 * dz ** 2)
    return h


def dense_total_number(dims, weights=None):
    """Dense N_hat = sum_m w_m n_m (weights default to 1)."""
    total = _check_dim(dims)
    h = np.zeros((total, total))
    for m, d in enumerate(dims):
        w = 1.0 if weights is None else weights[m]
        h += w * _embed(number_operator(d), list(dims), m)
    return h


def dense_evolve(psi, hamiltonian, t):
    """e^{-iHt} |psi> by eigendecomposition of the Hermitian matrix."""
    evals, evecs = np.linalg.eigh(hamiltonian)
    return evecs @ (np.exp(-1j * evals * t) * (evecs.conj().T @ psi))


def lift_interferometer(unitary, dims):
    """Second-quantized lift of an N x N single-particle unitary.

    Returns the dense many-body matrix U with U^+ a_m U = sum_l M_{ml} a_l on
    the truncated product Fock space.  Built as e^{-iK} where K is the
    quadratic Hamiltonian with single-particle matrix H = i log M.
    """
    m = np.asarray(unitary, dtype=complex)
    n = m.shape[0]
    if len(dims) != n:
        raise ValueError("dims length must match unitary size")
    _check_dim(dims)
    evals, evecs = np.linalg.eig(m)
    # For K = sum h_{kl} a_k^+ a_l with h Hermitian, e^{iK} a_m e^{-iK}
    # = sum_l (e^{-ih})_{ml} a_l; choosing h = i log M and U = e^{-iK} gives
    # U^+ a_m U = sum_l M_{ml} a_l as required.
    logm = evecs @ np.diag(np.log(evals)) @ np.linalg.inv(evecs)
    h_sp = 1j * logm
    h_sp = (h_sp + h_sp.conj().T) / 2  # clean round-off
    ann = [_embed(annihilation_operator(d), list(dims), s) for s, d in enumerate(dims)]
    k = np.zeros(ann[0].shape, dtype=complex)
    for i in range(n):
        for j in range(n):
            if h_sp[i, j] != 0:
                k += h_sp[i, j] * ann[i].conj().T @ ann[j]
    from scipy.linalg import expm
    return expm(-1j * k)


# ---------------------------------------------------------------------------
# classical mean-field integrators (periodic, spectral)
# ---------------------------------------------------------------------------

@dataclass
class ClassicalField:
    """Complex envelope(s) on a periodic grid of N points spanning length L."""
    phi: np.ndarray
    dz: float
    t: float = 0.0
    psi: np.ndarray | None = None  # SH envelope for chi2 runs

    def power(self):
        p = float(np.sum(np.abs(self.phi) ** 2) * self.dz)
        if self.psi is not None:
            p += 2.0 * float(np.sum(np.abs(self.psi) ** 2) * self.dz)
        return p


def _k_grid(n, dz):
    return 2 * np.pi * np.fft.fftfreq(n, d=dz)


def classical_split_step_chi3(field, dt, steps):
    """Symmetric split-step Fourier integration of the NLSE
    i dphi/dt = -phi''/2 - |phi|^2 phi."""
    phi = field.phi.astype(complex).copy()
    k = _k_grid(len(phi), field.dz)
    half_lin = np.exp(-1j * (k ** 2) / 2 * dt / 2)
    for _ in range(steps):
        phi = np.fft.ifft(half_lin * np.fft.fft(phi))
        phi = phi * np.exp(1j * np.abs(phi) ** 2 * dt)
        phi = np.fft.ifft(half_lin * np.fft.fft(phi))
    return ClassicalField(phi=phi, dz=field.dz, t=field.t + dt * steps)


def classical_split_step_chi2(field, beta, dt, steps):
    """Split-step for the chi2 mean field:
    i dphi/dt = -phi''/2 + conj(phi) psi,  i dpsi/dt = -beta psi''/2 + phi^2/2.

    The nonlinear substep is integrated with RK4 (no closed form), keeping the
    overall scheme second order.
    """
    phi = field.phi.astype(complex).copy()
    psi = field.psi.astype(complex).copy()
    k = _k_grid(len(phi), field.dz)
    half_a = np.exp(-1j * (k ** 2) / 2 * dt / 2)
    half_b = np.exp(-1j * beta * (k ** 2) / 2 * dt / 2)

    def nl_rhs(p, q):
        return -1j * np.conj(p) * q, -1j * p ** 2 / 2

    for _ in range(steps):
        phi = np.fft.ifft(half_a * np.fft.fft(phi))
        psi = np.fft.ifft(half_b * np.fft.fft(psi))
        k1p, k1q = nl_rhs(phi, psi)
        k2p, k2q = nl_rhs(phi + dt / 2 * k1p, psi + dt / 2 * k1q)
        k3p, k3q = nl_rhs(phi + dt / 2 * k2p, psi + dt / 2 * k2q)
        k4p, k4q = nl_rhs(phi + dt * k3p, psi + dt * k3q)
        phi = phi + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        psi = psi + dt / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
        phi = np.fft.ifft(half_a * np.fft.fft(phi))
        psi = np.fft.ifft(half_b * np.fft.fft(psi))
    return ClassicalField(phi=phi, dz=field.dz, t=field.t + dt * steps, psi=psi)


# ---------------------------------------------------------------------------
# analytic waveforms
# ---------------------------------------------------------------------------

def spatial_grid(length, n_bins):
    """Bin-center coordinates of the interval [-L/2, L/2]."""
    dz = length / n_bins
    return (np.arange(n_bins) + 0.5) * dz - length / 2, dz


def waveform_sech(nbar, z, t=0.0):
    """Fundamental soliton envelope (nbar/2) sech(nbar z/2) e^{i nbar^2 t/8}."""
    return (nbar / 2) * np.exp(1j * nbar ** 2 * t / 8) / np.cosh(nbar * z / 2)


def waveform_2sech(nbar, z, t=0.0):
    """Second-order soliton (breather) envelope; nbar is the fundamental's
    photon number, the breather carries 4*nbar."""
    num = 2 * np.exp(1j * nbar ** 2 * t / 8) * nbar * (
        3 * np.exp(1j * nbar ** 2 * t) * np.cosh(nbar * z / 2) + np.cosh(3 * nbar * z / 2))
    den = 3 * np.cos(nbar ** 2 * t) + 4 * np.cosh(nbar * z) + np.cosh(2 * nbar * z)
    return num / den


def waveform_simulton(nbar, z, t=0.0):
    """Two-color simulton envelopes (FH, SH) for beta = 2.

    phi0 is tied to the FH photon number via phi0 = (3 nbar^2/32)^(1/3).
    """
    phi0 = (3 * nbar ** 2 / 32) ** (1 / 3)
    sech2 = 1 / np.cosh(math.sqrt(phi0 / 6) * z) ** 2
    phi = phi0 * sech2 * np.exp(1j * phi0 * t / 3)
    psi = -(phi0 / 2) * sech2 * np.exp(2j * phi0 * t / 3)
    return phi, psi


def normalized_supermode(envelope):
    """L2-normalize a sampled envelope into a supermode vector."""
    f = np.asarray(envelope, dtype=complex)
    nrm = np.linalg.norm(f)
    if nrm == 0:
        raise ValueError("zero envelope")
    return f / nrm
