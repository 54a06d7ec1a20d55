"""Phase-space and entanglement diagnostics on Fock density matrices.

Conventions: phase-space coordinates are the quadratures x = sqrt(2) Re(a),
p = sqrt(2) Im(a), so the vacuum Wigner function is exp(-x^2-p^2)/pi with
peak 1/pi and integral 1, and a coherent state of amplitude a peaks at
(sqrt(2) Re a, sqrt(2) Im a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from pulsemps._wigner_kernels import wigner_points
from pulsemps.density import FockDensityMatrix, partial_trace
from pulsemps.mps import NumericalError, ValidationError, annihilation_operator

PHI_RANGE = (-math.pi / 4, math.pi / 4)
THETA_RANGE = (-math.pi / 2, math.pi / 2)


@dataclass
class WignerGrid:
    """W(x,p) sampled on a rectangular grid; values indexed [ix, ip]."""
    xs: np.ndarray
    ps: np.ndarray
    values: np.ndarray
    tail_warning: bool = False

    def integral(self):
        return float(np.trapezoid(np.trapezoid(self.values, self.ps, axis=1),
                                  self.xs))

    def rows(self):
        out = []
        for i, x in enumerate(self.xs):
            for j, p in enumerate(self.ps):
                out.append((float(x), float(p), float(self.values[i, j])))
        return out


def wigner(rho, extent=5.0, resolution=101, xs=None, ps=None, tail_tol=1e-4):
    """Wigner function of a single-mode density matrix on a grid.

    Either pass explicit axis vectors or a symmetric extent and point count.
    Sets tail_warning when the top Fock level holds more than tail_tol of the
    population (cutoff likely too small for the requested extent).
    """
    if rho.n_modes != 1:
        raise ValidationError("wigner needs a single-mode density matrix")
    if xs is None:
        xs = np.linspace(-extent, extent, resolution)
    if ps is None:
        ps = np.linspace(-extent, extent, resolution)
    xs = np.asarray(xs, dtype=float)
    ps = np.asarray(ps, dtype=float)
    alphas = (xs[:, None] + 1j * ps[None, :]) / math.sqrt(2)
    vals = wigner_points(rho.matrix, alphas.ravel()).reshape(alphas.shape)
    top = float(rho.matrix[-1, -1].real)
    return WignerGrid(xs=xs, ps=ps, values=vals, tail_warning=top > tail_tol)


def wigner_negativity_volume(rho, step=0.05, boundary_tol=1e-6, max_extent=40.0):
    """Doubled volume of Wigner negativity: integral of (|W| - W) dx dp.

    The grid is extended (doubling the half-width) until the boundary ring of
    the grid is below boundary_tol in |W|, so no negative mass is cut off.
    """
    if rho.n_modes != 1:
        raise ValidationError("negativity volume needs a single-mode matrix")
    nbar = rho.mean_photon_number()
    extent = max(3.0, 1.5 * math.sqrt(2 * (nbar + 1)) + 2.0)
    while True:
        n = int(round(2 * extent / step)) + 1
        grid = wigner(rho, xs=np.linspace(-extent, extent, n),
                      ps=np.linspace(-extent, extent, n))
        w = grid.values
        boundary = max(np.max(np.abs(w[0, :])), np.max(np.abs(w[-1, :])),
                       np.max(np.abs(w[:, 0])), np.max(np.abs(w[:, -1])))
        if boundary < boundary_tol:
            break
        extent *= 2.0
        if extent > max_extent:
            raise NumericalError(
                f"negativity quadrature did not localize within extent {max_extent}")
    neg = np.abs(w) - w
    return float(np.trapezoid(np.trapezoid(neg, grid.ps, axis=1), grid.xs))


def purity(rho):
    return rho.purity()


def entanglement_negativity(rho):
    """(||rho^{T_A}||_1 - 1)/2 for a two-mode density matrix."""
    if rho.n_modes != 2:
        raise ValidationError("entanglement negativity needs two modes")
    t = rho.as_tensor()
    # partial transpose on the first mode: swap its ket/bra indices
    pt = np.transpose(t, (2, 1, 0, 3))
    dim = rho.cutoffs[0] * rho.cutoffs[1]
    evals = np.linalg.eigvalsh(pt.reshape(dim, dim))
    return float((np.sum(np.abs(evals)) - 1.0) / 2.0)


def _bs_generator_parts(d_a, d_b):
    a = annihilation_operator(d_a)
    b = annihilation_operator(d_b)
    return np.kron(a.conj().T, b), np.kron(np.diag(np.arange(d_a, dtype=float)),
                                           np.eye(d_b))


def two_mode_bs_unitary(d_a, d_b, phi, theta):
    """W(Phi,Theta) = exp{Phi(e^{i Theta} a^+ b - e^{-i Theta} a b^+)}."""
    cross, _ = _bs_generator_parts(d_a, d_b)
    gen = np.exp(1j * theta) * cross - np.exp(-1j * theta) * cross.conj().T
    h = 1j * gen  # Hermitian
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * phi * evals)) @ evecs.conj().T


def two_mode_bs_transform(rho, phi, theta):
    """rho' = W(Phi,Theta)^+ rho W(Phi,Theta) on the truncated two-mode space."""
    if rho.n_modes != 2:
        raise ValidationError("beamsplitter transform needs two modes")
    u = two_mode_bs_unitary(rho.cutoffs[0], rho.cutoffs[1], phi, theta)
    return FockDensityMatrix(u.conj().T @ rho.matrix @ u, rho.cutoffs)


@dataclass
class BsSearchResult:
    """Negativity landscape over (Phi,Theta) and its minimizer."""
    phi_axis: np.ndarray
    theta_axis: np.ndarray
    values: np.ndarray
    phi0: float
    theta0: float
    minimum: float

    def rows(self):
        out = []
        for i, ph in enumerate(self.phi_axis):
            for j, th in enumerate(self.theta_axis):
                out.append((float(ph), float(th), float(self.values[i, j])))
        return out


def disentangle_search(rho, resolution=41, refine=True, refine_tol=1e-4):
    """Find the beamsplitter angles minimizing the entanglement negativity.

    Scans a resolution x resolution grid over the (Phi,Theta) box, picking the
    lexicographically smallest grid minimizer on ties, then refines with
    Nelder-Mead on the continuous objective.
    """
    if rho.n_modes != 2:
        raise ValidationError("disentangle search needs two modes")
    phis = np.linspace(*PHI_RANGE, resolution)
    thetas = np.linspace(*THETA_RANGE, resolution)

    def objective(phi, theta):
        return entanglement_negativity(two_mode_bs_transform(rho, phi, theta))

    values = np.empty((resolution, resolution))
    for i, ph in enumerate(phis):
        for j, th in enumerate(thetas):
            values[i, j] = objective(ph, th)
    best = np.min(values)
    ties = np.argwhere(values <= best + 1e-12)
    i0, j0 = min((int(i), int(j)) for i, j in ties)
    phi0, theta0, minimum = float(phis[i0]), float(thetas[j0]), float(values[i0, j0])
    if refine:
        res = minimize(lambda v: objective(v[0], v[1]), x0=[phi0, theta0],
                       method="Nelder-Mead", bounds=[PHI_RANGE, THETA_RANGE],
                       options={"fatol": refine_tol, "xatol": 1e-4})
        if res.fun < minimum:
            phi0, theta0 = float(res.x[0]), float(res.x[1])
            minimum = float(res.fun)
    return BsSearchResult(phi_axis=phis, theta_axis=thetas, values=values,
                          phi0=phi0, theta0=theta0, minimum=minimum)


def tdhf_state(nbar, t, cutoff):
    """Single-supermode mean-field soliton state as a pure density matrix.

    Fock amplitudes c_n ~ e^{-nbar/2} exp(i (2n - nbar) nbar n t / 8)
    alpha^n / sqrt(n!) with alpha = sqrt(nbar), renormalized on the cutoff.
    """
    n = np.arange(cutoff)
    logfact = np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, cutoff))]))
    amp = np.exp(-nbar / 2) * math.sqrt(nbar) ** n / np.exp(logfact / 2)
    vec = amp * np.exp(1j * (2 * n - nbar) * nbar * n * t / 8)
    vec = vec / np.linalg.norm(vec)
    return FockDensityMatrix(np.outer(vec, vec.conj()), [cutoff])
