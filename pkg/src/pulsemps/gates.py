"""Trotter gates and layer schedules for the chi3 and chi2 chains.

Gate exponentials are computed by eigendecomposition of the Hermitian
generator so the result is unitary to round-off.  A schedule is an ordered
list of layers; gates within a layer act on disjoint sites and commute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from pulsemps.mps import (
    LocalMPO,
    TwoSiteGate,
    ValidationError,
    annihilation_operator,
    number_operator,
    swap_gate,
)


@dataclass(frozen=True)
class Chi3Params:
    """Discretization of the Kerr chain: domain length, bin count, step size."""
    length: float
    n_bins: int
    dt: float

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValidationError("n_bins must be >= 1")
        if self.length <= 0 or self.dt <= 0:
            raise ValidationError("length and dt must be positive")

    @property
    def dz(self):
        return self.length / self.n_bins


@dataclass(frozen=True)
class Chi2Params:
    """Two-band chain; beta is the SH dispersion relative to FH."""
    length: float
    n_bins: int
    dt: float
    beta: float = 2.0

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValidationError("n_bins must be >= 1")
        if self.length <= 0 or self.dt <= 0:
            raise ValidationError("length and dt must be positive")

    @property
    def dz(self):
        return self.length / self.n_bins


@dataclass(frozen=True)
class Placement:
    """A gate at a site: one-site if `gate` is a plain matrix, else two-site."""
    site: int
    gate: object

    @property
    def sites(self):
        if isinstance(self.gate, TwoSiteGate):
            return (self.site, self.site + 1)
        return (self.site,)


class GateSchedule:
    """Ordered layers of commuting gate placements making up one Trotter step."""

    def __init__(self, layers, dt, label=""):
        self.layers = [list(layer) for layer in layers if layer]
        self.dt = dt
        self.label = label
        for i, layer in enumerate(self.layers):
            seen = set()
            for p in layer:
                for s in p.sites:
                    if s in seen:
                        raise ValidationError(f"layer {i}: site {s} used twice")
                    seen.add(s)

    def apply(self, state):
        """Apply one full step to the MPS; returns the truncation weight."""
        weight = 0.0
        for layer in self.layers:
            for p in layer:
                if isinstance(p.gate, TwoSiteGate):
                    weight += state.apply_two_site_gate(p.site, p.gate)
                else:
                    state.apply_one_site_gate(p.site, p.gate)
        return weight

    def describe(self):
        """Human-readable layer listing for debugging."""
        lines = [f"schedule {self.label or '<unnamed>'}: dt={self.dt}, "
                 f"{len(self.layers)} layers"]
        for i, layer in enumerate(self.layers):
            items = []
            for p in layer:
                kind = "2s" if isinstance(p.gate, TwoSiteGate) else "1s"
                items.append(f"{kind}@{p.site}")
            lines.append(f"  layer {i}: " + " ".join(items))
        return "\n".join(lines)


def _expm_hermitian(h, prefactor):
    """exp(prefactor * h) for Hermitian h and purely imaginary prefactor."""
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(prefactor * evals)) @ evecs.conj().T


def spm_gate(dz, dt, d):
    """Self-phase-modulation phase gate: diag exp(i dt n(n-1)/(2 dz))."""
    n = np.arange(d)
    return np.diag(np.exp(1j * dt * n * (n - 1) / (2 * dz)))


def hopping_gate(dz, dt, coeff, d):
    """Dispersion bond gate exp[i c dt/(2 dz^2)(a+ a + a a+ - n - n)].

    coeff is 1 for the FH/chi3 field and beta for the SH field.
    """
    a = annihilation_operator(d)
    n = number_operator(d)
    gen = np.kron(a.conj().T, a) + np.kron(a, a.conj().T) \
        - np.kron(n, np.eye(d)) - np.kron(np.eye(d), n)
    u = _expm_hermitian(gen, 1j * coeff * dt / (2 * dz ** 2))
    return TwoSiteGate(u, d, d)


def nl3wm_gate(dz, dt, d_a, d_b):
    """Three-wave-mixing gate exp(-i dt (a+2 b + a2 b+)/(2 sqrt(dz)))."""
    if d_a < 3:
        raise ValidationError("FH cutoff must allow at least 2 photons")
    a = annihilation_operator(d_a)
    b = annihilation_operator(d_b)
    h = (np.kron(a.conj().T @ a.conj().T, b) + np.kron(a @ a, b.conj().T)) \
        / (2 * math.sqrt(dz))
    u = _expm_hermitian(h, -1j * dt)
    return TwoSiteGate(u, d_a, d_b)


def _chi3_layers(params, d, tau):
    n = params.n_bins
    s_layer = [Placement(m, spm_gate(params.dz, tau, d)) for m in range(n)]
    hop = hopping_gate(params.dz, tau, 1.0, d)
    odd = [Placement(m, hop) for m in range(0, n - 1, 2)]
    even = [Placement(m, hop) for m in range(1, n - 1, 2)]
    return [s_layer, odd, even]


def chi3_schedule(params, d, order=2):
    """One Trotter step for the Kerr chain.

    order=1 is the plain (S)(D_odd)(D_even) splitting; order=2 symmetrizes it
    by running the half-step layer list forward then mirrored.
    """
    if order == 1:
        return GateSchedule(_chi3_layers(params, d, params.dt), params.dt,
                            label="chi3/order1")
    if order == 2:
        half = _chi3_layers(params, d, params.dt / 2)
        return GateSchedule(half + half[::-1], params.dt, label="chi3/order2")
    raise ValidationError("order must be 1 or 2")


def _chi2_blocks(params, d_a, d_b, tau):
    """Layout-neutral blocks (lists of layers) for one first-order chi2 step.

    Each dispersion block is a swap / gate / swap-back triplet, so the MPS
    site layout is the interleaved one before and after every block; the
    Strang variant can therefore mirror the block sequence safely.
    """
    n = params.n_bins
    dz = params.dz
    nl = nl3wm_gate(dz, tau, d_a, d_b)
    hop_a = hopping_gate(dz, tau, 1.0, d_a)
    hop_b = hopping_gate(dz, tau, params.beta, d_b)
    sw_ba = swap_gate(d_b, d_a)
    sw_ab = swap_gate(d_a, d_b)
    blocks = [[[Placement(2 * m, nl) for m in range(n)]]]
    for parity in (0, 1):
        bonds = list(range(parity, n - 1, 2))
        if not bonds:
            continue
        # FH: swap b_m with a_{m+1}, gate on (a_m, a_{m+1}), swap back
        blocks.append([
            [Placement(2 * m + 1, sw_ba) for m in bonds],
            [Placement(2 * m, hop_a) for m in bonds],
            [Placement(2 * m + 1, sw_ab) for m in bonds],
        ])
    for parity in (0, 1):
        bonds = list(range(parity, n - 1, 2))
        if not bonds:
            continue
        # SH: swap a_{m+1} with b_{m+1} to bring b_{m+1} next to b_m
        blocks.append([
            [Placement(2 * m + 2, sw_ab) for m in bonds],
            [Placement(2 * m + 1, hop_b) for m in bonds],
            [Placement(2 * m + 2, sw_ba) for m in bonds],
        ])
    return blocks


def chi2_schedule(params, d_a, d_b, order=2):
    """One Trotter step for the chi2 chain on 2*n_bins MPS sites."""
    if order == 1:
        blocks = _chi2_blocks(params, d_a, d_b, params.dt)
        layers = [layer for block in blocks for layer in block]
        return GateSchedule(layers, params.dt, label="chi2/order1")
    if order == 2:
        blocks = _chi2_blocks(params, d_a, d_b, params.dt / 2)
        layers = [layer for block in blocks + blocks[::-1] for layer in block]
        return GateSchedule(layers, params.dt, label="chi2/order2")
    raise ValidationError("order must be 1 or 2")


def interleave_dims(d_a, d_b, n_bins):
    """Local dims of the a1,b1,a2,b2,... layout."""
    dims = []
    for _ in range(n_bins):
        dims.extend([d_a, d_b])
    return dims


def number_mpo(local_dims, site):
    """n_m as a bond-1 MPO."""
    return LocalMPO.from_local_ops(local_dims, {site: number_operator(local_dims[site])})


def total_number_mpo(local_dims, weights=None):
    """sum_m w_m n_m as a bond-2 MPO (weights default to 1)."""
    n_sites = len(local_dims)
    if weights is None:
        weights = [1.0] * n_sites
    tensors = []
    for m, d in enumerate(local_dims):
        eye = np.eye(d)
        num = weights[m] * number_operator(d)
        if n_sites == 1:
            tensors.append(num.reshape(1, d, d, 1))
        elif m == 0:
            w = np.zeros((1, d, d, 2), dtype=complex)
            w[0, :, :, 0] = eye
            w[0, :, :, 1] = num
            tensors.append(w)
        elif m == n_sites - 1:
            w = np.zeros((2, d, d, 1), dtype=complex)
            w[0, :, :, 0] = num
            w[1, :, :, 0] = eye
            tensors.append(w)
        else:
            w = np.zeros((2, d, d, 2), dtype=complex)
            w[0, :, :, 0] = eye
            w[0, :, :, 1] = num
            w[1, :, :, 1] = eye
            tensors.append(w)
    return LocalMPO(tensors)


def charge_mpo(local_dims):
    """Manley-Rowe charge N_a + 2 N_b on the interleaved chi2 layout."""
    weights = [1.0 if m % 2 == 0 else 2.0 for m in range(len(local_dims))]
    return total_number_mpo(local_dims, weights)
