"""Reduced density matrices in a truncated Fock basis (one or two modes)."""

from __future__ import annotations

import numpy as np

from pulsemps.mps import ValidationError


class DensityMatrixError(ValidationError):
    """Density matrix fails a physicality check beyond tolerance."""


class FockDensityMatrix:
    """Hermitian, trace-one matrix over a product Fock basis of 1 or 2 modes.

    The raw input is hermitized and trace-normalized; the deviations removed
    that way are kept as diagnostics (`trace_deviation`, `herm_deviation`).
    """

    def __init__(self, matrix, cutoffs, neg_tol=1e-6):
        cutoffs = [int(c) for c in (cutoffs if np.iterable(cutoffs) else [cutoffs])]
        if len(cutoffs) not in (1, 2):
            raise ValidationError("only 1- or 2-mode density matrices supported")
        dim = int(np.prod(cutoffs))
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (dim, dim):
            raise ValidationError(f"matrix shape {matrix.shape} != cutoffs {cutoffs}")
        self.cutoffs = cutoffs
        self.herm_deviation = float(np.max(np.abs(matrix - matrix.conj().T)))
        matrix = (matrix + matrix.conj().T) / 2
        tr = float(np.trace(matrix).real)
        self.trace_deviation = abs(tr - 1.0)
        if tr <= 0:
            raise DensityMatrixError(f"nonpositive trace {tr}")
        self.matrix = matrix / tr
        evals = np.linalg.eigvalsh(self.matrix)
        self.min_eigenvalue = float(evals[0])
        if self.min_eigenvalue < -neg_tol:
            raise DensityMatrixError(
                f"negative eigenvalue {self.min_eigenvalue:.3e} below -{neg_tol}")

    @property
    def n_modes(self):
        return len(self.cutoffs)

    def as_tensor(self):
        """Reshape to (j1, ..., js, j1', ..., js')."""
        return self.matrix.reshape(*self.cutoffs, *self.cutoffs)

    def purity(self):
        return float(np.trace(self.matrix @ self.matrix).real)

    def mean_photon_number(self, mode=None):
        t = self.as_tensor()
        if self.n_modes == 1:
            n = np.arange(self.cutoffs[0])
            return float(np.sum(n * np.diag(self.matrix).real))
        rho_a = np.einsum("abcb->ac", t)
        rho_b = np.einsum("abac->bc", t)
        na = float(np.sum(np.arange(self.cutoffs[0]) * np.diag(rho_a).real))
        nb = float(np.sum(np.arange(self.cutoffs[1]) * np.diag(rho_b).real))
        if mode == 0:
            return na
        if mode == 1:
            return nb
        return na + nb

    def fidelity_to_pure(self, vec):
        """<psi|rho|psi> for a pure target state."""
        v = np.asarray(vec, dtype=complex)
        v = v / np.linalg.norm(v)
        return float((v.conj() @ self.matrix @ v).real)


def partial_trace(rho, keep):
    """Trace out one mode of a two-mode density matrix; keep in {0, 1}."""
    if rho.n_modes != 2:
        raise ValidationError("partial_trace needs a two-mode density matrix")
    t = rho.as_tensor()
    if keep == 0:
        red = np.einsum("abcb->ac", t)
        return FockDensityMatrix(red, [rho.cutoffs[0]])
    if keep == 1:
        red = np.einsum("abac->bc", t)
        return FockDensityMatrix(red, [rho.cutoffs[1]])
    raise ValidationError("keep must be 0 or 1")


def coherent_vector(alpha, cutoff):
    """Truncated coherent-state amplitudes (renormalized)."""
    n = np.arange(cutoff)
    logfact = np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, cutoff))]))
    vec = np.exp(-abs(alpha) ** 2 / 2) * complex(alpha) ** n / np.exp(logfact / 2)
    return vec / np.linalg.norm(vec)
