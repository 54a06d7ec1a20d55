"""Shared helpers for the test suite."""

import numpy as np
import pytest

from pulsemps.mps import dense_to_mps


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_orthonormal_rows(rng, s, n):
    """s orthonormal complex row vectors of length n."""
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, _ = np.linalg.qr(m)
    return q[:, :s].T.copy()


def random_mps(rng, local_dims, chi_max=None):
    """Random normalized dense state converted to a Vidal MPS."""
    dim = int(np.prod(local_dims))
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    vec /= np.linalg.norm(vec)
    return dense_to_mps(vec, local_dims, chi_max=chi_max), vec


def state_overlap(vec_a, vec_b):
    return abs(np.vdot(vec_a, vec_b)) ** 2
