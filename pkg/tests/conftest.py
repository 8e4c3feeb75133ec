"""Shared test oracles.

These deliberately recompute expectations through independent paths
(dense tensor algebra, density matrices, brute-force matrix products) so
the tests never trust the code they are checking.
"""
import math
from random import Random

import numpy as np
import pytest

from threestage.transforms import SeparableTransform, rotation


def product_amplitudes(register) -> np.ndarray:
    """Kronecker product of single-qubit amplitude vectors (oracle)."""
    out = np.array([1.0 + 0.0j])
    for q in register:
        out = np.kron(out, np.array([q.alpha, q.beta], dtype=complex))
    return out


def rotation_matrix(theta: float) -> np.ndarray:
    """The 2x2 rotation written out directly, independent of the library."""
    return np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]],
        dtype=complex,
    )


def kron_all(matrices) -> np.ndarray:
    out = np.array([[1.0 + 0.0j]])
    for m in matrices:
        out = np.kron(out, m)
    return out


def random_rotation_transform(rng: Random, n: int) -> SeparableTransform:
    return SeparableTransform(tuple(rotation(rng.random() * math.tau) for _ in range(n)))


def intercept_error_probability(theta_a: float, theta_b: float, bit: int) -> float:
    """Exact density-matrix oracle for one intercept-resend round.

    The qubit is rotated by theta_a, collapsed in the computational basis
    by the eavesdropper, then carried through the remaining three
    transform steps (rotate theta_b, unrotate theta_a, unrotate theta_b).
    Returns the receiver's probability of reading the wrong bit.
    """
    e = np.array([1.0, 0.0]) if bit == 0 else np.array([0.0, 1.0])
    v = rotation_matrix(theta_a) @ e
    rho = np.diag([abs(v[0]) ** 2, abs(v[1]) ** 2]).astype(complex)
    residual = (
        rotation_matrix(-theta_b) @ rotation_matrix(-theta_a) @ rotation_matrix(theta_b)
    )
    rho = residual @ rho @ residual.conj().T
    wrong = 1 - bit
    return float(rho[wrong, wrong].real)


@pytest.fixture
def rng():
    return Random(1234)
