"""Single-qubit statevector primitives.

States are normalized complex 2-vectors, gates are 2x2 unitaries, and
measurement is computational-basis only. All types are immutable values,
so they are safe to share across threads and to reuse by reference.
Randomness always comes from an explicit ``random.Random`` argument; there
is no ambient global state, which is what makes whole simulation runs
replayable from a seed.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from random import Random

import numpy as np

NORM_TOLERANCE = 1e-9
UNITARY_TOLERANCE = 1e-9


def _check_finite(z: complex, name: str) -> None:
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"{name} must be finite, got {z!r}")


@dataclass(frozen=True, slots=True)
class QubitState:
    """One simulated photon: ``alpha``·|0> + ``beta``·|1>, normalized."""

    alpha: complex
    beta: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        _check_finite(self.alpha, "alpha")
        _check_finite(self.beta, "beta")
        norm_sq = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm_sq - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"state not normalized: |alpha|^2+|beta|^2 = {norm_sq!r}")

    def probability_of_zero(self) -> float:
        return abs(self.alpha) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)


ZERO = QubitState(1.0 + 0.0j, 0.0j)
ONE = QubitState(0.0j, 1.0 + 0.0j)


def basis(bit: int) -> QubitState:
    """The computational basis state for a classical bit."""
    if bit == 0:
        return ZERO
    if bit == 1:
        return ONE
    raise ValueError(f"bit must be 0 or 1, got {bit!r}")


@dataclass(frozen=True, slots=True)
class Unitary2:
    """Row-major 2x2 unitary: [[a, b], [c, d]]. Unitarity is checked on construction."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d"):
            value = complex(getattr(self, name))
            object.__setattr__(self, name, value)
            _check_finite(value, name)
        a, b, c, d = self.a, self.b, self.c, self.d
        # U†U entrywise against the identity, in plain complex arithmetic.
        g00 = a.conjugate() * a + c.conjugate() * c
        g01 = a.conjugate() * b + c.conjugate() * d
        g10 = b.conjugate() * a + d.conjugate() * c
        g11 = b.conjugate() * b + d.conjugate() * d
        if (
            abs(g00 - 1.0) > UNITARY_TOLERANCE
            or abs(g11 - 1.0) > UNITARY_TOLERANCE
            or abs(g01) > UNITARY_TOLERANCE
            or abs(g10) > UNITARY_TOLERANCE
        ):
            raise ValueError("matrix is not unitary within tolerance")

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @classmethod
    def from_array(cls, m: np.ndarray) -> "Unitary2":
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))


IDENTITY2 = Unitary2(1, 0, 0, 1)


@dataclass(frozen=True, slots=True)
class MeasurementOutcome:
    """Result of a computational-basis measurement.

    ``collapsed`` is exactly |0> or |1>; any pre-measurement phase is
    discarded (it is a global phase of the post-measurement state).
    """

    bit: int
    collapsed: QubitState


def apply(u: Unitary2, s: QubitState) -> QubitState:
    """Matrix-vector product, renormalized to contain floating-point drift."""
    na = u.a * s.alpha + u.b * s.beta
    nb = u.c * s.alpha + u.d * s.beta
    norm = math.sqrt(abs(na) ** 2 + abs(nb) ** 2)
    return QubitState(na / norm, nb / norm)


def measure(s: QubitState, rng: Random) -> MeasurementOutcome:
    """Born-rule measurement in the computational basis.

    Exact basis states short-circuit without consuming randomness, so
    decoding classical segments never perturbs the rng stream.
    """
    if s.beta == 0:
        return MeasurementOutcome(0, ZERO)
    if s.alpha == 0:
        return MeasurementOutcome(1, ONE)
    if rng.random() < abs(s.alpha) ** 2:
        return MeasurementOutcome(0, ZERO)
    return MeasurementOutcome(1, ONE)


def inner_product(s1: QubitState, s2: QubitState) -> complex:
    """<s1|s2>, conjugate-linear in the first argument."""
    return s1.alpha.conjugate() * s2.alpha + s1.beta.conjugate() * s2.beta


def dagger(u: Unitary2) -> Unitary2:
    """Conjugate transpose."""
    return Unitary2(
        u.a.conjugate(), u.c.conjugate(), u.b.conjugate(), u.d.conjugate()
    )


def random_state(rng: Random) -> QubitState:
    """A Haar-ish random pure state (normalized complex Gaussian pair)."""
    while True:
        a = complex(rng.gauss(0, 1), rng.gauss(0, 1))
        b = complex(rng.gauss(0, 1), rng.gauss(0, 1))
        norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
        if norm > 1e-6:
            return QubitState(a / norm, b / norm)


def random_unitary(rng: Random) -> Unitary2:
    """A random element of U(2), parameterized by four angles."""
    alpha = rng.random() * math.tau
    beta = rng.random() * math.tau
    gamma = rng.random() * math.tau
    theta = rng.random() * math.tau
    g = cmath.exp(1j * alpha)
    ct, st = math.cos(theta), math.sin(theta)
    return Unitary2(
        g * cmath.exp(1j * beta) * ct,
        g * cmath.exp(1j * gamma) * st,
        -g * cmath.exp(-1j * gamma) * st,
        g * cmath.exp(-1j * beta) * ct,
    )
