"""Commutative transform algebra over per-qubit slot factors.

A party's secret key is a separable transform: an ordered list of 2x2
factors, one per payload qubit, standing in for the full tensor-product
unitary. Rotations

    R(t) = [[cos t, -sin t],
            [sin t,  cos t]]

satisfy R(t)·R(u) = R(t+u), so any two rotation-only keys commute, which
is the correctness condition that lets one party remove its transform
before the other. Pauli factors are available too, but distinct Paulis do
not commute with each other, so mixed keys must pass
:func:`validate_commuting` before a session starts.

``dense`` materializes the explicit 2^n matrix and exists as a test
oracle only; the simulator itself always works slotwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from random import Random
from typing import Sequence

import numpy as np

from .quantum import IDENTITY2, QubitState, Unitary2, apply

COMMUTATOR_TOLERANCE = 1e-12
DENSE_ORACLE_MAX_QUBITS = 10

TWO_PI = math.tau


class FactorKind(Enum):
    ROTATION = "rotation"
    PAULI_X = "pauli_x"
    PAULI_Y = "pauli_y"
    PAULI_Z = "pauli_z"
    IDENTITY = "identity"


@dataclass(frozen=True, slots=True)
class SlotFactor:
    """One 2x2 factor of a separable transform.

    ``theta`` is meaningful only for rotations and is stored reduced
    modulo 2*pi; for the fixed factors it is forced to 0.
    """

    kind: FactorKind
    theta: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.theta):
            raise ValueError(f"theta must be finite, got {self.theta!r}")
        if self.kind is FactorKind.ROTATION:
            object.__setattr__(self, "theta", self.theta % TWO_PI)
        else:
            object.__setattr__(self, "theta", 0.0)

    def dagger(self) -> "SlotFactor":
        if self.kind is FactorKind.ROTATION:
            return SlotFactor(FactorKind.ROTATION, -self.theta)
        return self  # Pauli and identity factors are self-adjoint


def rotation(theta: float) -> SlotFactor:
    return SlotFactor(FactorKind.ROTATION, theta)


PAULI_X = SlotFactor(FactorKind.PAULI_X)
PAULI_Y = SlotFactor(FactorKind.PAULI_Y)
PAULI_Z = SlotFactor(FactorKind.PAULI_Z)
IDENTITY = SlotFactor(FactorKind.IDENTITY)

_FIXED_UNITARIES = {
    FactorKind.PAULI_X: Unitary2(0, 1, 1, 0),
    FactorKind.PAULI_Y: Unitary2(0, -1j, 1j, 0),
    FactorKind.PAULI_Z: Unitary2(1, 0, 0, -1),
    FactorKind.IDENTITY: IDENTITY2,
}


@lru_cache(maxsize=4096)
def as_unitary(f: SlotFactor) -> Unitary2:
    """The 2x2 matrix of a slot factor."""
    if f.kind is FactorKind.ROTATION:
        c, s = math.cos(f.theta), math.sin(f.theta)
        return Unitary2(c, -s, s, c)
    return _FIXED_UNITARIES[f.kind]


def compose(u: Unitary2, v: Unitary2) -> Unitary2:
    """Matrix product u·v (v acts first)."""
    return Unitary2(
        u.a * v.a + u.b * v.c,
        u.a * v.b + u.b * v.d,
        u.c * v.a + u.d * v.c,
        u.c * v.b + u.d * v.d,
    )


def _max_entry_diff(u: Unitary2, v: Unitary2) -> float:
    return max(abs(u.a - v.a), abs(u.b - v.b), abs(u.c - v.c), abs(u.d - v.d))


def commutes(a: SlotFactor, b: SlotFactor) -> bool:
    """True iff the two factors' matrices commute entrywise within 1e-12."""
    ua, ub = as_unitary(a), as_unitary(b)
    return _max_entry_diff(compose(ua, ub), compose(ub, ua)) <= COMMUTATOR_TOLERANCE


@dataclass(frozen=True)
class SeparableTransform:
    """An n-slot tensor-product transform; slot i acts on qubit i."""

    factors: tuple[SlotFactor, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) < 1:
            raise ValueError("a separable transform needs at least one slot")

    def __len__(self) -> int:
        return len(self.factors)

    def dagger(self) -> "SeparableTransform":
        return SeparableTransform(tuple(f.dagger() for f in self.factors))


class KeyMode(Enum):
    ROTATIONS_ONLY = "rotations"
    MIXED_VALIDATED = "mixed"


@dataclass(frozen=True)
class KeyPolicy:
    """How parties draw their secret transforms.

    ``ROTATIONS_ONLY`` (the default) draws each slot angle uniformly over
    [0, 2*pi), so any two keys commute by construction. ``MIXED_VALIDATED``
    additionally permits Pauli and identity factors; sessions under it must
    pass the commutativity gate before any qubit moves.
    """

    mode: KeyMode = KeyMode.ROTATIONS_ONLY


def validate_commuting(t_a: SeparableTransform, t_b: SeparableTransform) -> bool:
    """Slotwise commutation check; sufficient because tensor products multiply slotwise."""
    if len(t_a) != len(t_b):
        raise ValueError(
            f"incompatible keys: transform lengths differ ({len(t_a)} vs {len(t_b)})"
        )
    return all(commutes(fa, fb) for fa, fb in zip(t_a.factors, t_b.factors))


def generate_key(n: int, policy: KeyPolicy, rng: Random) -> SeparableTransform:
    """Draw a fresh n-slot secret transform under the given policy."""
    if n < 1:
        raise ValueError(f"qubit count must be >= 1, got {n}")
    if policy.mode is KeyMode.ROTATIONS_ONLY:
        return SeparableTransform(tuple(rotation(rng.random() * TWO_PI) for _ in range(n)))
    factors = []
    for _ in range(n):
        pick = rng.randrange(5)
        if pick == 0:
            factors.append(rotation(rng.random() * TWO_PI))
        elif pick == 1:
            factors.append(PAULI_X)
        elif pick == 2:
            factors.append(PAULI_Y)
        elif pick == 3:
            factors.append(PAULI_Z)
        else:
            factors.append(IDENTITY)
    return SeparableTransform(tuple(factors))


def dense(t: SeparableTransform) -> np.ndarray:
    """Materialize the full 2^n matrix (test oracle; refuses large n).

    Slot order: the leftmost tensor factor is qubit 0.
    """
    if len(t) > DENSE_ORACLE_MAX_QUBITS:
        raise ValueError(
            f"dense oracle supports at most {DENSE_ORACLE_MAX_QUBITS} qubits, got {len(t)}"
        )
    out = np.array([[1.0 + 0.0j]])
    for f in t.factors:
        out = np.kron(out, as_unitary(f).as_array())
    return out


def apply_separable(
    t: SeparableTransform, register: Sequence[QubitState]
) -> list[QubitState]:
    """Apply slot i's factor to qubit i of the register."""
    if len(t) != len(register):
        raise ValueError(
            f"transform length {len(t)} does not match register length {len(register)}"
        )
    return [apply(as_unitary(f), q) for f, q in zip(t.factors, register)]
