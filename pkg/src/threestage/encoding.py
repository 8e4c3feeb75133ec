"""Conversion between classical bits and qubit sequences, plus frame layout.

Classical bits ride the channel as computational-basis photons, with an
odd per-bit redundancy so the receiver can majority-vote each group. A
frame is header + auth segment + payload segment; the header is
self-describing (segment lengths and auth redundancy) so a receiver can
locate the auth/payload boundary, and is itself encoded at a fixed
redundancy of 3 so it survives single flips.

Payload qubits pass through frame/deframe untouched: nothing here ever
measures them.
"""
from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Sequence

from .errors import FramingError
from .quantum import ONE, ZERO, QubitState, measure

Bits = Sequence[int]

HEADER_REDUNDANCY = 3
HEADER_BITS = 32 + 32 + 8  # auth length (bits), payload length (qubits), redundancy
HEADER_QUBITS = HEADER_BITS * HEADER_REDUNDANCY
MAX_SEGMENT_LEN = 2**32 - 1
MAX_REDUNDANCY = 255


def bytes_to_bits(data: bytes) -> list[int]:
    """Big-endian bit expansion, most significant bit of each byte first."""
    bits = []
    for byte in data:
        for shift in range(7, -1, -1):
            bits.append((byte >> shift) & 1)
    return bits


def bits_to_bytes(bits: Bits) -> bytes:
    if len(bits) % 8 != 0:
        raise ValueError(f"bit count must be a multiple of 8, got {len(bits)}")
    out = bytearray()
    for i in range(0, len(bits), 8):
        byte = 0
        for b in bits[i : i + 8]:
            byte = (byte << 1) | (b & 1)
        out.append(byte)
    return bytes(out)


@dataclass(frozen=True, slots=True)
class RedundancyFactor:
    """Photons emitted per classical bit; odd so majority vote is unambiguous."""

    r: int

    def __post_init__(self) -> None:
        if not isinstance(self.r, int) or self.r < 1 or self.r % 2 == 0:
            raise ValueError(f"redundancy must be a positive odd integer, got {self.r!r}")


def encode_q(bits: Bits, r: RedundancyFactor) -> list[QubitState]:
    """Each bit b becomes r copies of the basis state |b>."""
    zeros = [ZERO] * r.r
    ones = [ONE] * r.r
    out: list[QubitState] = []
    for b in bits:
        if b == 0:
            out.extend(zeros)
        elif b == 1:
            out.extend(ones)
        else:
            raise ValueError(f"bits must be 0 or 1, got {b!r}")
    return out


def decode_q(qubits: Sequence[QubitState], r: RedundancyFactor, rng: Random) -> list[int]:
    """Measure each group of r qubits and majority-vote the bit.

    Exact basis states decode without consuming randomness (see
    :func:`threestage.quantum.measure`).
    """
    if len(qubits) % r.r != 0:
        raise FramingError(
            f"qubit count {len(qubits)} is not divisible by redundancy {r.r}"
        )
    bits = []
    width = r.r
    for i in range(0, len(qubits), width):
        ones = 0
        for q in qubits[i : i + width]:
            if q.beta == 0:
                pass
            elif q.alpha == 0:
                ones += 1
            else:
                ones += measure(q, rng).bit
        bits.append(1 if 2 * ones > width else 0)
    return bits


@dataclass(frozen=True)
class QubitFrame:
    """One on-channel message: header, basis-encoded auth segment, payload."""

    header_qubits: tuple[QubitState, ...]
    auth_qubits: tuple[QubitState, ...]
    payload_qubits: tuple[QubitState, ...]


def _pack_header(auth_len_bits: int, payload_len_qubits: int, r: int) -> bytes:
    return (
        auth_len_bits.to_bytes(4, "big")
        + payload_len_qubits.to_bytes(4, "big")
        + r.to_bytes(1, "big")
    )


def frame(
    auth_bits: Bits, payload_qubits: Sequence[QubitState], r: RedundancyFactor
) -> QubitFrame:
    """Assemble a frame; ``r`` is the redundancy applied to the auth segment."""
    if len(auth_bits) > MAX_SEGMENT_LEN or len(payload_qubits) > MAX_SEGMENT_LEN:
        raise ValueError("segment length overflows the 32-bit header field")
    if r.r > MAX_REDUNDANCY:
        raise ValueError(f"redundancy {r.r} overflows the 8-bit header field")
    header_bits = bytes_to_bits(_pack_header(len(auth_bits), len(payload_qubits), r.r))
    return QubitFrame(
        header_qubits=tuple(encode_q(header_bits, RedundancyFactor(HEADER_REDUNDANCY))),
        auth_qubits=tuple(encode_q(auth_bits, r)),
        payload_qubits=tuple(payload_qubits),
    )


def deframe(f: QubitFrame, rng: Random) -> tuple[list[int], tuple[QubitState, ...]]:
    """Decode the auth segment; return payload qubits unmeasured.

    Raises FramingError when the header is malformed or does not match the
    actual segment lengths.
    """
    if len(f.header_qubits) != HEADER_QUBITS:
        raise FramingError(
            f"header has {len(f.header_qubits)} qubits, expected {HEADER_QUBITS}"
        )
    header_bits = decode_q(f.header_qubits, RedundancyFactor(HEADER_REDUNDANCY), rng)
    header = bits_to_bytes(header_bits)
    auth_len = int.from_bytes(header[0:4], "big")
    payload_len = int.from_bytes(header[4:8], "big")
    r = header[8]
    if r < 1 or r % 2 == 0:
        raise FramingError(f"header declares invalid redundancy {r}")
    if len(f.auth_qubits) != auth_len * r:
        raise FramingError(
            f"auth segment has {len(f.auth_qubits)} qubits, header declares {auth_len * r}"
        )
    if len(f.payload_qubits) != payload_len:
        raise FramingError(
            f"payload has {len(f.payload_qubits)} qubits, header declares {payload_len}"
        )
    auth_bits = decode_q(f.auth_qubits, RedundancyFactor(r), rng)
    return auth_bits, f.payload_qubits


def frame_auth_redundancy(f: QubitFrame) -> int:
    """Read the auth redundancy field from a frame header (classical, public)."""
    if len(f.header_qubits) != HEADER_QUBITS:
        raise FramingError("header has unexpected length")
    header_bits = decode_q(
        f.header_qubits, RedundancyFactor(HEADER_REDUNDANCY), Random(0)
    )
    return bits_to_bytes(header_bits)[8]
