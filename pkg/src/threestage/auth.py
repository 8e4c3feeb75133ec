"""Classical authentication layer: records, sealing, and the four messages.

The key-distribution flow rides alongside the qubits as basis-encoded
classical bits:

    1. A -> B:   msg1 = ID_A || N_a
    2. B -> KDC: msg2 = ID_B || N_b || seal(K_b, {ID_A, N_a, T_b})
    3. KDC -> A: msg3 = seal(K_a, {ID_B, N_a, K_s, T_b}) || seal(K_b, {ID_A, K_s, T_b}) || N_b
    4. A -> B:   msg4 = seal(K_b, {ID_A, K_s, T_b}) || seal(K_s, {N_b})

N_b travels in the open on purpose; T_b is read from, and later checked
against, Bob's clock only, so no cross-party clock synchronization is
required. The sealing scheme is a deterministic-testable toy (keyed
BLAKE2b keystream XOR plus a 16-byte keyed tag) kept behind seal/unseal so
a production cipher can be swapped in without touching the protocol code.
"""
from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from random import Random
from typing import Iterable, Mapping, NamedTuple, Union

from .encoding import Bits, bits_to_bytes, bytes_to_bits
from .errors import AbortReason, IntegrityError, MalformedRecord, ProtocolAbort

PARTY_ID_LEN = 8
NONCE_LEN = 16
TIMESTAMP_LEN = 8
SESSION_KEY_LEN = 32
MASTER_KEY_LEN = 32
SEAL_NONCE_LEN = 16
TAG_LEN = 16

MAX_TIMESTAMP = 2**64 - 1


# ---------------------------------------------------------------------------
# identities, nonces, keys, clocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class PartyId:
    """8-byte principal identifier; must be nonzero."""

    data: bytes

    def __post_init__(self) -> None:
        if len(self.data) != PARTY_ID_LEN:
            raise ValueError(f"party id must be {PARTY_ID_LEN} bytes")
        if self.data == bytes(PARTY_ID_LEN):
            raise ValueError("party id must be nonzero")

    @classmethod
    def from_name(cls, name: str) -> "PartyId":
        raw = name.encode("utf-8")
        if not 1 <= len(raw) <= PARTY_ID_LEN:
            raise ValueError(f"name must encode to 1..{PARTY_ID_LEN} bytes")
        return cls(raw.ljust(PARTY_ID_LEN, b"\x00"))

    def display(self) -> str:
        printable = self.data.rstrip(b"\x00")
        try:
            return printable.decode("ascii")
        except UnicodeDecodeError:
            return self.data.hex()


@dataclass(frozen=True, slots=True)
class Nonce:
    """16 fresh random bytes; drawn once per party per session."""

    data: bytes

    def __post_init__(self) -> None:
        if len(self.data) != NONCE_LEN:
            raise ValueError(f"nonce must be {NONCE_LEN} bytes")

    @classmethod
    def fresh(cls, rng: Random) -> "Nonce":
        return cls(rng.randbytes(NONCE_LEN))


@dataclass(frozen=True, slots=True)
class SessionKey:
    """32 bytes, generated only by the KDC, fresh per session."""

    data: bytes

    def __post_init__(self) -> None:
        if len(self.data) != SESSION_KEY_LEN:
            raise ValueError(f"session key must be {SESSION_KEY_LEN} bytes")


@dataclass(frozen=True, slots=True)
class MasterKey:
    """32 bytes shared between one party and the KDC."""

    data: bytes

    def __post_init__(self) -> None:
        if len(self.data) != MASTER_KEY_LEN:
            raise ValueError(f"master key must be {MASTER_KEY_LEN} bytes")


SealingKey = Union[MasterKey, SessionKey]


class Timeline:
    """Shared simulated time, in milliseconds. Advanced only by the harness."""

    def __init__(self, start_ms: int = 1_000_000_000):
        self.now_ms = start_ms

    def advance(self, ms: int) -> None:
        if ms < 0:
            raise ValueError("time cannot run backwards")
        self.now_ms += ms


@dataclass
class Clock:
    """A party's local view of the timeline; offsets model clock skew."""

    timeline: Timeline
    offset_ms: int = 0

    def now(self) -> int:
        return self.timeline.now_ms + self.offset_ms


# ---------------------------------------------------------------------------
# records and canonical serialization
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Msg1:
    id_a: PartyId
    n_a: Nonce


@dataclass(frozen=True, slots=True)
class TicketReq:
    id_a: PartyId
    n_a: Nonce
    t_b: int


@dataclass(frozen=True, slots=True)
class PackageA:
    id_b: PartyId
    n_a: Nonce
    k_s: SessionKey
    t_b: int


@dataclass(frozen=True, slots=True)
class TicketB:
    id_a: PartyId
    k_s: SessionKey
    t_b: int


@dataclass(frozen=True, slots=True)
class Confirm:
    n_b: Nonce


AuthRecord = Union[Msg1, TicketReq, PackageA, TicketB, Confirm]

_RECORD_TAGS: dict[type, int] = {Msg1: 1, TicketReq: 2, PackageA: 3, TicketB: 4, Confirm: 5}
_TAG_TYPES = {tag: cls for cls, tag in _RECORD_TAGS.items()}


def _pack_timestamp(t: int) -> bytes:
    if not 0 <= t <= MAX_TIMESTAMP:
        raise ValueError(f"timestamp out of 64-bit range: {t}")
    return t.to_bytes(TIMESTAMP_LEN, "big")


def serialize(rec: AuthRecord) -> bytes:
    """Canonical layout: 1-byte variant tag, then fields in declared order."""
    tag = _RECORD_TAGS.get(type(rec))
    if tag is None:
        raise TypeError(f"not an auth record: {rec!r}")
    head = bytes([tag])
    if isinstance(rec, Msg1):
        return head + rec.id_a.data + rec.n_a.data
    if isinstance(rec, TicketReq):
        return head + rec.id_a.data + rec.n_a.data + _pack_timestamp(rec.t_b)
    if isinstance(rec, PackageA):
        return head + rec.id_b.data + rec.n_a.data + rec.k_s.data + _pack_timestamp(rec.t_b)
    if isinstance(rec, TicketB):
        return head + rec.id_a.data + rec.k_s.data + _pack_timestamp(rec.t_b)
    return head + rec.n_b.data  # Confirm


def serialized_len(record_type: type) -> int:
    lengths = {
        Msg1: 1 + PARTY_ID_LEN + NONCE_LEN,
        TicketReq: 1 + PARTY_ID_LEN + NONCE_LEN + TIMESTAMP_LEN,
        PackageA: 1 + PARTY_ID_LEN + NONCE_LEN + SESSION_KEY_LEN + TIMESTAMP_LEN,
        TicketB: 1 + PARTY_ID_LEN + SESSION_KEY_LEN + TIMESTAMP_LEN,
        Confirm: 1 + NONCE_LEN,
    }
    return lengths[record_type]


def parse(data: bytes) -> AuthRecord:
    """Inverse of :func:`serialize`; rejects unknown tags and wrong lengths."""
    if len(data) < 1:
        raise MalformedRecord("empty record")
    cls = _TAG_TYPES.get(data[0])
    if cls is None:
        raise MalformedRecord(f"unknown record tag {data[0]}")
    if len(data) != serialized_len(cls):
        raise MalformedRecord(
            f"{cls.__name__} record must be {serialized_len(cls)} bytes, got {len(data)}"
        )
    body = data[1:]
    try:
        if cls is Msg1:
            return Msg1(PartyId(body[:8]), Nonce(body[8:24]))
        if cls is TicketReq:
            return TicketReq(
                PartyId(body[:8]), Nonce(body[8:24]), int.from_bytes(body[24:32], "big")
            )
        if cls is PackageA:
            return PackageA(
                PartyId(body[:8]),
                Nonce(body[8:24]),
                SessionKey(body[24:56]),
                int.from_bytes(body[56:64], "big"),
            )
        if cls is TicketB:
            return TicketB(
                PartyId(body[:8]), SessionKey(body[8:40]), int.from_bytes(body[40:48], "big")
            )
        return Confirm(Nonce(body[:16]))
    except ValueError as exc:
        raise MalformedRecord(str(exc)) from exc


# ---------------------------------------------------------------------------
# sealing (authenticated symmetric toy scheme)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SealedRecord:
    """Randomized ciphertext of one record plus a 16-byte integrity tag."""

    nonce: bytes
    body: bytes
    tag: bytes

    def __post_init__(self) -> None:
        if len(self.nonce) != SEAL_NONCE_LEN or len(self.tag) != TAG_LEN:
            raise ValueError("sealed record has malformed nonce or tag")

    def to_bytes(self) -> bytes:
        return self.nonce + self.body + self.tag

    @classmethod
    def from_bytes(cls, data: bytes, body_len: int) -> "SealedRecord":
        expected = SEAL_NONCE_LEN + body_len + TAG_LEN
        if len(data) != expected:
            raise MalformedRecord(f"sealed record must be {expected} bytes, got {len(data)}")
        return cls(
            data[:SEAL_NONCE_LEN],
            data[SEAL_NONCE_LEN : SEAL_NONCE_LEN + body_len],
            data[SEAL_NONCE_LEN + body_len :],
        )


def sealed_len(record_type: type) -> int:
    return SEAL_NONCE_LEN + serialized_len(record_type) + TAG_LEN


def _keystream(key: bytes, nonce: bytes, length: int) -> bytes:
    stream = bytearray()
    counter = 0
    while len(stream) < length:
        stream.extend(
            hashlib.blake2b(
                nonce + counter.to_bytes(8, "big"), key=key, digest_size=32
            ).digest()
        )
        counter += 1
    return bytes(stream[:length])


def _tag(key: bytes, nonce: bytes, body: bytes) -> bytes:
    tag_key = hashlib.blake2b(b"integrity-tag", key=key, digest_size=32).digest()
    return hashlib.blake2b(nonce + body, key=tag_key, digest_size=TAG_LEN).digest()


def seal(key: SealingKey, rec: AuthRecord, rng: Random) -> SealedRecord:
    """Encrypt-and-tag one record under a fresh random nonce."""
    plain = serialize(rec)
    nonce = rng.randbytes(SEAL_NONCE_LEN)
    stream = _keystream(key.data, nonce, len(plain))
    body = bytes(p ^ s for p, s in zip(plain, stream))
    return SealedRecord(nonce, body, _tag(key.data, nonce, body))


def unseal(key: SealingKey, sealed: SealedRecord) -> AuthRecord:
    """Verify the tag, then decrypt and parse. Wrong keys fail the tag check."""
    if not hmac.compare_digest(sealed.tag, _tag(key.data, sealed.nonce, sealed.body)):
        raise IntegrityError("sealed record failed integrity check")
    stream = _keystream(key.data, sealed.nonce, len(sealed.body))
    return parse(bytes(c ^ s for c, s in zip(sealed.body, stream)))


# ---------------------------------------------------------------------------
# message wire formats (fixed widths, so offsets are canonical)
# ---------------------------------------------------------------------------

MSG1_LEN = serialized_len(Msg1)
MSG2_LEN = PARTY_ID_LEN + NONCE_LEN + sealed_len(TicketReq)
MSG3_LEN = sealed_len(PackageA) + sealed_len(TicketB) + NONCE_LEN
MSG4_LEN = sealed_len(TicketB) + sealed_len(Confirm)


def parse_msg1(bits: Bits) -> Msg1:
    rec = parse(bits_to_bytes(bits))
    if not isinstance(rec, Msg1):
        raise MalformedRecord("expected a first-message record")
    return rec


def split_msg2(data: bytes) -> tuple[PartyId, Nonce, bytes]:
    """Classical structure of msg2; needs no keys (usable for tracing)."""
    if len(data) != MSG2_LEN:
        raise MalformedRecord(f"msg2 must be {MSG2_LEN} bytes, got {len(data)}")
    try:
        id_b = PartyId(data[:PARTY_ID_LEN])
        n_b = Nonce(data[PARTY_ID_LEN : PARTY_ID_LEN + NONCE_LEN])
    except ValueError as exc:
        raise MalformedRecord(str(exc)) from exc
    return id_b, n_b, data[PARTY_ID_LEN + NONCE_LEN :]


def split_msg3(data: bytes) -> tuple[bytes, bytes, Nonce]:
    if len(data) != MSG3_LEN:
        raise MalformedRecord(f"msg3 must be {MSG3_LEN} bytes, got {len(data)}")
    a = sealed_len(PackageA)
    b = a + sealed_len(TicketB)
    try:
        n_b = Nonce(data[b:])
    except ValueError as exc:
        raise MalformedRecord(str(exc)) from exc
    return data[:a], data[a:b], n_b


def split_msg4(data: bytes) -> tuple[bytes, bytes]:
    if len(data) != MSG4_LEN:
        raise MalformedRecord(f"msg4 must be {MSG4_LEN} bytes, got {len(data)}")
    t = sealed_len(TicketB)
    return data[:t], data[t:]


# ---------------------------------------------------------------------------
# the four protocol operations
# ---------------------------------------------------------------------------


def build_msg1(id_a: PartyId, n_a: Nonce) -> list[int]:
    """Alice's opening claim: her ID and fresh nonce, in the clear."""
    return bytes_to_bits(serialize(Msg1(id_a, n_a)))


def build_msg2(
    id_b: PartyId,
    n_b: Nonce,
    k_b: MasterKey,
    id_a: PartyId,
    n_a: Nonce,
    clock_b: Clock,
    rng: Random,
) -> list[int]:
    """Bob's request to the KDC; T_b is read from Bob's own clock."""
    ticket_req = seal(k_b, TicketReq(id_a, n_a, clock_b.now()), rng)
    return bytes_to_bits(id_b.data + n_b.data + ticket_req.to_bytes())


def kdc_process_msg2(
    msg2_bits: Bits, key_table: Mapping[PartyId, MasterKey], rng: Random
) -> list[int]:
    """Validate the ticket request, mint a session key, package both sides.

    The KDC handles classical bits only; it never receives payload qubits
    here, so it cannot measure them by construction.
    """
    id_b, n_b, sealed_bytes = split_msg2(bits_to_bytes(msg2_bits))
    k_b = key_table.get(id_b)
    if k_b is None:
        raise ProtocolAbort(AbortReason.UNKNOWN_PARTY, f"no master key for {id_b.display()}")
    try:
        ticket_req = unseal(k_b, SealedRecord.from_bytes(sealed_bytes, serialized_len(TicketReq)))
    except (IntegrityError, MalformedRecord) as exc:
        raise ProtocolAbort(AbortReason.BAD_TICKET_REQ, str(exc)) from exc
    if not isinstance(ticket_req, TicketReq):
        raise ProtocolAbort(AbortReason.BAD_TICKET_REQ, "sealed record is not a ticket request")
    k_a = key_table.get(ticket_req.id_a)
    if k_a is None:
        raise ProtocolAbort(
            AbortReason.UNKNOWN_PARTY, f"no master key for {ticket_req.id_a.display()}"
        )
    k_s = SessionKey(rng.randbytes(SESSION_KEY_LEN))
    package_a = seal(k_a, PackageA(id_b, ticket_req.n_a, k_s, ticket_req.t_b), rng)
    ticket_b = seal(k_b, TicketB(ticket_req.id_a, k_s, ticket_req.t_b), rng)
    return bytes_to_bits(package_a.to_bytes() + ticket_b.to_bytes() + n_b.data)


class Msg3Result(NamedTuple):
    ticket_b: bytes  # forwarded unchanged
    confirm: bytes
    session_key: SessionKey
    n_b: Nonce


def alice_process_msg3(
    msg3_bits: Bits,
    k_a: MasterKey,
    expected_n_a: Nonce,
    expected_peer: PartyId,
    rng: Random,
) -> Msg3Result:
    """Open the KDC's package, verify freshness and peer, prepare msg4 parts.

    The returned nonce echo proves this is no replay: a package from any
    other session carries a different N_a.
    """
    package_bytes, ticket_bytes, n_b = split_msg3(bits_to_bytes(msg3_bits))
    try:
        package = unseal(k_a, SealedRecord.from_bytes(package_bytes, serialized_len(PackageA)))
    except (IntegrityError, MalformedRecord) as exc:
        raise ProtocolAbort(AbortReason.BAD_PACKAGE, str(exc)) from exc
    if not isinstance(package, PackageA):
        raise ProtocolAbort(AbortReason.BAD_PACKAGE, "sealed record is not a session package")
    if package.id_b != expected_peer:
        raise ProtocolAbort(
            AbortReason.PEER_MISMATCH,
            f"package names peer {package.id_b.display()}, expected {expected_peer.display()}",
        )
    if package.n_a != expected_n_a:
        raise ProtocolAbort(AbortReason.REPLAY_OR_FORGERY, "nonce echo does not match this session")
    confirm = seal(package.k_s, Confirm(n_b), rng)
    return Msg3Result(ticket_bytes, confirm.to_bytes(), package.k_s, n_b)


def bob_process_msg4(
    msg4_bits: Bits,
    k_b: MasterKey,
    clock_b: Clock,
    window_ms: int,
    expected_n_b: Nonce,
    consumed_nonces: set[bytes],
) -> SessionKey:
    """Open the ticket, enforce freshness on Bob's clock, check the nonce echo.

    Returns the session key on success and marks the nonce consumed so the
    same confirmation can never be accepted twice within a run.
    """
    ticket_bytes, confirm_bytes = split_msg4(bits_to_bytes(msg4_bits))
    try:
        ticket = unseal(k_b, SealedRecord.from_bytes(ticket_bytes, serialized_len(TicketB)))
    except (IntegrityError, MalformedRecord) as exc:
        raise ProtocolAbort(AbortReason.BAD_TICKET, str(exc)) from exc
    if not isinstance(ticket, TicketB):
        raise ProtocolAbort(AbortReason.BAD_TICKET, "sealed record is not a ticket")
    if abs(clock_b.now() - ticket.t_b) > window_ms:
        raise ProtocolAbort(
            AbortReason.STALE_TIMESTAMP,
            f"ticket timestamp {ticket.t_b} outside {window_ms} ms window at {clock_b.now()}",
        )
    try:
        confirm = unseal(
            ticket.k_s, SealedRecord.from_bytes(confirm_bytes, serialized_len(Confirm))
        )
    except (IntegrityError, MalformedRecord) as exc:
        raise ProtocolAbort(AbortReason.BAD_CONFIRM, str(exc)) from exc
    if not isinstance(confirm, Confirm):
        raise ProtocolAbort(AbortReason.BAD_CONFIRM, "sealed record is not a confirmation")
    if confirm.n_b != expected_n_b or confirm.n_b.data in consumed_nonces:
        raise ProtocolAbort(AbortReason.REPLAY, "confirmation nonce is not this session's")
    consumed_nonces.add(confirm.n_b.data)
    return ticket.k_s


def reveal_sealed(sealed_bytes: bytes, body_len: int, keys: Iterable[SealingKey]):
    """Try known keys against a sealed blob (trace tooling only).

    Returns the record if any key opens it, else None. Only the CLI's
    --unsafe-reveal-keys path uses this; the protocol never does.
    """
    try:
        sealed = SealedRecord.from_bytes(sealed_bytes, body_len)
    except MalformedRecord:
        return None
    for key in keys:
        try:
            return unseal(key, sealed)
        except (IntegrityError, MalformedRecord):
            continue
    return None
