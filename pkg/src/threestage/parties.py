"""Alice, Bob, and KDC state machines, plus session orchestration.

Each machine owns its secret transform, master key, and clock, advances
through a fixed phase order, and talks to the others only via qubit
frames. A message arriving out of phase aborts rather than corrupting
state. The orchestrator (:func:`run_session`) drives the four hops

    1: Alice -> Bob    payload U_A(X)
    2: Bob -> KDC      payload U_B·U_A(X)
    3: KDC -> Alice    payload U_B·U_A(X), forwarded unmeasured
    4: Alice -> Bob    payload U_B(X)

through an optional channel and returns Bob's result. Commuting keys make
the algebra close: Alice can strip U_A at step 3 because U_A†·U_B·U_A =
U_B, and Bob recovers X at step 4.

``run_bare_session`` runs the three-stage exchange with the
authentication layer stripped off; it exists so the man-in-the-middle
contrast experiment has an insecure baseline to attack.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum, auto
from random import Random
from typing import Optional, Protocol, Sequence

from . import auth
from .auth import Clock, MasterKey, Nonce, PartyId, SessionKey, Timeline
from .encoding import (
    QubitFrame,
    RedundancyFactor,
    bytes_to_bits,
    decode_q,
    deframe,
    encode_q,
    frame,
)
from .errors import AbortReason, FramingError, MalformedRecord, ProtocolAbort
from .transforms import (
    KeyMode,
    KeyPolicy,
    SeparableTransform,
    apply_separable,
    generate_key,
    validate_commuting,
)

ALICE = PartyId.from_name("alice")
BOB = PartyId.from_name("bob")

DEFAULT_WINDOW_MS = 5000

# (sender, receiver) labels for the authenticated four-hop flow
HOP_ROUTES = {1: ("alice", "bob"), 2: ("bob", "kdc"), 3: ("kdc", "alice"), 4: ("alice", "bob")}
BARE_HOP_ROUTES = {1: ("alice", "bob"), 2: ("bob", "alice"), 3: ("alice", "bob")}


@dataclass(frozen=True)
class SessionConfig:
    """Parameters of one protocol run.

    ``payload`` is the classical message X; the qubit count is always
    ``payload_redundancy * len(payload)`` so the encoding stays consistent
    by construction. Clock skews exist to demonstrate that only Bob's
    clock matters.
    """

    payload: tuple[int, ...]
    payload_redundancy: int = 1
    auth_redundancy: int = 3
    key_policy: KeyPolicy = KeyPolicy()
    window_ms: int = DEFAULT_WINDOW_MS
    seed: int | str = 0
    alice_clock_skew_ms: int = 0
    kdc_clock_skew_ms: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "payload", tuple(self.payload))
        if not self.payload:
            raise ValueError("payload must contain at least one bit")
        if any(b not in (0, 1) for b in self.payload):
            raise ValueError("payload bits must be 0 or 1")
        RedundancyFactor(self.payload_redundancy)
        RedundancyFactor(self.auth_redundancy)
        if self.window_ms <= 0:
            raise ValueError("freshness window must be positive")

    @property
    def qubit_count(self) -> int:
        return self.payload_redundancy * len(self.payload)


@dataclass(frozen=True)
class HopRecord:
    hop: int
    sender: str
    receiver: str
    sent: QubitFrame
    delivered: QubitFrame


@dataclass(frozen=True)
class SessionResult:
    """Outcome of one run: recovered bits or an abort with step and reason."""

    recovered_bits: Optional[tuple[int, ...]]
    abort_reason: Optional[AbortReason] = None
    abort_step: Optional[int] = None
    bit_errors: Optional[int] = None
    qber: Optional[float] = None
    session_key_agreed: bool = False
    hops: tuple[HopRecord, ...] = ()

    @property
    def ok(self) -> bool:
        return self.recovered_bits is not None


class TransmitChannel(Protocol):
    """What the orchestrator needs from a transmission medium."""

    def transmit(self, f: QubitFrame, hop: int) -> QubitFrame: ...


class _AlicePhase(Enum):
    START = auto()
    AWAIT_MSG3 = auto()
    DONE = auto()


class _BobPhase(Enum):
    AWAIT_MSG1 = auto()
    AWAIT_MSG4 = auto()
    DONE = auto()


class _KdcPhase(Enum):
    AWAIT_MSG2 = auto()
    DONE = auto()


def _phase_gate(actual, expected) -> None:
    if actual is not expected:
        raise ProtocolAbort(
            AbortReason.PHASE_VIOLATION, f"machine in phase {actual.name}, message needs {expected.name}"
        )


def _deframe_or_abort(f: QubitFrame, rng: Random):
    try:
        return deframe(f, rng)
    except (FramingError, MalformedRecord) as exc:
        raise ProtocolAbort(AbortReason.BAD_FRAME, str(exc)) from exc


class AliceMachine:
    """Initiator: applies U_A, later strips it after validating the KDC package."""

    def __init__(
        self,
        cfg: SessionConfig,
        master_key: MasterKey,
        clock: Clock,
        rng: Random,
        party_id: PartyId = ALICE,
        peer_id: PartyId = BOB,
    ):
        self.cfg = cfg
        self.id = party_id
        self.peer_id = peer_id
        self.master_key = master_key
        self.clock = clock
        self.rng = rng
        self.transform = generate_key(cfg.qubit_count, cfg.key_policy, rng)
        self.n_a: Optional[Nonce] = None
        self.session_key: Optional[SessionKey] = None
        self.phase = _AlicePhase.START

    def start(self) -> QubitFrame:
        _phase_gate(self.phase, _AlicePhase.START)
        self.n_a = Nonce.fresh(self.rng)
        payload = apply_separable(
            self.transform, encode_q(self.cfg.payload, RedundancyFactor(self.cfg.payload_redundancy))
        )
        auth_bits = auth.build_msg1(self.id, self.n_a)
        self.phase = _AlicePhase.AWAIT_MSG3
        return frame(auth_bits, payload, RedundancyFactor(self.cfg.auth_redundancy))

    def on_msg3(self, f: QubitFrame) -> QubitFrame:
        _phase_gate(self.phase, _AlicePhase.AWAIT_MSG3)
        auth_bits, payload = _deframe_or_abort(f, self.rng)
        result = auth.alice_process_msg3(
            auth_bits, self.master_key, self.n_a, self.peer_id, self.rng
        )
        self.session_key = result.session_key
        stripped = apply_separable(self.transform.dagger(), payload)
        msg4_bits = bytes_to_bits(result.ticket_b + result.confirm)
        self.phase = _AlicePhase.DONE
        return frame(msg4_bits, stripped, RedundancyFactor(self.cfg.auth_redundancy))


class BobMachine:
    """Responder: applies U_B, requests the session key, validates msg4, decodes X."""

    def __init__(
        self,
        cfg: SessionConfig,
        master_key: MasterKey,
        clock: Clock,
        rng: Random,
        consumed_nonces: set[bytes],
        party_id: PartyId = BOB,
    ):
        self.cfg = cfg
        self.id = party_id
        self.master_key = master_key
        self.clock = clock
        self.rng = rng
        self.consumed_nonces = consumed_nonces
        self.transform = generate_key(cfg.qubit_count, cfg.key_policy, rng)
        self.peer_id: Optional[PartyId] = None
        self.n_b: Optional[Nonce] = None
        self.t_b: Optional[int] = None
        self.session_key: Optional[SessionKey] = None
        self.phase = _BobPhase.AWAIT_MSG1

    def on_msg1(self, f: QubitFrame) -> QubitFrame:
        _phase_gate(self.phase, _BobPhase.AWAIT_MSG1)
        auth_bits, payload = _deframe_or_abort(f, self.rng)
        try:
            msg1 = auth.parse_msg1(auth_bits)
        except (MalformedRecord, ValueError) as exc:
            raise ProtocolAbort(AbortReason.BAD_FRAME, str(exc)) from exc
        self.peer_id = msg1.id_a
        self.n_b = Nonce.fresh(self.rng)
        self.t_b = self.clock.now()
        wrapped = apply_separable(self.transform, payload)
        msg2_bits = auth.build_msg2(
            self.id, self.n_b, self.master_key, msg1.id_a, msg1.n_a, self.clock, self.rng
        )
        self.phase = _BobPhase.AWAIT_MSG4
        return frame(msg2_bits, wrapped, RedundancyFactor(self.cfg.auth_redundancy))

    def on_msg4(self, f: QubitFrame) -> SessionResult:
        _phase_gate(self.phase, _BobPhase.AWAIT_MSG4)
        auth_bits, payload = _deframe_or_abort(f, self.rng)
        self.session_key = auth.bob_process_msg4(
            auth_bits,
            self.master_key,
            self.clock,
            self.cfg.window_ms,
            self.n_b,
            self.consumed_nonces,
        )
        stripped = apply_separable(self.transform.dagger(), payload)
        try:
            bits = decode_q(stripped, RedundancyFactor(self.cfg.payload_redundancy), self.rng)
        except FramingError as exc:
            raise ProtocolAbort(AbortReason.BAD_FRAME, str(exc)) from exc
        self.phase = _BobPhase.DONE
        return SessionResult(recovered_bits=tuple(bits), session_key_agreed=True)


class KdcMachine:
    """Trusted third party: mints session keys, forwards payload qubits untouched.

    The machine has no operation that measures payload qubits; the outgoing
    frame reuses the incoming payload objects verbatim.
    """

    def __init__(self, key_table: dict[PartyId, MasterKey], clock: Clock, rng: Random):
        self.key_table = key_table
        self.clock = clock
        self.rng = rng
        self.phase = _KdcPhase.AWAIT_MSG2

    def on_msg2(self, f: QubitFrame, auth_redundancy: int) -> QubitFrame:
        _phase_gate(self.phase, _KdcPhase.AWAIT_MSG2)
        auth_bits, payload = _deframe_or_abort(f, self.rng)
        try:
            msg3_bits = auth.kdc_process_msg2(auth_bits, self.key_table, self.rng)
        except MalformedRecord as exc:
            raise ProtocolAbort(AbortReason.BAD_FRAME, str(exc)) from exc
        self.phase = _KdcPhase.DONE
        return frame(msg3_bits, payload, RedundancyFactor(auth_redundancy))


class World:
    """Long-lived state shared across sessions of one simulation run.

    Master keys, the KDC key table, Bob's consumed-nonce cache, and the
    timeline all outlive individual sessions; this is what makes replayed
    messages from an earlier session decryptable (and detectable) later.
    """

    def __init__(
        self,
        seed: int | str,
        alice_clock_skew_ms: int = 0,
        kdc_clock_skew_ms: int = 0,
    ):
        self.seed = seed
        self.timeline = Timeline()
        key_rng = Random(f"{seed}/master-keys")
        self.master_key_alice = MasterKey(key_rng.randbytes(auth.MASTER_KEY_LEN))
        self.master_key_bob = MasterKey(key_rng.randbytes(auth.MASTER_KEY_LEN))
        self.key_table = {ALICE: self.master_key_alice, BOB: self.master_key_bob}
        self.consumed_nonces: set[bytes] = set()
        self.alice_clock = Clock(self.timeline, alice_clock_skew_ms)
        self.bob_clock = Clock(self.timeline)
        self.kdc_clock = Clock(self.timeline, kdc_clock_skew_ms)
        self.sessions_started = 0

    def new_session(self, cfg: SessionConfig) -> tuple[AliceMachine, BobMachine, KdcMachine]:
        i = self.sessions_started
        self.sessions_started += 1
        alice = AliceMachine(
            cfg, self.master_key_alice, self.alice_clock, Random(f"{self.seed}/s{i}/alice")
        )
        bob = BobMachine(
            cfg,
            self.master_key_bob,
            self.bob_clock,
            Random(f"{self.seed}/s{i}/bob"),
            self.consumed_nonces,
        )
        kdc = KdcMachine(self.key_table, self.kdc_clock, Random(f"{self.seed}/s{i}/kdc"))
        return alice, bob, kdc


def _deliver(channel: Optional[TransmitChannel], f: QubitFrame, hop: int) -> QubitFrame:
    return channel.transmit(f, hop) if channel is not None else f


def run_session(
    cfg: SessionConfig,
    channel: Optional[TransmitChannel] = None,
    world: Optional[World] = None,
) -> SessionResult:
    """Drive the four hops through the channel; return Bob's result.

    Aborts surface as a result with step index and reason code, never as an
    exception. Deterministic for a fixed (config, seed, channel config).
    """
    if world is None:
        world = World(cfg.seed, cfg.alice_clock_skew_ms, cfg.kdc_clock_skew_ms)
    if channel is not None and getattr(channel, "timeline", None) is None:
        channel.timeline = world.timeline
    alice, bob, kdc = world.new_session(cfg)

    if cfg.key_policy.mode is KeyMode.MIXED_VALIDATED:
        if not validate_commuting(alice.transform, bob.transform):
            return SessionResult(
                recovered_bits=None,
                abort_reason=AbortReason.NON_COMMUTING_KEYS,
                abort_step=0,
            )

    hops: list[HopRecord] = []

    def hop(n: int, sent: QubitFrame) -> QubitFrame:
        delivered = _deliver(channel, sent, n)
        sender, receiver = HOP_ROUTES[n]
        hops.append(HopRecord(n, sender, receiver, sent, delivered))
        return delivered

    step = 0
    try:
        f1 = alice.start()
        step = 1
        f2 = bob.on_msg1(hop(1, f1))
        step = 2
        f3 = kdc.on_msg2(hop(2, f2), cfg.auth_redundancy)
        step = 3
        f4 = alice.on_msg3(hop(3, f3))
        step = 4
        result = bob.on_msg4(hop(4, f4))
    except ProtocolAbort as abort:
        return SessionResult(
            recovered_bits=None,
            abort_reason=abort.reason,
            abort_step=step,
            hops=tuple(hops),
        )

    errors = _count_mismatches(cfg.payload, result.recovered_bits)
    return replace(
        result,
        bit_errors=errors,
        qber=errors / len(cfg.payload),
        hops=tuple(hops),
    )


def _count_mismatches(sent: Sequence[int], received: Sequence[int]) -> int:
    return sum(1 for a, b in zip(sent, received) if a != b) + abs(len(sent) - len(received))


# ---------------------------------------------------------------------------
# bare mode: the unauthenticated three-stage exchange
# ---------------------------------------------------------------------------


class BareAlice:
    """Three-stage initiator with no identity layer (insecure baseline)."""

    def __init__(self, cfg: SessionConfig, rng: Random):
        self.cfg = cfg
        self.rng = rng
        self.transform = generate_key(cfg.qubit_count, cfg.key_policy, rng)
        self.phase = _AlicePhase.START

    def start(self) -> QubitFrame:
        _phase_gate(self.phase, _AlicePhase.START)
        payload = apply_separable(
            self.transform, encode_q(self.cfg.payload, RedundancyFactor(self.cfg.payload_redundancy))
        )
        self.phase = _AlicePhase.AWAIT_MSG3
        return frame([], payload, RedundancyFactor(self.cfg.auth_redundancy))

    def on_return(self, f: QubitFrame) -> QubitFrame:
        _phase_gate(self.phase, _AlicePhase.AWAIT_MSG3)
        _, payload = _deframe_or_abort(f, self.rng)
        stripped = apply_separable(self.transform.dagger(), payload)
        self.phase = _AlicePhase.DONE
        return frame([], stripped, RedundancyFactor(self.cfg.auth_redundancy))


class BareBob:
    """Three-stage responder with no identity layer."""

    def __init__(self, cfg: SessionConfig, rng: Random):
        self.cfg = cfg
        self.rng = rng
        self.transform = generate_key(cfg.qubit_count, cfg.key_policy, rng)
        self.phase = _BobPhase.AWAIT_MSG1

    def on_first(self, f: QubitFrame) -> QubitFrame:
        _phase_gate(self.phase, _BobPhase.AWAIT_MSG1)
        _, payload = _deframe_or_abort(f, self.rng)
        wrapped = apply_separable(self.transform, payload)
        self.phase = _BobPhase.AWAIT_MSG4
        return frame([], wrapped, RedundancyFactor(self.cfg.auth_redundancy))

    def on_final(self, f: QubitFrame) -> SessionResult:
        _phase_gate(self.phase, _BobPhase.AWAIT_MSG4)
        _, payload = _deframe_or_abort(f, self.rng)
        stripped = apply_separable(self.transform.dagger(), payload)
        bits = decode_q(stripped, RedundancyFactor(self.cfg.payload_redundancy), self.rng)
        self.phase = _BobPhase.DONE
        return SessionResult(recovered_bits=tuple(bits))


def run_bare_session(
    cfg: SessionConfig, channel: Optional[TransmitChannel] = None
) -> SessionResult:
    """Three hops, no authentication. Insecure; kept for the contrast experiment."""
    if channel is not None and getattr(channel, "timeline", None) is None:
        channel.timeline = Timeline()
    alice = BareAlice(cfg, Random(f"{cfg.seed}/bare/alice"))
    bob = BareBob(cfg, Random(f"{cfg.seed}/bare/bob"))
    hops: list[HopRecord] = []

    def hop(n: int, sent: QubitFrame) -> QubitFrame:
        delivered = _deliver(channel, sent, n)
        sender, receiver = BARE_HOP_ROUTES[n]
        hops.append(HopRecord(n, sender, receiver, sent, delivered))
        return delivered

    step = 0
    try:
        f1 = alice.start()
        step = 1
        f2 = bob.on_first(hop(1, f1))
        step = 2
        f3 = alice.on_return(hop(2, f2))
        step = 3
        result = bob.on_final(hop(3, f3))
    except ProtocolAbort as abort:
        return SessionResult(
            recovered_bits=None, abort_reason=abort.reason, abort_step=step, hops=tuple(hops)
        )
    errors = _count_mismatches(cfg.payload, result.recovered_bits)
    return replace(
        result, bit_errors=errors, qber=errors / len(cfg.payload), hops=tuple(hops)
    )
