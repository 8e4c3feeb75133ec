"""Transmission medium with pluggable adversaries, plus attack harnesses.

The adversary boundary is strict: everything the attacker works with is a
qubit frame, a tap log, or material she fabricated herself. No adversary
entry point ever receives a master key, session key, or an honest party's
transform: the audit test walks ``ADVERSARY_SURFACE`` and checks exactly
that.

Attack model notes:

* Intercept-resend measures every payload qubit of the first transmission
  in the computational basis and forwards the collapsed states. For a
  payload qubit rotated by angle t, the receiver's end-to-end error
  probability is sin^2(2t)/2: 0.5 at t = pi/4 and 1/4 averaged over
  uniform t. The eavesdropper leaves the classical auth segment alone.
* The man-in-the-middle harness plays Eve between the honest parties.
  With the authentication layer on, she cannot seal or open anything
  under the master keys, so every tactic ends in an honest abort; with
  the bare three-stage exchange she recovers the message every time.
* Replay re-injects a recorded session's third and fourth messages into a
  fresh session; suppress-replay withholds the final message past the
  freshness window in simulated time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from random import Random
from typing import Optional, Sequence

from . import auth
from .auth import Nonce, PartyId, Timeline
from .encoding import (
    QubitFrame,
    RedundancyFactor,
    bits_to_bytes,
    bytes_to_bits,
    decode_q,
    deframe,
    frame,
)
from .errors import AbortReason, ProtocolAbort
from .parties import BareAlice, BareBob, SessionConfig, World
from .quantum import QubitState, apply, measure
from .transforms import PAULI_X, KeyPolicy, apply_separable, as_unitary, generate_key

_PAULI_X_U = as_unitary(PAULI_X)


class AdversaryKind(Enum):
    NONE = "none"
    INTERCEPT_RESEND = "eavesdrop"
    MITM = "mitm"
    REPLAY = "replay"
    SUPPRESS_REPLAY = "suppress"


@dataclass(frozen=True)
class ChannelConfig:
    adversary: AdversaryKind = AdversaryKind.NONE
    flip_noise_p: float = 0.0
    suppress_delay_ms: int = 10_000
    seed: int | str = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.flip_noise_p <= 1.0:
            raise ValueError(f"flip noise probability must be in [0,1], got {self.flip_noise_p}")
        if self.suppress_delay_ms < 0:
            raise ValueError("suppress delay must be non-negative")


@dataclass
class TapEntry:
    """One hop as seen from the wire. Frames are immutable, so holding
    references is equivalent to deep copies."""

    hop: int
    time_ms: int
    frame_sent: QubitFrame
    frame_delivered: QubitFrame
    delay_ms: int = 0
    eve_bits: Optional[tuple[int, ...]] = None


@dataclass
class TapLog:
    entries: list[TapEntry] = field(default_factory=list)


class Channel:
    """Per-session transmission medium: noise first, then the adversary."""

    SUPPRESS_TARGET_HOP = 4
    INTERCEPT_TARGET_HOP = 1

    def __init__(self, cfg: ChannelConfig, timeline: Optional[Timeline] = None):
        self.cfg = cfg
        self.timeline = timeline
        self.rng = Random(f"{cfg.seed}/channel")
        self.tap_log = TapLog()

    def transmit(self, f: QubitFrame, hop: int) -> QubitFrame:
        delivered = f
        if self.cfg.flip_noise_p > 0.0:
            delivered = flip_noise(delivered, self.cfg.flip_noise_p, self.rng)
        delay = 0
        eve_bits: Optional[tuple[int, ...]] = None
        kind = self.cfg.adversary
        if kind is AdversaryKind.INTERCEPT_RESEND and hop == self.INTERCEPT_TARGET_HOP:
            delivered = intercept_resend(delivered, self.rng)
            eve_bits = tuple(0 if q.beta == 0 else 1 for q in delivered.payload_qubits)
        elif kind is AdversaryKind.SUPPRESS_REPLAY and hop == self.SUPPRESS_TARGET_HOP:
            delay = self.cfg.suppress_delay_ms
            if self.timeline is not None:
                self.timeline.advance(delay)
        now = self.timeline.now_ms if self.timeline is not None else 0
        self.tap_log.entries.append(TapEntry(hop, now, f, delivered, delay, eve_bits))
        return delivered


def flip_noise(f: QubitFrame, p: float, rng: Random) -> QubitFrame:
    """Independent per-qubit bit flip with probability p, on every segment."""
    if p <= 0.0:
        return f

    def maybe_flip(qs: Sequence[QubitState]) -> tuple[QubitState, ...]:
        return tuple(apply(_PAULI_X_U, q) if rng.random() < p else q for q in qs)

    return QubitFrame(
        header_qubits=maybe_flip(f.header_qubits),
        auth_qubits=maybe_flip(f.auth_qubits),
        payload_qubits=maybe_flip(f.payload_qubits),
    )


def intercept_resend(f: QubitFrame, rng: Random) -> QubitFrame:
    """Measure every payload qubit and forward the collapsed states.

    The classical auth segment is forwarded untouched; reading basis
    states would gain the eavesdropper nothing she cannot already see.
    """
    collapsed = tuple(measure(q, rng).collapsed for q in f.payload_qubits)
    return QubitFrame(
        header_qubits=f.header_qubits,
        auth_qubits=f.auth_qubits,
        payload_qubits=collapsed,
    )


@dataclass(frozen=True)
class QberReport:
    """Positionwise mismatch statistics between two equal-length bit strings."""

    compared: int
    mismatches: int
    rate: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"rate must be in [0,1], got {self.rate}")


def estimate_qber(sent: Sequence[int], received: Sequence[int]) -> QberReport:
    if len(sent) != len(received):
        raise ValueError(f"length mismatch: {len(sent)} vs {len(received)}")
    mismatches = sum(1 for a, b in zip(sent, received) if a != b)
    return QberReport(len(sent), mismatches, mismatches / len(sent) if sent else 0.0)


def disturbance_trial(theta_a: float, theta_b: float, bit: int, rng: Random) -> bool:
    """One payload qubit through all four transform steps with an
    intercept-resend collapse after the first; True if the receiver errs.

    This is the per-qubit algebra of a full session (wrap, wrap, strip,
    strip) without the classical framing, so large trial counts stay cheap.
    """
    from .quantum import basis
    from .transforms import rotation

    q = apply(as_unitary(rotation(theta_a)), basis(bit))
    q = measure(q, rng).collapsed  # Eve, on the first hop
    q = apply(as_unitary(rotation(theta_b)), q)
    q = apply(as_unitary(rotation(-theta_a)), q)
    q = apply(as_unitary(rotation(-theta_b)), q)
    return measure(q, rng).bit != bit


# ---------------------------------------------------------------------------
# man-in-the-middle harness
# ---------------------------------------------------------------------------

AUTH_MITM_TACTICS = (
    "forge-ticketreq",
    "forge-package",
    "swap-nonce",
    "forge-ticket",
    "tamper-confirm",
)


class EveMitm:
    """Active man-in-the-middle. Works exclusively on frames plus material
    she fabricates; public identifiers and protocol parameters are fair game.
    """

    def __init__(
        self,
        rng: Random,
        alice_id: PartyId,
        bob_id: PartyId,
        payload_redundancy: int,
        auth_redundancy: int,
    ):
        self.rng = rng
        self.alice_id = alice_id
        self.bob_id = bob_id
        self.payload_redundancy = payload_redundancy
        self.auth_redundancy = auth_redundancy
        self.fabricated_key = auth.MasterKey(rng.randbytes(auth.MASTER_KEY_LEN))
        self.fabricated_session_key = auth.SessionKey(rng.randbytes(auth.SESSION_KEY_LEN))
        self.nonce = Nonce.fresh(rng)
        self.read_bits: Optional[tuple[int, ...]] = None

    # -- helpers ----------------------------------------------------------

    def _measure_payload(self, f: QubitFrame) -> QubitFrame:
        collapsed = intercept_resend(f, self.rng)
        qubits = collapsed.payload_qubits
        if len(qubits) % self.payload_redundancy == 0:
            self.read_bits = tuple(
                decode_q(qubits, RedundancyFactor(self.payload_redundancy), self.rng)
            )
        return collapsed

    def _reframe(self, auth_bits: Sequence[int], payload: Sequence[QubitState]) -> QubitFrame:
        return frame(auth_bits, payload, RedundancyFactor(self.auth_redundancy))

    def guess(self) -> Optional[tuple[int, ...]]:
        return self.read_bits

    # -- tactics (frame in, frame out) -------------------------------------

    def fake_msg2_from_msg1(self, f1: QubitFrame) -> QubitFrame:
        """Impersonate Bob toward the KDC with a ticket request she cannot seal."""
        auth_bits, _ = deframe(f1, self.rng)
        msg1 = auth.parse_msg1(auth_bits)
        measured = self._measure_payload(f1)
        forged = auth.seal(
            self.fabricated_key, auth.TicketReq(msg1.id_a, msg1.n_a, 0), self.rng
        )
        msg2_bits = bytes_to_bits(self.bob_id.data + self.nonce.data + forged.to_bytes())
        return self._reframe(msg2_bits, measured.payload_qubits)

    def fake_msg3_from_msg1(self, f1: QubitFrame) -> QubitFrame:
        """Impersonate the KDC toward Alice with packages sealed under junk keys."""
        deframe(f1, self.rng)
        measured = self._measure_payload(f1)
        package = auth.seal(
            self.fabricated_key,
            auth.PackageA(self.bob_id, self.nonce, self.fabricated_session_key, 0),
            self.rng,
        )
        ticket = auth.seal(
            self.fabricated_key,
            auth.TicketB(self.alice_id, self.fabricated_session_key, 0),
            self.rng,
        )
        msg3_bits = bytes_to_bits(package.to_bytes() + ticket.to_bytes() + self.nonce.data)
        return self._reframe(msg3_bits, measured.payload_qubits)

    def rewrite_msg1_nonce(self, f1: QubitFrame) -> QubitFrame:
        """Substitute the initiator's nonce in the clear first message."""
        auth_bits, payload = deframe(f1, self.rng)
        msg1 = auth.parse_msg1(auth_bits)
        new_bits = auth.build_msg1(msg1.id_a, self.nonce)
        return self._reframe(new_bits, payload)

    def forge_ticket_in_msg4(self, f4: QubitFrame) -> QubitFrame:
        """Swap the sealed ticket for one sealed under her own key."""
        auth_bits, _ = deframe(f4, self.rng)
        _, confirm_bytes = auth.split_msg4(bits_to_bytes(auth_bits))
        measured = self._measure_payload(f4)
        forged = auth.seal(
            self.fabricated_key,
            auth.TicketB(self.alice_id, self.fabricated_session_key, 0),
            self.rng,
        )
        return self._reframe(
            bytes_to_bits(forged.to_bytes() + confirm_bytes), measured.payload_qubits
        )

    def tamper_confirm_in_msg4(self, f4: QubitFrame) -> QubitFrame:
        """Keep the genuine ticket but substitute the confirmation."""
        auth_bits, _ = deframe(f4, self.rng)
        ticket_bytes, _ = auth.split_msg4(bits_to_bytes(auth_bits))
        measured = self._measure_payload(f4)
        forged = auth.seal(self.fabricated_session_key, auth.Confirm(self.nonce), self.rng)
        return self._reframe(
            bytes_to_bits(ticket_bytes + forged.to_bytes()), measured.payload_qubits
        )


class EveBare:
    """Man-in-the-middle against the bare three-stage exchange.

    She reflects her own transform at Alice to strip the initiator's wrap,
    reads the message, then replays the same dance toward Bob so nobody
    notices. No identity layer means nothing stops her.
    """

    def __init__(self, rng: Random, qubit_count: int, payload_redundancy: int, auth_redundancy: int):
        self.rng = rng
        self.payload_redundancy = payload_redundancy
        self.auth_redundancy = auth_redundancy
        self.transform = generate_key(qubit_count, KeyPolicy(), rng)
        self.recovered: Optional[tuple[int, ...]] = None

    def reflect_to_alice(self, f1: QubitFrame) -> QubitFrame:
        _, payload = deframe(f1, self.rng)
        wrapped = apply_separable(self.transform, payload)
        return frame([], wrapped, RedundancyFactor(self.auth_redundancy))

    def extract(self, f3: QubitFrame) -> tuple[int, ...]:
        _, payload = deframe(f3, self.rng)
        stripped = apply_separable(self.transform.dagger(), payload)
        self.recovered = tuple(
            decode_q(stripped, RedundancyFactor(self.payload_redundancy), self.rng)
        )
        return self.recovered


@dataclass(frozen=True)
class MitmOutcome:
    tactic: str
    eve_recovered: bool
    honest_abort: Optional[AbortReason]
    abort_step: Optional[int]
    bob_recovered: bool
    hop_log: tuple[tuple[str, str, str, QubitFrame], ...] = ()  # (label, sender, receiver, frame)


def mitm_attack(
    cfg: SessionConfig,
    auth_enabled: bool = True,
    tactic: Optional[str] = None,
    seed: int | str = 0,
) -> MitmOutcome:
    """Run one man-in-the-middle session and report what each side got.

    With authentication on, ``tactic`` picks Eve's interference point
    (default: seeded choice among :data:`AUTH_MITM_TACTICS`); with it off
    the bare relay attack needs no tactic choice.
    """
    if not auth_enabled:
        return _bare_mitm(cfg, seed)
    rng = Random(f"{seed}/eve")
    if tactic is None:
        tactic = rng.choice(AUTH_MITM_TACTICS)
    if tactic not in AUTH_MITM_TACTICS:
        raise ValueError(f"unknown tactic {tactic!r}")

    world = World(cfg.seed)
    alice, bob, kdc = world.new_session(cfg)
    eve = EveMitm(
        rng, alice.id, bob.id, cfg.payload_redundancy, cfg.auth_redundancy
    )
    hop_log: list[tuple[str, str, str, QubitFrame]] = []

    def note(label: str, sender: str, receiver: str, f: QubitFrame) -> None:
        hop_log.append((label, sender, receiver, f))

    abort_reason: Optional[AbortReason] = None
    abort_step: Optional[int] = None
    bob_done = False
    try:
        f1 = alice.start()
        note("msg1", "alice", "eve", f1)
        if tactic == "forge-ticketreq":
            f2e = eve.fake_msg2_from_msg1(f1)
            note("msg2", "eve", "kdc", f2e)
            abort_step = 2
            kdc.on_msg2(f2e, cfg.auth_redundancy)
        elif tactic == "forge-package":
            f3e = eve.fake_msg3_from_msg1(f1)
            note("msg3", "eve", "alice", f3e)
            abort_step = 3
            alice.on_msg3(f3e)
        elif tactic == "swap-nonce":
            f1e = eve.rewrite_msg1_nonce(f1)
            note("msg1", "eve", "bob", f1e)
            f2 = bob.on_msg1(f1e)
            note("msg2", "bob", "kdc", f2)
            f3 = kdc.on_msg2(f2, cfg.auth_redundancy)
            note("msg3", "kdc", "alice", f3)
            abort_step = 3
            alice.on_msg3(f3)
        else:  # forge-ticket / tamper-confirm: hops 1-3 run honestly
            f2 = bob.on_msg1(f1)
            note("msg2", "bob", "kdc", f2)
            f3 = kdc.on_msg2(f2, cfg.auth_redundancy)
            note("msg3", "kdc", "alice", f3)
            f4 = alice.on_msg3(f3)
            note("msg4", "alice", "eve", f4)
            if tactic == "forge-ticket":
                f4e = eve.forge_ticket_in_msg4(f4)
            else:
                f4e = eve.tamper_confirm_in_msg4(f4)
            note("msg4", "eve", "bob", f4e)
            abort_step = 4
            bob.on_msg4(f4e)
            bob_done = True
    except ProtocolAbort as abort:
        abort_reason = abort.reason
    else:
        abort_step = None

    guess = eve.guess()
    eve_recovered = guess is not None and guess == cfg.payload
    return MitmOutcome(
        tactic=tactic,
        eve_recovered=eve_recovered,
        honest_abort=abort_reason,
        abort_step=abort_step if abort_reason is not None else None,
        bob_recovered=bob_done,
        hop_log=tuple(hop_log),
    )


def _bare_mitm(cfg: SessionConfig, seed: int | str) -> MitmOutcome:
    rng = Random(f"{seed}/eve")
    alice = BareAlice(cfg, Random(f"{cfg.seed}/bare/alice"))
    bob = BareBob(cfg, Random(f"{cfg.seed}/bare/bob"))
    eve = EveBare(rng, cfg.qubit_count, cfg.payload_redundancy, cfg.auth_redundancy)
    hop_log: list[tuple[str, str, str, QubitFrame]] = []

    f1 = alice.start()
    hop_log.append(("bare1", "alice", "eve", f1))
    f2e = eve.reflect_to_alice(f1)
    hop_log.append(("bare2", "eve", "alice", f2e))
    f3 = alice.on_return(f2e)
    hop_log.append(("bare3", "alice", "eve", f3))
    stolen = eve.extract(f3)

    # Relay toward Bob so the theft goes unnoticed: Eve replays the
    # three-stage dance as the initiator, sending the bits she just read.
    relay_cfg = SessionConfig(
        payload=stolen,
        payload_redundancy=cfg.payload_redundancy,
        auth_redundancy=cfg.auth_redundancy,
        window_ms=cfg.window_ms,
        seed=f"{seed}/eve-relay",
    )
    relay_alice = BareAlice(relay_cfg, Random(f"{seed}/eve-relay/alice"))
    g1 = relay_alice.start()
    hop_log.append(("bare1", "eve", "bob", g1))
    g2 = bob.on_first(g1)
    hop_log.append(("bare2", "bob", "eve", g2))
    g3 = relay_alice.on_return(g2)
    hop_log.append(("bare3", "eve", "bob", g3))
    result = bob.on_final(g3)

    eve_recovered = stolen == cfg.payload
    bob_recovered = result.recovered_bits == cfg.payload
    return MitmOutcome(
        tactic="bare-relay",
        eve_recovered=eve_recovered,
        honest_abort=None,
        abort_step=None,
        bob_recovered=bob_recovered,
        hop_log=tuple(hop_log),
    )


# ---------------------------------------------------------------------------
# replay harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplayOutcome:
    msg3_abort: Optional[AbortReason]
    msg4_abort: Optional[AbortReason]
    same_session_abort: Optional[AbortReason]
    recorded_session_ok: bool
    hop_log: tuple[tuple[str, str, str, QubitFrame], ...] = ()


def replay_attack(cfg: SessionConfig, seed: int | str = 0) -> ReplayOutcome:
    """Record an honest session, then re-inject its msg3 and msg4.

    Master keys and Bob's consumed-nonce cache persist across the two
    sessions (same world), so the replayed frames decrypt fine and fail on
    freshness alone, which is the point.
    """
    world = World(cfg.seed)
    hop_log: list[tuple[str, str, str, QubitFrame]] = []

    alice1, bob1, kdc1 = world.new_session(cfg)
    f1 = alice1.start()
    hop_log.append(("msg1", "alice", "bob", f1))
    f2 = bob1.on_msg1(f1)
    hop_log.append(("msg2", "bob", "kdc", f2))
    f3 = kdc1.on_msg2(f2, cfg.auth_redundancy)
    hop_log.append(("msg3", "kdc", "alice", f3))
    f4 = alice1.on_msg3(f3)
    hop_log.append(("msg4", "alice", "bob", f4))
    result1 = bob1.on_msg4(f4)
    recorded_ok = result1.recovered_bits == cfg.payload

    # Replay into the finished session: the machine is done and refuses.
    same_session_abort: Optional[AbortReason] = None
    try:
        bob1.on_msg4(f4)
    except ProtocolAbort as abort:
        same_session_abort = abort.reason

    # Fresh session in the same world, driven to the points of injection.
    alice2, bob2, kdc2 = world.new_session(cfg)
    g1 = alice2.start()
    hop_log.append(("msg1", "alice", "bob", g1))
    g2 = bob2.on_msg1(g1)
    hop_log.append(("msg2", "bob", "kdc", g2))
    kdc2.on_msg2(g2, cfg.auth_redundancy)  # fresh msg3 suppressed by the attacker

    msg3_abort: Optional[AbortReason] = None
    try:
        hop_log.append(("msg3-replay", "eve", "alice", f3))
        alice2.on_msg3(f3)
    except ProtocolAbort as abort:
        msg3_abort = abort.reason

    msg4_abort: Optional[AbortReason] = None
    try:
        hop_log.append(("msg4-replay", "eve", "bob", f4))
        bob2.on_msg4(f4)
    except ProtocolAbort as abort:
        msg4_abort = abort.reason

    return ReplayOutcome(
        msg3_abort=msg3_abort,
        msg4_abort=msg4_abort,
        same_session_abort=same_session_abort,
        recorded_session_ok=recorded_ok,
        hop_log=tuple(hop_log),
    )


# Adversary entry points, for the isolation audit: every parameter these
# accept must be a frame, a log, public protocol data, or randomness.
ADVERSARY_SURFACE = (
    intercept_resend,
    flip_noise,
    EveMitm,
    EveBare,
)
