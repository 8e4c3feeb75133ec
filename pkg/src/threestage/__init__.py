"""Deterministic simulator for the classical-authentication-aided
three-stage quantum protocol: per-qubit statevector math, commuting
separable transforms, a four-message key-distribution-center flow, and an
adversarial channel harness."""

from .auth import (
    Clock,
    Confirm,
    MasterKey,
    Msg1,
    Nonce,
    PackageA,
    PartyId,
    SealedRecord,
    SessionKey,
    TicketB,
    TicketReq,
    Timeline,
    parse,
    seal,
    serialize,
    unseal,
)
from .channel import (
    AdversaryKind,
    Channel,
    ChannelConfig,
    MitmOutcome,
    QberReport,
    ReplayOutcome,
    TapLog,
    estimate_qber,
    intercept_resend,
    mitm_attack,
    replay_attack,
)
from .encoding import (
    QubitFrame,
    RedundancyFactor,
    bits_to_bytes,
    bytes_to_bits,
    decode_q,
    deframe,
    encode_q,
    frame,
)
from .errors import (
    AbortReason,
    FramingError,
    IntegrityError,
    MalformedRecord,
    ProtocolAbort,
    ProtocolError,
)
from .parties import (
    SessionConfig,
    SessionResult,
    World,
    run_bare_session,
    run_session,
)
from .quantum import (
    ONE,
    ZERO,
    MeasurementOutcome,
    QubitState,
    Unitary2,
    apply,
    basis,
    dagger,
    inner_product,
    measure,
    random_state,
    random_unitary,
)
from .transforms import (
    IDENTITY,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    KeyMode,
    KeyPolicy,
    SeparableTransform,
    SlotFactor,
    apply_separable,
    as_unitary,
    commutes,
    compose,
    dense,
    generate_key,
    rotation,
    validate_commuting,
)

__version__ = "0.1.0"

__all__ = [
    "AbortReason",
    "AdversaryKind",
    "Channel",
    "ChannelConfig",
    "Clock",
    "Confirm",
    "FramingError",
    "IDENTITY",
    "IntegrityError",
    "KeyMode",
    "KeyPolicy",
    "MalformedRecord",
    "MasterKey",
    "MeasurementOutcome",
    "MitmOutcome",
    "Msg1",
    "Nonce",
    "ONE",
    "PackageA",
    "PartyId",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "ProtocolAbort",
    "ProtocolError",
    "QberReport",
    "QubitFrame",
    "QubitState",
    "RedundancyFactor",
    "ReplayOutcome",
    "SealedRecord",
    "SeparableTransform",
    "SessionConfig",
    "SessionKey",
    "SessionResult",
    "SlotFactor",
    "TapLog",
    "TicketB",
    "TicketReq",
    "Timeline",
    "Unitary2",
    "World",
    "ZERO",
    "apply",
    "apply_separable",
    "as_unitary",
    "basis",
    "bits_to_bytes",
    "bytes_to_bits",
    "commutes",
    "compose",
    "dagger",
    "decode_q",
    "deframe",
    "dense",
    "encode_q",
    "estimate_qber",
    "frame",
    "generate_key",
    "inner_product",
    "intercept_resend",
    "measure",
    "mitm_attack",
    "parse",
    "random_state",
    "random_unitary",
    "replay_attack",
    "rotation",
    "run_bare_session",
    "run_session",
    "seal",
    "serialize",
    "unseal",
    "validate_commuting",
]
