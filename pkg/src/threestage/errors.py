"""Shared error types and the closed set of protocol abort reasons."""
from __future__ import annotations

from enum import Enum


class ProtocolError(Exception):
    """Base class for everything this package raises on purpose."""


class FramingError(ProtocolError):
    """A qubit frame is structurally inconsistent (bad header, bad lengths)."""


class MalformedRecord(ProtocolError):
    """Classical bytes do not parse as a known authentication record."""


class IntegrityError(ProtocolError):
    """A sealed record failed its integrity check (wrong key or tampering)."""


class AbortReason(str, Enum):
    """Closed enumeration of session abort codes.

    Aborting is a protocol *result*, not a programming error: the channel
    harness treats these as data and the CLI histograms them.
    """

    BAD_FRAME = "BadFrame"
    UNKNOWN_PARTY = "UnknownParty"
    BAD_TICKET_REQ = "BadTicketReq"
    BAD_PACKAGE = "BadPackage"
    PEER_MISMATCH = "PeerMismatch"
    REPLAY_OR_FORGERY = "ReplayOrForgery"
    BAD_TICKET = "BadTicket"
    BAD_CONFIRM = "BadConfirm"
    REPLAY = "Replay"
    STALE_TIMESTAMP = "StaleTimestamp"
    NON_COMMUTING_KEYS = "NonCommutingKeys"
    PHASE_VIOLATION = "PhaseViolation"


class ProtocolAbort(ProtocolError):
    """Raised by a party state machine when a message fails validation."""

    def __init__(self, reason: AbortReason, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)
