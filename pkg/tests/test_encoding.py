"""Unit tests for bit/qubit conversion and frame layout."""
from random import Random

import pytest
from hypothesis import given, settings, strategies as st

from threestage.encoding import (
    HEADER_QUBITS,
    QubitFrame,
    RedundancyFactor,
    bits_to_bytes,
    bytes_to_bits,
    decode_q,
    deframe,
    encode_q,
    frame,
    frame_auth_redundancy,
)
from threestage.errors import FramingError
from threestage.quantum import ONE, ZERO, apply
from threestage.transforms import PAULI_X, as_unitary, rotation

X_GATE = as_unitary(PAULI_X)

bit_lists = st.lists(st.sampled_from([0, 1]), max_size=64)
odd_r = st.sampled_from([1, 3, 5, 7])


class TestBitHelpers:
    def test_round_trip(self):
        data = bytes(range(256))
        assert bits_to_bytes(bytes_to_bits(data)) == data

    def test_msb_first(self):
        assert bytes_to_bits(b"\x80") == [1, 0, 0, 0, 0, 0, 0, 0]

    def test_partial_byte_rejected(self):
        with pytest.raises(ValueError):
            bits_to_bytes([1, 0, 1])


class TestRedundancyFactor:
    def test_even_rejected(self):
        with pytest.raises(ValueError):
            RedundancyFactor(2)

    def test_zero_and_negative_rejected(self):
        for r in (0, -1, -3):
            with pytest.raises(ValueError):
                RedundancyFactor(r)

    def test_odd_accepted(self):
        assert RedundancyFactor(3).r == 3


class TestEncodeQ:
    def test_paper_style_bit_sequence(self):
        got = encode_q([0, 1, 1, 0, 1], RedundancyFactor(1))
        assert got == [ZERO, ONE, ONE, ZERO, ONE]

    def test_empty_input(self):
        assert encode_q([], RedundancyFactor(3)) == []

    def test_single_bit_with_redundancy_three(self):
        assert encode_q([1], RedundancyFactor(3)) == [ONE, ONE, ONE]

    def test_invalid_bit_rejected(self):
        with pytest.raises(ValueError):
            encode_q([2], RedundancyFactor(1))


class TestDecodeQ:
    @given(bits=bit_lists, r=odd_r)
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, bits, r):
        rf = RedundancyFactor(r)
        assert decode_q(encode_q(bits, rf), rf, Random(0)) == bits

    def test_majority_vote_oracle(self):
        # oracle: two of three copies say 1, so the bit is 1
        group = [ONE, ONE, ZERO]
        assert decode_q(group, RedundancyFactor(3), Random(0)) == [1]

    def test_indivisible_count_is_framing_error(self):
        with pytest.raises(FramingError):
            decode_q([ZERO] * 4, RedundancyFactor(3), Random(0))

    def test_majority_corrects_one_flip_per_group(self):
        rng = Random(40)
        bits = [rng.randrange(2) for _ in range(32)]
        qubits = encode_q(bits, RedundancyFactor(3))
        for g in range(len(bits)):
            idx = 3 * g + rng.randrange(3)
            qubits[idx] = apply(X_GATE, qubits[idx])
        assert decode_q(qubits, RedundancyFactor(3), rng) == bits


class TestFrameDeframe:
    def test_header_only_frame(self):
        f = frame([], [], RedundancyFactor(3))
        assert len(f.header_qubits) == HEADER_QUBITS
        assert f.auth_qubits == ()
        assert f.payload_qubits == ()
        auth_bits, payload = deframe(f, Random(0))
        assert auth_bits == []
        assert payload == ()

    @given(bits=bit_lists, r=odd_r, payload_bits=bit_lists)
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, bits, r, payload_bits):
        payload = encode_q(payload_bits, RedundancyFactor(1))
        f = frame(bits, payload, RedundancyFactor(r))
        auth_bits, got_payload = deframe(f, Random(0))
        assert auth_bits == bits
        assert list(got_payload) == payload

    def test_payload_objects_pass_through_untouched(self):
        payload = [apply(as_unitary(rotation(0.4)), ZERO) for _ in range(5)]
        f = frame([1, 0], payload, RedundancyFactor(3))
        _, got = deframe(f, Random(0))
        for q, original in zip(got, payload):
            assert q is original  # identical objects, amplitudes bitwise equal

    def test_tampered_header_lengths_fail(self):
        # flip all copies of the last payload-length header bit, so the
        # declared payload size disagrees with the actual segment
        f = frame([1, 0, 1], [ZERO] * 4, RedundancyFactor(3))
        header = list(f.header_qubits)
        target_bit = 63  # low bit of the 32-bit payload length field
        for k in range(3):
            idx = 3 * target_bit + k
            header[idx] = apply(X_GATE, header[idx])
        tampered = QubitFrame(tuple(header), f.auth_qubits, f.payload_qubits)
        with pytest.raises(FramingError):
            deframe(tampered, Random(0))

    def test_fully_flipped_auth_segment_complements_bits(self):
        bits = [1, 0, 1, 1, 0, 0, 1, 0]
        f = frame(bits, [], RedundancyFactor(3))
        flipped = QubitFrame(
            f.header_qubits,
            tuple(apply(X_GATE, q) for q in f.auth_qubits),
            f.payload_qubits,
        )
        got, _ = deframe(flipped, Random(0))
        assert got == [1 - b for b in bits]

    def test_deframe_deterministic_for_basis_auth(self):
        f = frame([0, 1, 1], [ZERO], RedundancyFactor(3))
        first = deframe(f, Random(1))
        second = deframe(f, Random(2))
        assert first[0] == second[0]

    def test_header_redundancy_field_readable(self):
        f = frame([1], [], RedundancyFactor(5))
        assert frame_auth_redundancy(f) == 5

    def test_oversized_redundancy_rejected(self):
        with pytest.raises(ValueError):
            frame([], [], RedundancyFactor(257))

    def test_wrong_header_size_rejected(self):
        f = frame([1, 1], [], RedundancyFactor(1))
        broken = QubitFrame(f.header_qubits[:-3], f.auth_qubits, f.payload_qubits)
        with pytest.raises(FramingError):
            deframe(broken, Random(0))
