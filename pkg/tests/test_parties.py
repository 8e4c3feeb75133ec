"""Unit tests for the party state machines and session orchestration."""
from random import Random

import numpy as np
import pytest

from conftest import kron_all, product_amplitudes
from threestage import auth
from threestage.encoding import RedundancyFactor, deframe, encode_q
from threestage.errors import AbortReason, ProtocolAbort
from threestage.parties import (
    SessionConfig,
    World,
    run_bare_session,
    run_session,
)
from threestage.transforms import KeyMode, KeyPolicy, as_unitary


def small_cfg(payload=(1, 0, 1), seed="parties", **kwargs) -> SessionConfig:
    return SessionConfig(payload=payload, seed=seed, **kwargs)


def dense_of(transform) -> np.ndarray:
    return kron_all([as_unitary(f).as_array() for f in transform.factors])


class TestSessionConfig:
    def test_qubit_count_tracks_redundancy(self):
        cfg = small_cfg(payload=(1, 0, 1, 1), payload_redundancy=3)
        assert cfg.qubit_count == 12

    def test_rejects_empty_payload(self):
        with pytest.raises(ValueError):
            SessionConfig(payload=())

    def test_rejects_bad_bits(self):
        with pytest.raises(ValueError):
            SessionConfig(payload=(0, 2))

    def test_rejects_even_redundancy(self):
        with pytest.raises(ValueError):
            SessionConfig(payload=(1,), payload_redundancy=2)


class TestAliceStart:
    def test_payload_is_non_basis_under_generic_rotation(self):
        world = World("alice-start")
        alice, _, _ = world.new_session(small_cfg())
        f1 = alice.start()
        generic = [
            q for q in f1.payload_qubits if abs(q.alpha) > 1e-9 and abs(q.beta) > 1e-9
        ]
        assert generic  # uniform angles are almost surely not multiples of pi/2

    def test_auth_segment_decodes_to_first_message(self):
        world = World("alice-auth")
        cfg = small_cfg()
        alice, _, _ = world.new_session(cfg)
        f1 = alice.start()
        bits, payload = deframe(f1, Random(0))
        rec = auth.parse_msg1(bits)
        assert rec.id_a == alice.id
        assert rec.n_a == alice.n_a
        assert len(payload) == cfg.qubit_count

    def test_double_start_is_phase_violation(self):
        world = World("alice-twice")
        alice, _, _ = world.new_session(small_cfg())
        alice.start()
        with pytest.raises(ProtocolAbort) as err:
            alice.start()
        assert err.value.reason is AbortReason.PHASE_VIOLATION


class TestHopAlgebra:
    """Check each hop's payload against the dense tensor oracle (n <= 4)."""

    def _encoded(self, cfg):
        return product_amplitudes(
            encode_q(cfg.payload, RedundancyFactor(cfg.payload_redundancy))
        )

    def test_msg2_payload_carries_both_wraps(self):
        cfg = small_cfg(payload=(1, 0, 1), seed="hop2")
        world = World(cfg.seed)
        alice, bob, _ = world.new_session(cfg)
        f2 = bob.on_msg1(alice.start())
        expected = dense_of(bob.transform) @ dense_of(alice.transform) @ self._encoded(cfg)
        got = product_amplitudes(f2.payload_qubits)
        assert np.max(np.abs(got - expected)) < 1e-9

    def test_kdc_forwards_payload_objects_bitwise_unchanged(self):
        cfg = small_cfg(seed="hop3")
        world = World(cfg.seed)
        alice, bob, kdc = world.new_session(cfg)
        f2 = bob.on_msg1(alice.start())
        f3 = kdc.on_msg2(f2, cfg.auth_redundancy)
        assert f3.payload_qubits is f2.payload_qubits

    def test_msg4_payload_is_responder_wrap_only(self):
        cfg = small_cfg(payload=(0, 1, 1), seed="hop4")
        world = World(cfg.seed)
        alice, bob, kdc = world.new_session(cfg)
        f2 = bob.on_msg1(alice.start())
        f3 = kdc.on_msg2(f2, cfg.auth_redundancy)
        f4 = alice.on_msg3(f3)
        expected = dense_of(bob.transform) @ self._encoded(cfg)
        got = product_amplitudes(f4.payload_qubits)
        assert np.max(np.abs(got - expected)) < 1e-9

    def test_bob_records_timestamp_from_own_clock(self):
        cfg = small_cfg(seed="tb")
        world = World(cfg.seed)
        world.timeline.advance(777)
        alice, bob, _ = world.new_session(cfg)
        bob.on_msg1(alice.start())
        assert bob.t_b == world.bob_clock.now()

    def test_out_of_phase_messages_abort(self):
        cfg = small_cfg(seed="phase")
        world = World(cfg.seed)
        alice, bob, kdc = world.new_session(cfg)
        f1 = alice.start()
        with pytest.raises(ProtocolAbort) as err:
            bob.on_msg4(f1)
        assert err.value.reason is AbortReason.PHASE_VIOLATION
        f2 = bob.on_msg1(f1)
        with pytest.raises(ProtocolAbort) as err:
            bob.on_msg1(f2)
        assert err.value.reason is AbortReason.PHASE_VIOLATION
        kdc.on_msg2(f2, cfg.auth_redundancy)
        with pytest.raises(ProtocolAbort) as err:
            kdc.on_msg2(f2, cfg.auth_redundancy)
        assert err.value.reason is AbortReason.PHASE_VIOLATION

    def test_kdc_rejects_unknown_sender(self):
        cfg = small_cfg(seed="unknown")
        world = World(cfg.seed)
        alice, bob, kdc = world.new_session(cfg)
        bob.id = auth.PartyId.from_name("mallory")
        f2 = bob.on_msg1(alice.start())
        with pytest.raises(ProtocolAbort) as err:
            kdc.on_msg2(f2, cfg.auth_redundancy)
        assert err.value.reason is AbortReason.UNKNOWN_PARTY


class TestRunSession:
    def test_honest_run_recovers_exactly(self):
        rng = Random("xgen")
        for i in range(20):
            payload = tuple(rng.randrange(2) for _ in range(rng.randrange(1, 65)))
            cfg = SessionConfig(payload=payload, seed=f"honest/{i}")
            result = run_session(cfg)
            assert result.ok
            assert result.recovered_bits == payload
            assert result.bit_errors == 0
            assert result.qber == 0.0
            assert result.session_key_agreed

    def test_redundant_payload_also_exact(self):
        cfg = SessionConfig(payload=(1, 0, 0, 1, 1), payload_redundancy=3, seed="r3")
        result = run_session(cfg)
        assert result.recovered_bits == (1, 0, 0, 1, 1)

    def test_hops_are_recorded_in_order(self):
        result = run_session(small_cfg(seed="hops"))
        assert [h.hop for h in result.hops] == [1, 2, 3, 4]
        assert result.hops[1].receiver == "kdc"
        assert result.hops[2].sender == "kdc"

    def test_mixed_policy_gate_aborts_non_commuting_keys(self):
        aborted = 0
        completed = 0
        for i in range(40):
            cfg = SessionConfig(
                payload=(1, 0, 1, 1),
                key_policy=KeyPolicy(KeyMode.MIXED_VALIDATED),
                seed=f"mixed/{i}",
            )
            result = run_session(cfg)
            if result.ok:
                completed += 1
                assert result.recovered_bits == cfg.payload
            else:
                assert result.abort_reason is AbortReason.NON_COMMUTING_KEYS
                assert result.abort_step == 0
                aborted += 1
        assert aborted > 0 and completed > 0

    def test_clock_skew_on_alice_and_kdc_is_harmless(self):
        for i in range(10):
            cfg = SessionConfig(
                payload=(1, 0, 1),
                seed=f"skew/{i}",
                alice_clock_skew_ms=10**6,
                kdc_clock_skew_ms=-(10**6),
            )
            result = run_session(cfg)
            assert result.ok

    def test_session_nonces_differ_between_sessions(self):
        world = World("nonces")
        cfg = small_cfg()
        a1, b1, k1 = world.new_session(cfg)
        f1 = a1.start()
        b1.on_msg1(f1)
        a2, b2, k2 = world.new_session(cfg)
        f1b = a2.start()
        b2.on_msg1(f1b)
        assert a1.n_a != a2.n_a
        assert b1.n_b != b2.n_b

    def test_determinism_same_seed_same_result(self):
        cfg = SessionConfig(payload=(1, 1, 0, 1), seed="det")
        r1, r2 = run_session(cfg), run_session(cfg)
        assert r1.recovered_bits == r2.recovered_bits
        amplitudes = lambda r: [
            (q.alpha, q.beta) for h in r.hops for q in h.delivered.payload_qubits
        ]
        assert amplitudes(r1) == amplitudes(r2)


class TestBareSession:
    def test_three_hop_honest_run(self):
        cfg = SessionConfig(payload=(0, 1, 1, 0, 1, 0), seed="bare")
        result = run_bare_session(cfg)
        assert result.ok
        assert result.recovered_bits == cfg.payload
        assert [h.hop for h in result.hops] == [1, 2, 3]
        assert result.hops[1].receiver == "alice"

    def test_bare_frames_carry_no_auth_bits(self):
        cfg = SessionConfig(payload=(1, 0), seed="bare2")
        result = run_bare_session(cfg)
        for record in result.hops:
            assert record.delivered.auth_qubits == ()
