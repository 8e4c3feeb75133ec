"""Command-line runner: configure sessions, execute batches, emit traces and reports.

Outputs:

* a JSONL trace (``--trace``): one run-header line, then one event per hop
  per trial plus one result line per trial, trial-ordered;
* a JSON report (``--report``): outcome counts, abort histogram, QBER
  statistics, adversary recovery count, with PNG figures rendered
  alongside unless ``--no-figures``;
* a one-screen summary on stdout.

Everything written to the trace and report is a pure function of
(config, seed): running the same configuration twice produces
byte-identical files. Protocol aborts are results, not failures; the exit
code is 0 whenever the run completed and 2 on configuration errors.
"""
from __future__ import annotations

import argparse
import json
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Optional, Sequence

from . import auth
from .channel import (
    AUTH_MITM_TACTICS,
    AdversaryKind,
    Channel,
    ChannelConfig,
    mitm_attack,
    replay_attack,
)
from .encoding import RedundancyFactor, bits_to_bytes, deframe
from .errors import MalformedRecord, FramingError
from .parties import SessionConfig, World, run_bare_session, run_session
from .transforms import KeyMode, KeyPolicy

SCHEMA_VERSION = 1

_PAYLOAD_STATE = {
    "msg1": "U_A(X)",
    "msg2": "U_B·U_A(X)",
    "msg3": "U_B·U_A(X)",
    "msg3-replay": "U_B·U_A(X) [replayed]",
    "msg4": "U_B(X)",
    "msg4-replay": "U_B(X) [replayed]",
    "bare1": "U_A(X)",
    "bare2": "U_B·U_A(X)",
    "bare3": "U_B(X)",
}

_AUTH_HOP_MSG = {1: "msg1", 2: "msg2", 3: "msg3", 4: "msg4"}
_BARE_HOP_MSG = {1: "bare1", 2: "bare2", 3: "bare3"}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Validated parameters of one CLI run."""

    trials: int = 10
    seed: int = 0
    adversary: AdversaryKind = AdversaryKind.NONE
    noise: float = 0.0
    redundancy: int = 1
    bits: str = "32"
    window_ms: int = 5000
    policy: KeyMode = KeyMode.ROTATIONS_ONLY
    auth_on: bool = True
    trace_path: Optional[Path] = None
    report_path: Optional[Path] = None
    dump_amplitudes: bool = False
    suppress_delay_ms: int = 10_000
    figures: bool = True
    unsafe_reveal_keys: bool = False

    fixed_bits: Optional[tuple[int, ...]] = None
    bits_len: int = 0

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0.0 <= self.noise <= 1.0:
            raise ConfigError("noise must be in [0, 1]")
        try:
            RedundancyFactor(self.redundancy)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.window_ms <= 0:
            raise ConfigError("window-ms must be positive")
        if self.suppress_delay_ms < 0:
            raise ConfigError("suppress-delay-ms must be non-negative")
        if self.bits.startswith("0b"):
            literal = self.bits[2:]
            if not literal or any(c not in "01" for c in literal):
                raise ConfigError(f"literal message must be 0b followed by 0/1 digits, got {self.bits!r}")
            self.fixed_bits = tuple(int(c) for c in literal)
            self.bits_len = len(self.fixed_bits)
        else:
            try:
                self.bits_len = int(self.bits)
            except ValueError as exc:
                raise ConfigError(
                    f"--bits takes an integer length or a 0b-prefixed bit string, got {self.bits!r}"
                ) from exc
        if not 1 <= self.bits_len <= 4096:
            raise ConfigError("message length must be between 1 and 4096 bits")
        if not self.auth_on and self.adversary in (
            AdversaryKind.REPLAY,
            AdversaryKind.SUPPRESS_REPLAY,
        ):
            raise ConfigError(f"adversary {self.adversary.value!r} needs the authentication layer on")
        if self.adversary in (AdversaryKind.MITM, AdversaryKind.REPLAY) and self.noise > 0:
            raise ConfigError(f"noise is not supported with adversary {self.adversary.value!r}")

    def echo(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "adversary": self.adversary.value,
            "noise": self.noise,
            "redundancy": self.redundancy,
            "bits": self.bits,
            "window_ms": self.window_ms,
            "policy": self.policy.value,
            "auth": "on" if self.auth_on else "off",
            "suppress_delay_ms": self.suppress_delay_ms,
            "dump_amplitudes": self.dump_amplitudes,
        }


# ---------------------------------------------------------------------------
# frame -> trace event
# ---------------------------------------------------------------------------


def _auth_fields(msg: str, frame, reveal_keys: Sequence[auth.SealingKey]) -> dict:
    """Decode the classical structure of a frame's auth segment.

    Sealed bodies stay opaque hex unless reveal keys are supplied (the
    --unsafe-reveal-keys path).
    """
    try:
        auth_bits, _ = deframe(frame, Random(0))
    except (FramingError, MalformedRecord) as exc:
        return {"error": f"undecodable auth segment: {exc}"}
    if not auth_bits:
        return {}
    try:
        data = bits_to_bytes(auth_bits)
        kind = msg.split("-")[0]
        if kind == "msg1":
            rec = auth.parse_msg1(auth_bits)
            return {"id_a": rec.id_a.display(), "n_a": rec.n_a.data.hex()}
        if kind == "msg2":
            id_b, n_b, sealed = auth.split_msg2(data)
            out = {"id_b": id_b.display(), "n_b": n_b.data.hex(), "ticket_req": sealed.hex()}
            _maybe_reveal(out, "ticket_req", sealed, auth.TicketReq, reveal_keys)
            return out
        if kind == "msg3":
            package, ticket, n_b = auth.split_msg3(data)
            out = {"package_a": package.hex(), "ticket_b": ticket.hex(), "n_b": n_b.data.hex()}
            _maybe_reveal(out, "package_a", package, auth.PackageA, reveal_keys)
            _maybe_reveal(out, "ticket_b", ticket, auth.TicketB, reveal_keys)
            return out
        if kind == "msg4":
            ticket, confirm = auth.split_msg4(data)
            out = {"ticket_b": ticket.hex(), "confirm": confirm.hex()}
            revealed = _maybe_reveal(out, "ticket_b", ticket, auth.TicketB, reveal_keys)
            more: list[auth.SealingKey] = list(reveal_keys)
            if revealed is not None and isinstance(revealed, auth.TicketB):
                more.append(revealed.k_s)
            _maybe_reveal(out, "confirm", confirm, auth.Confirm, more)
            return out
    except (MalformedRecord, ValueError) as exc:
        return {"error": f"unparseable auth bytes: {exc}"}
    return {"raw": data.hex()}


def _maybe_reveal(out, field, sealed_bytes, record_type, keys):
    if not keys:
        return None
    rec = auth.reveal_sealed(sealed_bytes, auth.serialized_len(record_type), keys)
    if rec is None:
        return None
    fields = {}
    for name in rec.__dataclass_fields__:
        value = getattr(rec, name)
        if isinstance(value, auth.PartyId):
            fields[name] = value.display()
        elif isinstance(value, (auth.Nonce, auth.SessionKey)):
            fields[name] = value.data.hex()
        else:
            fields[name] = value
    out[f"{field}_revealed"] = fields
    return rec


def _payload_summary(msg: str, frame, dump_amplitudes: bool) -> dict:
    summary = {"qubits": len(frame.payload_qubits), "state": _PAYLOAD_STATE.get(msg, "?")}
    if dump_amplitudes:
        summary["amplitudes"] = [
            [q.alpha.real, q.alpha.imag, q.beta.real, q.beta.imag]
            for q in frame.payload_qubits
        ]
    return summary


def _hop_event(
    trial: int,
    hop: int,
    msg: str,
    sender: str,
    receiver: str,
    frame,
    rc: RunConfig,
    reveal_keys: Sequence[auth.SealingKey],
    delay_ms: int = 0,
    abort: Optional[dict] = None,
) -> dict:
    return {
        "type": "hop",
        "trial": trial,
        "hop": hop,
        "msg": msg,
        "sender": sender,
        "receiver": receiver,
        "delay_ms": delay_ms,
        "auth": _auth_fields(msg, frame, reveal_keys),
        "payload": _payload_summary(msg, frame, rc.dump_amplitudes),
        "abort": abort,
    }


# ---------------------------------------------------------------------------
# trial execution
# ---------------------------------------------------------------------------


@dataclass
class TrialOutput:
    events: list[dict]
    result: dict
    qber: Optional[float]


def _trial_payload(rc: RunConfig, trial_seed: str) -> tuple[int, ...]:
    if rc.fixed_bits is not None:
        return rc.fixed_bits
    rng = Random(f"{trial_seed}/x")
    return tuple(rng.randrange(2) for _ in range(rc.bits_len))


def _session_config(rc: RunConfig, payload: tuple[int, ...], trial_seed: str) -> SessionConfig:
    return SessionConfig(
        payload=payload,
        payload_redundancy=rc.redundancy,
        key_policy=KeyPolicy(rc.policy),
        window_ms=rc.window_ms,
        seed=trial_seed,
    )


def _reveal_keys_for(rc: RunConfig, cfg: SessionConfig) -> list[auth.SealingKey]:
    if not rc.unsafe_reveal_keys:
        return []
    # The runner can rebuild the deterministic key material from the seed.
    world = World(cfg.seed)
    return [world.master_key_alice, world.master_key_bob]


def _result_line(trial: int, **fields) -> dict:
    base = {
        "type": "result",
        "trial": trial,
        "outcome": None,
        "abort_reason": None,
        "abort_step": None,
        "bit_errors": None,
        "qber": None,
        "eve_recovered": False,
        "bits": None,
    }
    base.update(fields)
    return base


def _run_channel_trial(rc: RunConfig, trial: int) -> TrialOutput:
    """Adversaries that act inline on the wire: none, eavesdrop, suppress."""
    trial_seed = f"{rc.seed}/t{trial}"
    payload = _trial_payload(rc, trial_seed)
    cfg = _session_config(rc, payload, trial_seed)
    channel = Channel(
        ChannelConfig(
            adversary=rc.adversary,
            flip_noise_p=rc.noise,
            suppress_delay_ms=rc.suppress_delay_ms,
            seed=trial_seed,
        )
    )
    result = run_session(cfg, channel) if rc.auth_on else run_bare_session(cfg, channel)
    reveal = _reveal_keys_for(rc, cfg)
    hop_msgs = _AUTH_HOP_MSG if rc.auth_on else _BARE_HOP_MSG

    events = []
    taps = {entry.hop: entry for entry in channel.tap_log.entries}
    for record in result.hops:
        abort = None
        if result.abort_reason is not None and result.abort_step == record.hop:
            abort = {"reason": result.abort_reason.value, "step": result.abort_step}
        tap = taps.get(record.hop)
        events.append(
            _hop_event(
                trial,
                record.hop,
                hop_msgs[record.hop],
                record.sender,
                record.receiver,
                record.delivered,
                rc,
                reveal,
                delay_ms=tap.delay_ms if tap else 0,
                abort=abort,
            )
        )

    eve_recovered = False
    if rc.adversary is AdversaryKind.INTERCEPT_RESEND:
        entry = taps.get(Channel.INTERCEPT_TARGET_HOP)
        if entry is not None and entry.eve_bits is not None:
            guess = _majority_groups(entry.eve_bits, rc.redundancy)
            eve_recovered = guess == payload

    if result.ok:
        line = _result_line(
            trial,
            outcome="recovered",
            bit_errors=result.bit_errors,
            qber=result.qber,
            eve_recovered=eve_recovered,
            bits="".join(map(str, result.recovered_bits)),
        )
    else:
        line = _result_line(
            trial,
            outcome="aborted",
            abort_reason=result.abort_reason.value,
            abort_step=result.abort_step,
            eve_recovered=eve_recovered,
        )
    events.append(line)
    return TrialOutput(events, line, result.qber)


def _majority_groups(bits: Sequence[int], r: int) -> tuple[int, ...]:
    if r == 1:
        return tuple(bits)
    if len(bits) % r != 0:
        return tuple(bits)
    return tuple(
        1 if 2 * sum(bits[i : i + r]) > r else 0 for i in range(0, len(bits), r)
    )


def _run_mitm_trial(rc: RunConfig, trial: int) -> TrialOutput:
    trial_seed = f"{rc.seed}/t{trial}"
    payload = _trial_payload(rc, trial_seed)
    cfg = _session_config(rc, payload, trial_seed)
    tactic = AUTH_MITM_TACTICS[trial % len(AUTH_MITM_TACTICS)] if rc.auth_on else None
    outcome = mitm_attack(cfg, auth_enabled=rc.auth_on, tactic=tactic, seed=trial_seed)
    reveal = _reveal_keys_for(rc, cfg)

    events = [
        _hop_event(trial, i + 1, msg, sender, receiver, f, rc, reveal)
        for i, (msg, sender, receiver, f) in enumerate(outcome.hop_log)
    ]
    if outcome.honest_abort is not None:
        line = _result_line(
            trial,
            outcome="aborted",
            abort_reason=outcome.honest_abort.value,
            abort_step=outcome.abort_step,
            eve_recovered=outcome.eve_recovered,
        )
    else:
        line = _result_line(
            trial,
            outcome="recovered",
            eve_recovered=outcome.eve_recovered,
        )
    line["tactic"] = outcome.tactic
    events.append(line)
    return TrialOutput(events, line, None)


def _run_replay_trial(rc: RunConfig, trial: int) -> TrialOutput:
    trial_seed = f"{rc.seed}/t{trial}"
    payload = _trial_payload(rc, trial_seed)
    cfg = _session_config(rc, payload, trial_seed)
    outcome = replay_attack(cfg, seed=trial_seed)
    reveal = _reveal_keys_for(rc, cfg)

    events = [
        _hop_event(trial, i + 1, msg, sender, receiver, f, rc, reveal)
        for i, (msg, sender, receiver, f) in enumerate(outcome.hop_log)
    ]
    # Alternate which injection counts as the trial outcome so the abort
    # histogram covers both replay reason codes.
    if trial % 2 == 0:
        reason = outcome.msg3_abort
    else:
        reason = outcome.msg4_abort
    line = _result_line(
        trial,
        outcome="aborted" if reason is not None else "recovered",
        abort_reason=reason.value if reason is not None else None,
        abort_step=3 if trial % 2 == 0 else 4,
    )
    line["replay"] = {
        "msg3_abort": outcome.msg3_abort.value if outcome.msg3_abort else None,
        "msg4_abort": outcome.msg4_abort.value if outcome.msg4_abort else None,
        "same_session_abort": outcome.same_session_abort.value
        if outcome.same_session_abort
        else None,
    }
    events.append(line)
    return TrialOutput(events, line, None)


def run_batch(rc: RunConfig) -> tuple[dict, list[dict], list[Optional[float]]]:
    """Execute all trials; return (report, trace events, per-trial qber)."""
    all_events: list[dict] = []
    qbers: list[Optional[float]] = []
    recovered = 0
    abort_reasons: dict[str, int] = {}
    eve_recoveries = 0

    for trial in range(rc.trials):
        if rc.adversary is AdversaryKind.MITM:
            out = _run_mitm_trial(rc, trial)
        elif rc.adversary is AdversaryKind.REPLAY:
            out = _run_replay_trial(rc, trial)
        else:
            out = _run_channel_trial(rc, trial)
        all_events.extend(out.events)
        qbers.append(out.qber)
        if out.result["outcome"] == "recovered":
            recovered += 1
        else:
            reason = out.result["abort_reason"] or "unknown"
            abort_reasons[reason] = abort_reasons.get(reason, 0) + 1
        if out.result["eve_recovered"]:
            eve_recoveries += 1

    rates = [q for q in qbers if q is not None]
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": rc.echo(),
        "adversary": rc.adversary.value,
        "auth": "on" if rc.auth_on else "off",
        "trials": rc.trials,
        "recovered": recovered,
        "aborted": rc.trials - recovered,
        "abort_reasons": dict(sorted(abort_reasons.items())),
        "eve_recoveries": eve_recoveries,
        "qber": {
            "mean": statistics.fmean(rates) if rates else None,
            "std": statistics.pstdev(rates) if len(rates) > 1 else (0.0 if rates else None),
            "count": len(rates),
        },
    }
    return report, all_events, qbers


# ---------------------------------------------------------------------------
# file outputs
# ---------------------------------------------------------------------------


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_trace(path: Path, rc: RunConfig, events: list[dict]) -> None:
    header = {
        "type": "run",
        "schema_version": SCHEMA_VERSION,
        "config": rc.echo(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump_line(header) + "\n")
        for event in events:
            fh.write(_dump_line(event) + "\n")


def write_report(path: Path, report: dict) -> None:
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

_ADVERSARY_NAMES = {kind.value: kind for kind in AdversaryKind}
_POLICY_NAMES = {mode.value: mode for mode in KeyMode}

_CONFIG_KEYS = {
    "trials",
    "seed",
    "adversary",
    "noise",
    "redundancy",
    "bits",
    "window-ms",
    "policy",
    "auth",
    "trace",
    "report",
    "dump-amplitudes",
    "suppress-delay-ms",
    "no-figures",
    "unsafe-reveal-keys",
}


def load_config_file(path: Path) -> dict[str, str]:
    """``key = value`` lines mirroring the flags; '#' starts a comment."""
    values: dict[str, str] = {}
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _parse_bool(value: str, what: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{what} must be true or false, got {value!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="threestage",
        description="Simulate the authenticated three-stage quantum protocol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a batch of sessions")
    run.add_argument("--config", type=Path, help="key = value file mirroring the flags")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--adversary", choices=sorted(_ADVERSARY_NAMES))
    run.add_argument("--noise", type=float, help="per-qubit flip probability")
    run.add_argument("--redundancy", type=int, help="payload photons per bit (odd)")
    run.add_argument("--bits", help="message length, or 0b-prefixed literal bits")
    run.add_argument("--window-ms", type=int, dest="window_ms")
    run.add_argument("--policy", choices=sorted(_POLICY_NAMES))
    run.add_argument("--auth", choices=["on", "off"])
    run.add_argument("--trace", type=Path, help="JSONL trace output path")
    run.add_argument("--report", type=Path, help="JSON report output path")
    run.add_argument(
        "--dump-amplitudes",
        action="store_true",
        help="include payload amplitudes in trace events",
    )
    run.add_argument("--suppress-delay-ms", type=int, dest="suppress_delay_ms")
    run.add_argument("--no-figures", action="store_true")
    run.add_argument("--unsafe-reveal-keys", action="store_true")

    explain = sub.add_parser("explain", help="narrate one trial from a trace file")
    explain.add_argument("trace", type=Path)
    explain.add_argument("trial", type=int)
    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    file_values: dict[str, str] = {}
    if args.config is not None:
        file_values = load_config_file(args.config)

    def pick(flag_value, file_key: str, default):
        if flag_value is not None and flag_value is not False:
            return flag_value
        if file_key in file_values:
            return file_values[file_key]
        return default

    rc = RunConfig()
    try:
        rc.trials = int(pick(args.trials, "trials", rc.trials))
        rc.seed = int(pick(args.seed, "seed", rc.seed))
        adversary = pick(args.adversary, "adversary", rc.adversary.value)
        if adversary not in _ADVERSARY_NAMES:
            raise ConfigError(f"unknown adversary {adversary!r}")
        rc.adversary = _ADVERSARY_NAMES[adversary]
        rc.noise = float(pick(args.noise, "noise", rc.noise))
        rc.redundancy = int(pick(args.redundancy, "redundancy", rc.redundancy))
        rc.bits = str(pick(args.bits, "bits", rc.bits))
        rc.window_ms = int(pick(args.window_ms, "window-ms", rc.window_ms))
        policy = pick(args.policy, "policy", rc.policy.value)
        if policy not in _POLICY_NAMES:
            raise ConfigError(f"unknown policy {policy!r}")
        rc.policy = _POLICY_NAMES[policy]
        auth_value = pick(args.auth, "auth", "on" if rc.auth_on else "off")
        if auth_value not in ("on", "off"):
            raise ConfigError(f"auth must be on or off, got {auth_value!r}")
        rc.auth_on = auth_value == "on"
        trace = pick(args.trace, "trace", None)
        rc.trace_path = Path(trace) if trace is not None else None
        report = pick(args.report, "report", None)
        rc.report_path = Path(report) if report is not None else None
        rc.suppress_delay_ms = int(
            pick(args.suppress_delay_ms, "suppress-delay-ms", rc.suppress_delay_ms)
        )
        dump = pick(args.dump_amplitudes, "dump-amplitudes", False)
        rc.dump_amplitudes = dump if isinstance(dump, bool) else _parse_bool(dump, "dump-amplitudes")
        no_figs = pick(args.no_figures, "no-figures", False)
        rc.figures = not (
            no_figs if isinstance(no_figs, bool) else _parse_bool(no_figs, "no-figures")
        )
        reveal = pick(args.unsafe_reveal_keys, "unsafe-reveal-keys", False)
        rc.unsafe_reveal_keys = (
            reveal if isinstance(reveal, bool) else _parse_bool(reveal, "unsafe-reveal-keys")
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    rc.validate()
    return rc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    try:
        rc = _merge_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if not rc.auth_on:
        print(
            "warning: authentication disabled; bare mode is insecure and exists "
            "only for the man-in-the-middle contrast experiment",
            file=sys.stderr,
        )

    report, events, qbers = run_batch(rc)

    if rc.trace_path is not None:
        write_trace(rc.trace_path, rc, events)
    figure_paths: list[Path] = []
    if rc.report_path is not None:
        write_report(rc.report_path, report)
        if rc.figures:
            from .figures import render_report_figures

            figure_paths = render_report_figures(report, qbers, rc.report_path)

    qber = report["qber"]
    print(f"trials: {report['trials']}  recovered: {report['recovered']}  aborted: {report['aborted']}")
    if report["abort_reasons"]:
        print("abort reasons: " + ", ".join(f"{k}={v}" for k, v in report["abort_reasons"].items()))
    if qber["count"]:
        print(f"qber mean: {qber['mean']:.6g}  std: {qber['std']:.6g}  over {qber['count']} sessions")
    print(f"eve recoveries: {report['eve_recoveries']}")
    if rc.trace_path is not None:
        print(f"trace: {rc.trace_path}")
    if rc.report_path is not None:
        print(f"report: {rc.report_path}")
    for p in figure_paths:
        print(f"figure: {p}")
    return 0


def cmd_explain(args: argparse.Namespace) -> int:
    try:
        lines = args.trace.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        print(f"cannot read trace: {exc}", file=sys.stderr)
        return 2

    header = None
    hops = []
    result = None
    for raw in lines:
        if not raw.strip():
            continue
        obj = json.loads(raw)
        if obj.get("type") == "run":
            header = obj
        elif obj.get("trial") == args.trial:
            if obj["type"] == "hop":
                hops.append(obj)
            elif obj["type"] == "result":
                result = obj

    if not hops and result is None:
        print(f"trial {args.trial} not found in {args.trace}", file=sys.stderr)
        return 2

    config = header.get("config", {}) if header else {}
    print(
        f"trial {args.trial}: auth {config.get('auth', '?')}, "
        f"adversary {config.get('adversary', '?')}, seed {config.get('seed', '?')}"
    )
    for event in hops:
        auth_fields = event["auth"]
        if auth_fields:
            decoded = ", ".join(f"{k}={_shorten(v)}" for k, v in sorted(auth_fields.items()))
        else:
            decoded = "(no auth segment)"
        payload = event["payload"]
        line = (
            f"  hop {event['hop']}: {event['sender']} -> {event['receiver']}  "
            f"[{event['msg']}]  payload {payload['qubits']} qubits as {payload['state']}"
        )
        if event.get("delay_ms"):
            line += f"  (delayed {event['delay_ms']} ms)"
        print(line)
        print(f"        auth: {decoded}")
        if event.get("abort"):
            print(f"        ABORT here: {event['abort']['reason']}")
    if result is not None:
        if result["outcome"] == "recovered":
            detail = f"bit errors {result['bit_errors']}, qber {result['qber']}"
        else:
            detail = f"{result['abort_reason']} at step {result['abort_step']}"
        print(f"  result: {result['outcome']} ({detail})")
    return 0


def _shorten(value, limit: int = 48) -> str:
    text = str(value)
    return text if len(text) <= limit else text[: limit - 1] + "…"


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_explain(args)


if __name__ == "__main__":
    raise SystemExit(main())
