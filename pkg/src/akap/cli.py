"""Command-line front end for the whole toolbox.

Exit codes are a stable contract:

  0   success (session agreed, attack succeeded, target derivable)
  1   attack failed adjudication / closure target not derivable
  2   registration rejected
  3   I/O trouble or malformed input files
  4   protocol verification failure (the message names the check)
  5   a required oracle input is missing
  6   closure budget exhausted before even the exact tier saturated
  64  usage errors

Same flags plus same --seed give byte-identical output files; there is
no hidden randomness anywhere in the pipeline.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from . import attacks, closure, netsim, report, storage
from .blocks import BLOCK_SIZE, Biometric, DEFAULT_HASH, fingerprint, h, hash_names
from .errors import (
    AkapError,
    AttackInputsMissing,
    ConfigError,
    LeakUnavailable,
    PlaintextStateRefused,
    RegistrationRejected,
    StateFileError,
    StateFormatError,
    StateVersionError,
    TranscriptFormatError,
)
from .messages import (
    TAG_M1,
    TAG_M2,
    TAG_M3,
    TAG_M4,
    block_fields,
    decode_message,
    message_timestamp,
)
from .netsim import AdversaryAction, Transcript, WorldConfig, _behavior_for
from .protocol import UserCredentials

_TAG_OF = {"m1": TAG_M1, "m2": TAG_M2, "m3": TAG_M3, "m4": TAG_M4}

EXIT_OK = 0
EXIT_ATTACK_FAILED = 1
EXIT_REG_REJECTED = 2
EXIT_IO = 3
EXIT_PROTOCOL = 4
EXIT_MISSING_ORACLE = 5
EXIT_BUDGET = 6
EXIT_USAGE = 64

LEAK_FMT = "akap-leak"
LEAK_VERSION = 1

PROBE_FMT = "akap-probe"
CLOSURE_FMT = "akap-closure"

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 64, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed_arg(text: str) -> bytes:
    try:
        value = bytes.fromhex(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be hex, got {text!r}")
    if len(value) != BLOCK_SIZE:
        raise argparse.ArgumentTypeError(f"seed must be {BLOCK_SIZE} bytes of hex")
    return value


def _hex_arg(text: str) -> bytes:
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected hex, got {text!r}")


def _delta_arg(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("freshness window must be >= 1 tick")
    return value


def _safe_name(label: str, value: str) -> str:
    if not _NAME_RE.match(value):
        raise ConfigError(f"{label} {value!r} is not usable in a state file name")
    return value


_GLOBALS: dict[str, object] = {
    "seed": bytes(BLOCK_SIZE),
    "delta": 2,
    "hash": DEFAULT_HASH,
    "state_dir": "state",
    "out": None,
    "quirk_double_rg": False,
    "allow_plaintext_state": False,
    "reveal_keys": False,
}


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    sup = argparse.SUPPRESS
    g.add_argument("--seed", type=_seed_arg, default=sup, metavar="HEX64",
                   help="32-byte hex seed for all randomness (default: all zeros)")
    g.add_argument("--delta", type=_delta_arg, default=sup, metavar="N",
                   help="freshness window in logical ticks (default: 2)")
    g.add_argument("--hash", choices=hash_names(), default=sup,
                   help="hash algorithm for every derivation (default: sha256)")
    g.add_argument("--state-dir", default=sup, metavar="PATH",
                   help="directory for party state files (default: state)")
    g.add_argument("--out", default=sup, metavar="PATH",
                   help="write JSON output here instead of stdout")
    g.add_argument("--quirk-double-rg", action="store_true", default=sup,
                   help="make the gateway hash its nonce twice into the sensor check")
    g.add_argument("--allow-plaintext-state", action="store_true", default=sup,
                   help="permit writing secrets to disk in the clear")
    g.add_argument("--reveal-keys", action="store_true", default=sup,
                   help="print full key material instead of 8-char fingerprints")
    return common


def _world_config(args) -> WorldConfig:
    return WorldConfig(
        seed=args.seed,
        delta=args.delta,
        hash_alg=args.hash,
        quirk_double_rg=args.quirk_double_rg,
    )


def _bio_for(args, user_id: str) -> Biometric:
    """Deterministic stand-in biometric, stretched from a small seed."""
    seed = args.bio_seed if getattr(args, "bio_seed", None) else bytes(
        h("BIO", args.seed, user_id, alg=args.hash)
    )
    parts = [bytes(h("BIO-STRETCH", seed, i, alg=args.hash)) for i in range(3)]
    return Biometric(b"".join(parts)[: Biometric.SIZE])


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _fp(args, value: bytes) -> str:
    return fingerprint(value, reveal=args.reveal_keys)


# --- file plumbing ----------------------------------------------------------

def _gateway_path(args) -> Path:
    return Path(args.state_dir) / "gateway.json"


def _sensor_path(args, sid: str) -> Path:
    return Path(args.state_dir) / f"sensor-{sid}.json"


def _card_path(args, user_id: str) -> Path:
    return Path(args.state_dir) / f"card-{user_id}.json"


def _load_transcript(path) -> Transcript:
    return Transcript.from_json(Path(path).read_text())


def _load_leak(path) -> dict[str, bytes]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise StateFormatError(f"{path}: invalid JSON: {exc}")
    if not isinstance(data, dict) or data.get("fmt") != LEAK_FMT:
        raise StateFormatError(f"{path}: not an ephemeral-leak file")
    if data.get("v") != LEAK_VERSION:
        raise StateVersionError(f"{path}: unsupported leak version {data.get('v')!r}")
    leak: dict[str, bytes] = {}
    for key in ("r_u", "r_g", "r_s", "truth_sk"):
        if key not in data:
            continue
        try:
            value = bytes.fromhex(data[key])
        except (TypeError, ValueError):
            raise StateFormatError(f"{path}: field {key!r} is not hex")
        if len(value) != BLOCK_SIZE:
            raise StateFormatError(f"{path}: field {key!r} must be {BLOCK_SIZE} bytes")
        leak[key] = value
    return leak


# --- subcommand handlers ----------------------------------------------------

def cmd_register_sensor(args) -> int:
    if not args.allow_plaintext_state:
        raise PlaintextStateRefused("registration writes key material to disk")
    sid = _safe_name("sensor id", args.sid)
    state_dir = Path(args.state_dir)
    state_dir.mkdir(parents=True, exist_ok=True)
    gw_path = _gateway_path(args)
    gateway = storage.load_state(gw_path, "gateway") if gw_path.exists() else None
    world = netsim.World(_world_config(args), gateway=gateway)
    state = netsim.run_sensor_registration(world, sid)
    storage.save_state(gw_path, world.gateway, allow_plaintext=args.allow_plaintext_state)
    sensor_path = _sensor_path(args, sid)
    storage.save_state(sensor_path, state, allow_plaintext=args.allow_plaintext_state)
    print(f"registered sensor {sid!r}; device pseudonym {_fp(args, state.pid)}")
    print(f"state written: {gw_path} {sensor_path}")
    return EXIT_OK


def cmd_register_user(args) -> int:
    if not args.allow_plaintext_state:
        raise PlaintextStateRefused("registration writes card secrets to disk")
    user_id = _safe_name("user id", args.id)
    world = netsim.World(_world_config(args), gateway=storage.load_state(_gateway_path(args), "gateway"))
    cred = UserCredentials(id=user_id, pw=args.pw, bio=_bio_for(args, user_id))
    account = netsim.run_user_registration(world, cred, args.sid)
    storage.save_state(_gateway_path(args), world.gateway, allow_plaintext=args.allow_plaintext_state)
    card_path = _card_path(args, user_id)
    storage.save_state(card_path, account.card, allow_plaintext=args.allow_plaintext_state)
    print(f"registered user {user_id!r}; masked identity {_fp(args, account.hid)}")
    print(f"state written: {_gateway_path(args)} {card_path}")
    return EXIT_OK


def _single_card_id(args) -> str:
    cards = sorted(Path(args.state_dir).glob("card-*.json"))
    if len(cards) != 1:
        raise ConfigError(
            f"pass --id: expected exactly one card file in {args.state_dir}, found {len(cards)}"
        )
    return cards[0].stem[len("card-"):]


def cmd_session(args) -> int:
    world = netsim.World(_world_config(args), gateway=storage.load_state(_gateway_path(args), "gateway"))
    for path in sorted(Path(args.state_dir).glob("sensor-*.json")):
        world.adopt_sensor(storage.load_state(path, "sensor"))
    user_id = args.id or _single_card_id(args)
    card = storage.load_state(_card_path(args, user_id), "card")
    world.adopt_user(UserCredentials(id=user_id, pw=args.pw, bio=_bio_for(args, user_id)), card)

    def write_transcript() -> None:
        if args.transcript:
            Path(args.transcript).write_text(world.transcript.to_json())

    try:
        result = netsim.run_auth_session(world, user_id=user_id)
    except AkapError:
        write_transcript()
        raise
    if args.leak_out:
        if not args.allow_plaintext_state:
            raise PlaintextStateRefused("an ephemeral leak file exposes the session key")
        leak = netsim.leak_ephemerals(world)
        body = {
            "fmt": LEAK_FMT,
            "v": LEAK_VERSION,
            "r_u": leak["r_u"].hex(),
            "r_g": leak["r_g"].hex(),
            "r_s": leak["r_s"].hex(),
            "truth_sk": netsim.ground_truth_sk(world).hex(),
        }
        Path(args.leak_out).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    write_transcript()

    outcomes = (("user", result.user), ("gateway", result.gateway), ("sensor", result.sensor))
    for name, outcome in outcomes:
        sk = _fp(args, outcome.sk) if outcome else "-"
        confirmed = "yes" if outcome and outcome.peer_confirmed else "no"
        print(f"{name:<8} sk={sk} confirmed={confirmed}")
    if all(o is not None and o.peer_confirmed for _, o in outcomes):
        return EXIT_OK
    print("akap: error: not every party confirmed its peers", file=sys.stderr)
    return EXIT_PROTOCOL


def cmd_attack_kssti(args) -> int:
    if not args.leak:
        raise AttackInputsMissing("kssti needs --leak FILE (the ephemeral compromise oracle)")
    leak = _load_leak(args.leak)
    if "truth_sk" not in leak:
        raise AttackInputsMissing(f"{args.leak}: no ground-truth key to adjudicate against")
    view = _load_transcript(args.transcript) if args.transcript else None
    rep = attacks.kssti_attack(view, leak, leak["truth_sk"], alg=args.hash)
    _emit(args, rep.to_json(reveal=args.reveal_keys))
    return EXIT_OK if rep.success else EXIT_ATTACK_FAILED


def cmd_attack_stolen_verifier(args) -> int:
    if not args.card_dump:
        raise AttackInputsMissing("stolen-verifier needs --card-dump FILE (the extracted card)")
    if not args.transcript:
        raise AttackInputsMissing("stolen-verifier needs --transcript FILE (an observed login)")
    card = storage.load_state(args.card_dump, "card")
    view = _load_transcript(args.transcript)
    gateway = storage.load_state(_gateway_path(args), "gateway")
    truth_hid = next(
        (hid for hid, d1 in gateway.user_table.items() if bytes(d1) == bytes(card.d1)), None
    )
    rep = attacks.stolen_verifier_attack(card, view, truth_hid, alg=args.hash)
    _emit(args, rep.to_json(reveal=args.reveal_keys))
    return EXIT_OK if rep.success else EXIT_ATTACK_FAILED


def _demo_world(args) -> netsim.World:
    """Self-contained world for probes: one sensor, one registered user."""
    world = netsim.world_new(_world_config(args))
    cred = UserCredentials(id=args.id, pw=args.pw, bio=_bio_for(args, args.id))
    netsim.run_registration(world, cred, args.sid)
    return world


def cmd_probe_replay(args) -> int:
    world = _demo_world(args)
    if args.when == "within":
        # replayed mid-session, while the original frame is still fresh
        result = netsim.run_auth_session(
            world, actions=[AdversaryAction("replay", target=args.target)]
        )
        outcome = result.record.replays[args.target]
    else:
        result = netsim.run_auth_session(world)
        world.advance(args.delta + 1)
        outcome = netsim.adversary_act(
            world, AdversaryAction("replay", target=result.record.seqs[args.target])
        )
    body = {
        "fmt": PROBE_FMT,
        "v": 1,
        "probe": "replay",
        "target": args.target,
        "when": args.when,
        "outcome": outcome.to_dict(),
    }
    _emit(args, json.dumps(body, indent=2) + "\n")
    return EXIT_OK


def cmd_probe_tamper(args) -> int:
    flippable = block_fields(_TAG_OF[args.target])
    if args.field not in flippable:
        raise ConfigError(
            f"{args.target} has no tamperable field {args.field!r}; "
            f"pick one of {', '.join(flippable)}"
        )
    if not 0 <= args.bit < BLOCK_SIZE * 8:
        raise ConfigError(f"--bit must be in [0, {BLOCK_SIZE * 8}), got {args.bit}")
    world = _demo_world(args)
    action = AdversaryAction("modify", target=args.target, field=args.field, bit=args.bit)
    try:
        netsim.run_auth_session(world, actions=[action])
        outcome = {
            "status": "ok",
            "behavior": "accepted",
            "detail": "session completed despite the tampered field",
        }
    except ConfigError:
        raise
    except AkapError as exc:
        record = world.sessions[-1]
        outcome = {
            "status": record.status,
            "behavior": _behavior_for(exc),
            "rejected_by": record.rejected_by,
            "detail": str(exc),
        }
    body = {
        "fmt": PROBE_FMT,
        "v": 1,
        "probe": "tamper",
        "target": args.target,
        "field": args.field,
        "bit": args.bit,
        "outcome": outcome,
    }
    _emit(args, json.dumps(body, indent=2) + "\n")
    return EXIT_OK


def cmd_closure(args) -> int:
    leak = _load_leak(args.leak) if args.leak else None
    if args.initial == "leak":
        if leak is None:
            raise AttackInputsMissing("--initial leak needs --leak FILE")
        terms = [leak[k] for k in ("r_u", "r_g", "r_s") if k in leak]
        if len(terms) != 3:
            raise AttackInputsMissing(f"{args.leak}: leak lacks one of r_u, r_g, r_s")
        ks = closure.initial_knowledge(terms, provenance="leak", budget=args.budget)
    else:
        if not args.transcript:
            raise AttackInputsMissing("--initial transcript needs --transcript FILE")
        terms = []
        for entry in _load_transcript(args.transcript).entries:
            if entry.channel != netsim.CH_PUBLIC:
                continue
            try:
                msg = decode_message(entry.payload)
            except AkapError:
                continue
            ts = message_timestamp(msg)
            if ts is not None:
                terms.append(ts)
            terms.extend(bytes(getattr(msg, name)) for name in block_fields(msg))
        if not terms:
            raise AttackInputsMissing(f"{args.transcript}: no public frames to learn from")
        ks = closure.initial_knowledge(terms, provenance="transcript", budget=args.budget)

    if args.target == "sk":
        if leak is None or "truth_sk" not in leak:
            raise AttackInputsMissing("--target sk needs --leak FILE carrying truth_sk")
        target = leak["truth_sk"]
    else:
        try:
            target = bytes.fromhex(args.target)
        except ValueError:
            raise ConfigError(f"--target must be 'sk' or hex, got {args.target!r}")

    result = closure.derivable(ks, target, depth=args.depth, max_arity=args.arity, alg=args.hash)
    body = {
        "fmt": CLOSURE_FMT,
        "v": 1,
        "found": result.found,
        "complete": result.complete,
        "core_complete": result.core_complete,
        "depth": args.depth,
        "arity": args.arity,
        "budget": args.budget,
        "terms": len(result.knowledge),
        "trace": None if result.trace is None
        else attacks.redact_steps(result.trace, args.reveal_keys),
    }
    _emit(args, json.dumps(body, indent=2) + "\n")
    if result.found:
        return EXIT_OK
    if result.core_complete:
        if not result.complete:
            print(
                "akap: notice: hash enumeration stopped at the term budget; "
                "the XOR tier is exact, so the verdict is bounded, not absolute",
                file=sys.stderr,
            )
        return EXIT_ATTACK_FAILED
    print(
        "akap: error: term budget exhausted before the exact tier saturated; no verdict",
        file=sys.stderr,
    )
    return EXIT_BUDGET


def cmd_report(args) -> int:
    transcript = _load_transcript(args.transcript)
    paths = report.write_report(transcript, args.out_dir)
    for path in paths.values():
        print(f"wrote {path}")
    return EXIT_OK


# --- parser wiring ----------------------------------------------------------

def _build_parser() -> _Parser:
    common = _common_flags()
    parser = _Parser(
        prog="akap",
        parents=[common],
        description="Model of a gateway-mediated sensor authentication scheme, "
        "with an adversarial network and its published breaks.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("register-sensor", parents=[common],
                       help="enroll a sensor with the gateway; write state files")
    p.add_argument("--sid", required=True, help="sensor identity string")
    p.set_defaults(handler=cmd_register_sensor)

    p = sub.add_parser("register-user", parents=[common],
                       help="enroll a user; write the smart-card state file")
    p.add_argument("--id", required=True, help="user identity string")
    p.add_argument("--pw", default="demo-password", help="password (default: demo-password)")
    p.add_argument("--bio-seed", type=_hex_arg, default=None, metavar="HEX",
                   help="seed for the simulated biometric (default: derived from --seed and --id)")
    p.add_argument("--sid", required=True, help="sensor this user is routed to")
    p.set_defaults(handler=cmd_register_user)

    p = sub.add_parser("session", parents=[common],
                       help="run one authentication session from saved state")
    p.add_argument("--id", default=None, help="user to log in (default: the only card on disk)")
    p.add_argument("--pw", default="demo-password", help="password (default: demo-password)")
    p.add_argument("--bio-seed", type=_hex_arg, default=None, metavar="HEX")
    p.add_argument("--transcript", default=None, metavar="PATH",
                   help="write the network transcript JSON here")
    p.add_argument("--leak-out", default=None, metavar="PATH",
                   help="write this session's ephemerals (the compromise oracle)")
    p.set_defaults(handler=cmd_session)

    attack = sub.add_parser("attack", help="run a published break against recorded material")
    attack_sub = attack.add_subparsers(dest="attack_kind", required=True, metavar="KIND")
    p = attack_sub.add_parser("kssti", parents=[common],
                              help="recover the session key from leaked ephemerals")
    p.add_argument("--leak", default=None, metavar="PATH", help="ephemeral leak file")
    p.add_argument("--transcript", default=None, metavar="PATH", help="observed traffic (optional)")
    p.set_defaults(handler=cmd_attack_kssti)
    p = attack_sub.add_parser("stolen-verifier", parents=[common],
                              help="forge the card check from a dumped card plus one login")
    p.add_argument("--card-dump", default=None, metavar="PATH", help="card state file")
    p.add_argument("--transcript", default=None, metavar="PATH", help="observed traffic")
    p.set_defaults(handler=cmd_attack_stolen_verifier)

    probe = sub.add_parser("probe", help="poke the live protocol with one adversary action")
    probe_sub = probe.add_subparsers(dest="probe_kind", required=True, metavar="KIND")
    for kind in ("replay", "tamper"):
        p = probe_sub.add_parser(kind, parents=[common],
                                 help=f"{kind} one message and report the receiver's behavior")
        p.add_argument("--target", required=True, choices=("m1", "m2", "m3", "m4"))
        p.add_argument("--id", default="demo-user")
        p.add_argument("--pw", default="demo-password")
        p.add_argument("--bio-seed", type=_hex_arg, default=None, metavar="HEX")
        p.add_argument("--sid", default="demo-sensor")
        if kind == "replay":
            p.add_argument("--when", choices=("within", "after"), default="after",
                           help="replay inside the freshness window or after it expires")
            p.set_defaults(handler=cmd_probe_replay)
        else:
            p.add_argument("--field", required=True, help="which field to flip a bit in")
            p.add_argument("--bit", type=int, default=0, help="bit index within the field")
            p.set_defaults(handler=cmd_probe_tamper)

    p = sub.add_parser("closure", parents=[common],
                       help="decide whether a target is derivable from observed terms")
    p.add_argument("--initial", choices=("leak", "transcript"), required=True,
                   help="which observation set the attacker starts from")
    p.add_argument("--target", required=True, metavar="sk|HEX",
                   help="'sk' (adjudicated via --leak) or an explicit hex value")
    p.add_argument("--depth", type=int, required=True, help="derivation rounds (max 3)")
    p.add_argument("--arity", type=int, default=5, help="max hash tuple width (default: 5)")
    p.add_argument("--budget", type=int, default=closure.DEFAULT_BUDGET,
                   help=f"max resident terms (default: {closure.DEFAULT_BUDGET})")
    p.add_argument("--leak", default=None, metavar="PATH")
    p.add_argument("--transcript", default=None, metavar="PATH")
    p.set_defaults(handler=cmd_closure)

    p = sub.add_parser("report", parents=[common],
                       help="render a transcript to CSV plus a sequence diagram")
    p.add_argument("--transcript", required=True, metavar="PATH")
    p.add_argument("--out-dir", default="report", metavar="PATH")
    p.set_defaults(handler=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    for key, value in _GLOBALS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    try:
        return args.handler(args)
    except RegistrationRejected as exc:
        return _fail(exc, EXIT_REG_REJECTED)
    except (AttackInputsMissing, LeakUnavailable) as exc:
        return _fail(exc, EXIT_MISSING_ORACLE)
    except PlaintextStateRefused:
        return _fail(
            "refusing to write secrets in the clear; pass --allow-plaintext-state",
            EXIT_USAGE,
        )
    except (StateFileError, TranscriptFormatError) as exc:
        return _fail(exc, EXIT_IO)
    except ConfigError as exc:
        return _fail(exc, EXIT_USAGE)
    except AkapError as exc:
        return _fail(exc, EXIT_PROTOCOL)
    except OSError as exc:
        return _fail(exc, EXIT_IO)


def _fail(message, code: int) -> int:
    print(f"akap: error: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
