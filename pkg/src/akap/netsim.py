"""Deterministic simulated network with an attacker-controlled public channel.

A World owns the logical clock, the seeded randomness, the three kinds of
parties, and the transcript of every frame ever sent. Registration flows
run over the secure channel (invisible to the adversary); authentication
flows run over the public channel. The clock advances by exactly one tick
per send, and message timestamps are clock readings, so freshness is a
property of the replayed bytes, not of wall time.

The adversary surface is explicit: view (public frames only), act (drop,
modify, inject, replay), and two leak oracles (session ephemerals, smart
card dump) that stand in for the compromise assumptions of the attack
analyses. Every oracle use is marked in the transcript's event list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .blocks import BLOCK_SIZE, Block
from .errors import (
    AkapError,
    AuthenticatorMismatch,
    ConfigError,
    DecodeError,
    LeakUnavailable,
    LocalAuthFailed,
    NoActiveSession,
    RegistrationRejected,
    StaleTimestamp,
    TranscriptFormatError,
    UnknownIdentity,
)
from .messages import (
    M1,
    M2,
    M3,
    M4,
    Message,
    SensorRegRequest,
    block_field_offset,
    decode_message,
    encode_message,
    message_name,
    message_timestamp,
)
from .pke import pke_keygen
from .protocol import (
    GatewaySessionState,
    GatewayState,
    ProtoConfig,
    SensorState,
    SessionOutcome,
    SmartCardStore,
    UserCredentials,
    UserSessionState,
    gateway_new,
    gateway_process_m1,
    gateway_process_m3,
    gateway_register_sensor,
    gateway_register_user,
    sensor_finalize_registration,
    sensor_process_m2,
    user_finalize_registration,
    user_login,
    user_process_m4,
    user_register_request,
)
from .rng import SeededRng

CH_PUBLIC = "public"
CH_SECURE = "secure"

TRANSCRIPT_FMT = "akap-transcript"
TRANSCRIPT_VERSION = 1

_ACTION_KINDS = ("observe", "drop", "modify", "inject", "replay")

_AUTH_STEPS = ("m1", "m2", "m3", "m4")


@dataclass(frozen=True)
class WorldConfig:
    seed: bytes
    delta: int = 2
    hash_alg: str = "sha256"
    quirk_double_rg: bool = False

    def __post_init__(self):
        if len(self.seed) != BLOCK_SIZE:
            raise ConfigError(f"seed must be {BLOCK_SIZE} bytes, got {len(self.seed)}")
        # Delegate delta/hash validation to the protocol config.
        self.proto()

    def proto(self) -> ProtoConfig:
        return ProtoConfig(
            hash_alg=self.hash_alg,
            delta=self.delta,
            quirk_double_rg=self.quirk_double_rg,
        )


@dataclass(frozen=True)
class TranscriptEntry:
    seq: int
    tick: int
    channel: str
    sender: str
    receiver: str
    payload: bytes


class Transcript:
    """Ordered record of every frame sent, plus out-of-band events."""

    def __init__(self):
        self.entries: list[TranscriptEntry] = []
        self.events: list[dict] = []

    def append(
        self, tick: int, channel: str, sender: str, receiver: str, payload: bytes
    ) -> TranscriptEntry:
        entry = TranscriptEntry(
            seq=len(self.entries),
            tick=tick,
            channel=channel,
            sender=sender,
            receiver=receiver,
            payload=bytes(payload),
        )
        self.entries.append(entry)
        return entry

    def mark_event(self, tick: int, kind: str, **detail) -> None:
        self.events.append({"tick": tick, "kind": kind, **detail})

    def to_json(self) -> str:
        doc = {
            "fmt": TRANSCRIPT_FMT,
            "v": TRANSCRIPT_VERSION,
            "entries": [
                {
                    "seq": e.seq,
                    "tick": e.tick,
                    "channel": e.channel,
                    "sender": e.sender,
                    "receiver": e.receiver,
                    "payload_hex": e.payload.hex(),
                }
                for e in self.entries
            ],
            "events": self.events,
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TranscriptFormatError(f"not valid JSON: {exc}") from None
        if not isinstance(doc, dict) or doc.get("fmt") != TRANSCRIPT_FMT:
            raise TranscriptFormatError("missing or wrong fmt header")
        if doc.get("v") != TRANSCRIPT_VERSION:
            raise TranscriptFormatError(f"unsupported version {doc.get('v')!r}")
        transcript = cls()
        for i, raw in enumerate(doc.get("entries", [])):
            try:
                payload = bytes.fromhex(raw["payload_hex"])
                entry = TranscriptEntry(
                    seq=int(raw["seq"]),
                    tick=int(raw["tick"]),
                    channel=str(raw["channel"]),
                    sender=str(raw["sender"]),
                    receiver=str(raw["receiver"]),
                    payload=payload,
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise TranscriptFormatError(f"bad entry at index {i}: {exc}") from None
            if entry.seq != i:
                raise TranscriptFormatError(f"entry {i} has out-of-order seq {entry.seq}")
            if entry.channel not in (CH_PUBLIC, CH_SECURE):
                raise TranscriptFormatError(f"entry {i} has unknown channel {entry.channel!r}")
            transcript.entries.append(entry)
        events = doc.get("events", [])
        if not isinstance(events, list):
            raise TranscriptFormatError("events must be a list")
        transcript.events = events
        return transcript


@dataclass
class AdversaryAction:
    """One adversarial intervention on the public channel.

    kind 'drop'/'modify' target an upcoming session message by name
    ('m1'..'m4'); 'replay' targets a session message by name (within-run)
    or a transcript seq (standalone); 'inject' carries raw payload bytes
    for a named receiver; 'observe' just returns the public view.
    """

    kind: str
    target: str | int | None = None
    field: str | None = None
    bit: int | None = None
    payload: bytes | None = None
    receiver: str | None = None

    def __post_init__(self):
        if self.kind not in _ACTION_KINDS:
            raise ConfigError(
                f"unknown adversary action {self.kind!r}; one of {', '.join(_ACTION_KINDS)}"
            )
        if self.kind in ("drop", "modify") and self.target not in _AUTH_STEPS:
            raise ConfigError(f"{self.kind} action must target one of {', '.join(_AUTH_STEPS)}")
        if self.kind == "modify" and (self.field is None or self.bit is None):
            raise ConfigError("modify action needs field= and bit=")
        if self.kind == "inject" and (self.payload is None or self.receiver is None):
            raise ConfigError("inject action needs payload= and receiver=")
        if self.kind == "replay" and self.target is None:
            raise ConfigError("replay action needs a target (message name or seq)")


@dataclass
class DeliveryOutcome:
    """How a receiver reacted to one adversarial delivery."""

    receiver: str
    behavior: str
    detail: str
    tick: int

    def to_dict(self) -> dict:
        return {
            "receiver": self.receiver,
            "behavior": self.behavior,
            "detail": self.detail,
            "tick": self.tick,
        }


@dataclass
class UserAccount:
    cred: UserCredentials
    card: SmartCardStore | None = None
    hid: Block | None = None


@dataclass
class SessionRecord:
    """Ground truth bookkeeping for one authentication run."""

    user_id: str
    sid: str | None = None
    started_tick: int = 0
    status: str = "running"          # running | ok | failed | stalled
    error: str | None = None
    error_kind: str | None = None
    rejected_by: str | None = None
    awaiting: str | None = None
    seqs: dict = field(default_factory=dict)         # step name -> transcript seq
    msgs: dict = field(default_factory=dict)         # step name -> decoded message
    ephemerals: dict = field(default_factory=dict)   # r_u / r_g / r_s -> Block
    sk: dict = field(default_factory=dict)           # party -> Block
    replays: dict = field(default_factory=dict)      # step name -> DeliveryOutcome


@dataclass
class SessionResult:
    user: SessionOutcome | None
    gateway: SessionOutcome | None
    sensor: SessionOutcome | None
    record: SessionRecord

    @property
    def ok(self) -> bool:
        return self.record.status == "ok"


_BEHAVIOR_BY_ERROR = (
    (StaleTimestamp, "rejected-stale"),
    (AuthenticatorMismatch, "rejected-authenticator"),
    (UnknownIdentity, "rejected-unknown-id"),
    (DecodeError, "rejected-decode"),
    (NoActiveSession, "rejected-no-session"),
    (LocalAuthFailed, "rejected-local-auth"),
)


def _behavior_for(exc: AkapError) -> str:
    for etype, name in _BEHAVIOR_BY_ERROR:
        if isinstance(exc, etype):
            return name
    return "rejected"


class World:
    def __init__(self, config: WorldConfig, gateway: GatewayState | None = None):
        self.config = config
        self.proto = config.proto()
        self.rng = SeededRng(config.seed)
        self.clock = 0
        self.transcript = Transcript()
        self.gateway = gateway if gateway is not None else gateway_new(self.rng)
        self.users: dict[str, UserAccount] = {}
        self.sensors: dict[str, SensorState] = {}
        self.sessions: list[SessionRecord] = []
        self.pending_actions: list[AdversaryAction] = []
        self._user_session: tuple[str, UserSessionState] | None = None
        self._gateway_session: GatewaySessionState | None = None

    # --- plumbing ----------------------------------------------------------

    def _send(
        self, sender: str, receiver: str, channel: str, payload: bytes
    ) -> TranscriptEntry:
        entry = self.transcript.append(self.clock, channel, sender, receiver, payload)
        self.clock += 1
        return entry

    def advance(self, ticks: int) -> None:
        """Let time pass without traffic (e.g. to age a recorded frame)."""
        if ticks < 0:
            raise ValueError("cannot advance by a negative tick count")
        self.clock += ticks

    def adopt_sensor(self, state: SensorState) -> None:
        """Attach a sensor restored from a state file (no transcript traffic)."""
        self.sensors[state.sid] = state

    def adopt_user(self, cred: UserCredentials, card: SmartCardStore) -> None:
        """Attach a user whose card was restored from a state file."""
        self.users[cred.id] = UserAccount(cred=cred, card=card)


def world_new(config: WorldConfig) -> World:
    return World(config)


# --- registration flows -----------------------------------------------------

def run_sensor_registration(world: World, sid: str) -> SensorState:
    if sid in world.sensors:
        raise RegistrationRejected(f"sensor {sid!r} already registered in this world")
    keys = pke_keygen(world.rng)
    request = SensorRegRequest(sid=sid, public_key=keys.public_key)
    world._send(f"sensor:{sid}", "gateway", CH_SECURE, encode_message(request))
    resp = gateway_register_sensor(world.gateway, sid, keys.public_key, world.rng, world.proto)
    world._send("gateway", f"sensor:{sid}", CH_SECURE, encode_message(resp))
    state = sensor_finalize_registration(sid, keys, resp, world.proto)
    world.sensors[sid] = state
    return state


def run_user_registration(world: World, cred: UserCredentials, sid: str) -> UserAccount:
    if cred.id in world.users:
        raise RegistrationRejected(f"user {cred.id!r} already registered in this world")
    if sid not in world.gateway.sensor_table:
        raise RegistrationRejected(f"cannot route user to unregistered sensor {sid!r}")
    request, pending = user_register_request(cred, world.rng, world.proto)
    world._send(f"user:{cred.id}", "gateway", CH_SECURE, encode_message(request))
    resp = gateway_register_user(world.gateway, request, world.proto)
    world._send("gateway", f"user:{cred.id}", CH_SECURE, encode_message(resp))
    card = user_finalize_registration(pending, resp, world.proto)
    account = UserAccount(cred=cred, card=card, hid=pending.hid)
    world.users[cred.id] = account
    world.gateway.routing[pending.hid] = sid
    return account


def run_registration(world: World, cred: UserCredentials, sid: str) -> UserAccount:
    """Register the sensor and then the user, linking the route between them."""
    run_sensor_registration(world, sid)
    return run_user_registration(world, cred, sid)


# --- authentication session -------------------------------------------------

def _flip_field_bit(payload: bytes, msg: Message, field_name: str, bit: int) -> bytes:
    if not 0 <= bit < BLOCK_SIZE * 8:
        raise ConfigError(f"bit index out of range for a Block field: {bit}")
    offset = block_field_offset(msg, field_name)
    mutated = bytearray(payload)
    mutated[offset + bit // 8] ^= 0x80 >> (bit % 8)
    return bytes(mutated)


def run_auth_session(
    world: World, user_id: str | None = None, actions=()
) -> SessionResult:
    """Run one login/authentication exchange, applying adversary actions.

    Party verification failures are recorded on the session record and
    re-raised; a dropped message stalls the session instead (no error,
    status 'stalled', with the waiting party named).
    """
    if user_id is None:
        if len(world.users) != 1:
            raise ConfigError("user_id required when the world has multiple users")
        user_id = next(iter(world.users))
    account = world.users.get(user_id)
    if account is None or account.card is None:
        raise ConfigError(f"user {user_id!r} is not registered in this world")

    plan = list(world.pending_actions) + list(actions)
    world.pending_actions.clear()
    for action in plan:
        if action.kind not in ("drop", "modify", "replay"):
            raise ConfigError(f"{action.kind} actions cannot be scheduled inside a session")

    record = SessionRecord(user_id=user_id, started_tick=world.clock)
    world.sessions.append(record)
    user_label = f"user:{user_id}"

    def step_fail(party: str, exc: AkapError):
        record.status = "failed"
        record.error = str(exc)
        record.error_kind = type(exc).__name__
        record.rejected_by = party

    def transmit(name: str, sender: str, receiver: str, msg: Message) -> bytes | None:
        """Send one frame; apply drop/modify; return what the receiver gets."""
        payload = encode_message(msg)
        entry = world._send(sender, receiver, CH_PUBLIC, payload)
        record.seqs[name] = entry.seq
        record.msgs[name] = msg
        delivered: bytes | None = payload
        for action in plan:
            if action.target != name:
                continue
            if action.kind == "drop":
                world.transcript.mark_event(world.clock, "drop", target=name)
                delivered = None
            elif action.kind == "modify":
                delivered = _flip_field_bit(delivered, msg, action.field, action.bit)
                world.transcript.mark_event(
                    world.clock, "modify", target=name, field=action.field, bit=action.bit
                )
        return delivered

    def run_replays(name: str) -> None:
        for action in plan:
            if action.kind == "replay" and action.target == name:
                outcome = adversary_act(world, AdversaryAction("replay", target=record.seqs[name]))
                record.replays[name] = outcome

    outcomes: dict[str, SessionOutcome | None] = {"user": None, "gateway": None, "sensor": None}

    # M1: user logs in against the card and challenges the gateway.
    try:
        m1, user_session = user_login(
            account.cred, account.card, world.rng, world.clock, world.proto
        )
    except AkapError as exc:
        step_fail("user", exc)
        raise
    record.ephemerals["r_u"] = user_session.r_u
    world._user_session = (user_id, user_session)
    delivered = transmit("m1", user_label, "gateway", m1)
    if delivered is None:
        record.status, record.awaiting = "stalled", "gateway"
        return SessionResult(None, None, None, record)
    try:
        m2, gw_session = gateway_process_m1(
            world.gateway, decode_message(delivered), world.rng, world.clock, world.proto
        )
    except AkapError as exc:
        step_fail("gateway", exc)
        raise
    world._gateway_session = gw_session
    record.sid = gw_session.sid
    record.ephemerals["r_g"] = gw_session.r_g
    run_replays("m1")

    # M2: gateway forwards the challenge to the routed sensor.
    sensor = world.sensors.get(gw_session.sid)
    if sensor is None:
        exc = UnknownIdentity(f"sensor {gw_session.sid!r} has no live state in this world")
        step_fail("world", exc)
        raise exc
    sensor_label = f"sensor:{gw_session.sid}"
    delivered = transmit("m2", "gateway", sensor_label, m2)
    if delivered is None:
        record.status, record.awaiting = "stalled", "sensor"
        return SessionResult(None, None, None, record)
    draw_mark = world.rng.counter
    try:
        m3, sensor_outcome = sensor_process_m2(
            sensor, decode_message(delivered), world.rng, world.clock, world.proto
        )
    except AkapError as exc:
        step_fail("sensor", exc)
        raise
    record.ephemerals["r_s"] = world.rng.block_at(draw_mark)
    record.sk["sensor"] = sensor_outcome.sk
    sensor_outcome.transcript_ids = [record.seqs["m1"], record.seqs["m2"]]
    outcomes["sensor"] = sensor_outcome
    run_replays("m2")

    # M3: sensor answers; gateway checks and closes its side.
    delivered = transmit("m3", sensor_label, "gateway", m3)
    if delivered is None:
        record.status, record.awaiting = "stalled", "gateway"
        return SessionResult(None, None, outcomes["sensor"], record)
    try:
        m4, gateway_outcome = gateway_process_m3(
            world.gateway, gw_session, decode_message(delivered), world.clock, world.proto
        )
    except AkapError as exc:
        step_fail("gateway", exc)
        raise
    record.sk["gateway"] = gateway_outcome.sk
    gateway_outcome.transcript_ids = [record.seqs[n] for n in ("m1", "m2", "m3")]
    outcomes["gateway"] = gateway_outcome
    world._gateway_session = None          # consumed; later M3s find no session
    run_replays("m3")

    # M4: gateway confirms back to the user.
    delivered = transmit("m4", "gateway", user_label, m4)
    if delivered is None:
        record.status, record.awaiting = "stalled", "user"
        return SessionResult(None, outcomes["gateway"], outcomes["sensor"], record)
    try:
        user_outcome = user_process_m4(
            user_session, account.card, decode_message(delivered), world.clock, world.proto
        )
    except AkapError as exc:
        step_fail("user", exc)
        raise
    record.sk["user"] = user_outcome.sk
    user_outcome.transcript_ids = [record.seqs["m1"], record.seqs["m4"]]
    outcomes["user"] = user_outcome
    gateway_outcome.transcript_ids.append(record.seqs["m4"])
    world._user_session = None
    run_replays("m4")

    record.status = "ok"
    return SessionResult(user_outcome, outcomes["gateway"], outcomes["sensor"], record)


# --- adversary surface ------------------------------------------------------

def adversary_view(world: World) -> list[TranscriptEntry]:
    """Everything the adversary can see: public-channel frames only."""
    return [e for e in world.transcript.entries if e.channel == CH_PUBLIC]


def _party_of(receiver: str) -> tuple[str, str | None]:
    if receiver == "gateway":
        return "gateway", None
    kind, _, name = receiver.partition(":")
    if kind in ("sensor", "user") and name:
        return kind, name
    raise ConfigError(f"unknown receiver {receiver!r}")


def _deliver_adversarial(world: World, receiver: str, payload: bytes) -> DeliveryOutcome:
    """Hand an adversary-chosen frame to a receiver and report its reaction."""
    tick = world.clock
    kind, name = _party_of(receiver)
    try:
        msg = decode_message(payload)
        ts = message_timestamp(msg)
        if ts is None:
            raise DecodeError(
                f"{message_name(msg)} frames are not accepted from the public channel"
            )
        # Receivers check freshness before anything else.
        if abs(world.clock - ts) > world.proto.delta:
            raise StaleTimestamp("T", receiver, ts, world.clock, world.proto.delta)
        if isinstance(msg, M1):
            if kind != "gateway":
                raise DecodeError(f"m1 delivered to {receiver}, not a gateway")
            gateway_process_m1(world.gateway, msg, world.rng, world.clock, world.proto)
            detail = "m2 generated (response not forwarded by the adversary)"
        elif isinstance(msg, M2):
            if kind != "sensor" or name not in world.sensors:
                raise DecodeError(f"m2 delivered to {receiver}, not a live sensor")
            sensor_process_m2(world.sensors[name], msg, world.rng, world.clock, world.proto)
            detail = "m3 generated (response not forwarded by the adversary)"
        elif isinstance(msg, M3):
            if kind != "gateway":
                raise DecodeError(f"m3 delivered to {receiver}, not a gateway")
            if world._gateway_session is None:
                raise NoActiveSession("gateway has no session awaiting an m3")
            gateway_process_m3(
                world.gateway, world._gateway_session, msg, world.clock, world.proto
            )
            detail = "m4 generated (response not forwarded by the adversary)"
        elif isinstance(msg, M4):
            if kind != "user" or name not in world.users:
                raise DecodeError(f"m4 delivered to {receiver}, not a live user")
            if world._user_session is None or world._user_session[0] != name:
                raise NoActiveSession(f"user {name!r} has no session awaiting an m4")
            card = world.users[name].card
            user_process_m4(world._user_session[1], card, msg, world.clock, world.proto)
            detail = "session confirmation accepted"
        else:
            raise DecodeError(f"{message_name(msg)} frames are not deliverable")
    except AkapError as exc:
        return DeliveryOutcome(receiver, _behavior_for(exc), str(exc), tick)
    return DeliveryOutcome(receiver, "accepted", detail, tick)


def adversary_act(world: World, action: AdversaryAction):
    """Apply one adversary action to the world.

    observe -> returns the public view. drop/modify -> queued for the next
    session run. replay (by seq) / inject -> delivered immediately, returns
    the receiver's DeliveryOutcome.
    """
    if action.kind == "observe":
        world.transcript.mark_event(world.clock, "observe")
        return adversary_view(world)
    if action.kind in ("drop", "modify"):
        world.pending_actions.append(action)
        return None
    if action.kind == "replay":
        if not isinstance(action.target, int):
            raise ConfigError("standalone replay targets a transcript seq (int)")
        try:
            entry = world.transcript.entries[action.target]
        except IndexError:
            raise ConfigError(f"no transcript entry with seq {action.target}") from None
        if entry.channel != CH_PUBLIC:
            raise ConfigError("the adversary cannot replay secure-channel frames")
        receiver = action.receiver or entry.receiver
        world.transcript.mark_event(world.clock, "replay", target=entry.seq, receiver=receiver)
        world._send("adversary", receiver, CH_PUBLIC, entry.payload)
        return _deliver_adversarial(world, receiver, entry.payload)
    # inject
    world.transcript.mark_event(world.clock, "inject", receiver=action.receiver)
    world._send("adversary", action.receiver, CH_PUBLIC, action.payload)
    return _deliver_adversarial(world, action.receiver, action.payload)


# --- leak oracles -----------------------------------------------------------

def leak_ephemerals(world: World, session_index: int = -1) -> dict[str, Block]:
    """Hand the adversary the three session nonces (compromise assumption)."""
    if not world.sessions:
        raise LeakUnavailable("no session has run in this world")
    record = world.sessions[session_index]
    missing = [k for k in ("r_u", "r_g", "r_s") if k not in record.ephemerals]
    if missing:
        raise LeakUnavailable(
            f"session has not generated {', '.join(missing)} yet"
        )
    world.transcript.mark_event(
        world.clock, "leak-ephemerals", session=session_index % len(world.sessions)
    )
    return {k: record.ephemerals[k] for k in ("r_u", "r_g", "r_s")}


def dump_smart_card(world: World, user_id: str | None = None) -> SmartCardStore:
    """Hand the adversary a user's full card contents (compromise assumption)."""
    if user_id is None:
        if len(world.users) != 1:
            raise ConfigError("user_id required when the world has multiple users")
        user_id = next(iter(world.users))
    account = world.users.get(user_id)
    if account is None or account.card is None:
        raise UnknownIdentity(f"user {user_id!r} has no card in this world")
    world.transcript.mark_event(world.clock, "card-dump", user=user_id)
    return account.card


def ground_truth_sk(world: World, session_index: int = -1) -> Block:
    """The honest session key, straight from party state (for adjudication)."""
    if not world.sessions:
        raise LeakUnavailable("no session has run in this world")
    record = world.sessions[session_index]
    keys = set(record.sk.values())
    if not keys:
        raise LeakUnavailable("no party completed key derivation in that session")
    if len(keys) != 1:
        raise AkapError("parties disagree on the session key; no single ground truth")
    return next(iter(keys))


def ground_truth_hid(world: World, user_id: str) -> Block:
    """The registered masked identity for a user (for adjudication)."""
    account = world.users.get(user_id)
    if account is None or account.hid is None:
        raise UnknownIdentity(f"user {user_id!r} has no registration record here")
    return account.hid
