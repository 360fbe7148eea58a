"""On-disk persistence for party state.

Everything is stored as plain JSON with lowercase hex for byte fields,
one top-level envelope {"fmt", "v", "kind", "body"}. These files hold
long-term secrets in the clear (that is the point of the smart-card and
stolen-verifier experiments), so writing them requires an explicit
opt-in; refusing by default keeps a casual run from scattering keys
around the filesystem.

Serialization is canonical: sorted keys, two-space indent, trailing
newline. Byte-identical state files for byte-identical states.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .blocks import BLOCK_SIZE, Block, HelperData
from .errors import (
    PlaintextStateRefused,
    StateFormatError,
    StateKindError,
    StateVersionError,
)
from .pke import PkeKeyPair
from .protocol import GatewayState, SensorState, SmartCardStore

STATE_FMT = "akap-state"
STATE_VERSION = 1
KINDS = ("gateway", "sensor", "card")


def _gateway_body(gw: GatewayState) -> dict:
    return {
        "gj": gw.gj.hex(),
        "user_table": {hid.hex(): d1.hex() for hid, d1 in gw.user_table.items()},
        "sensor_table": {sid: pid.hex() for sid, pid in gw.sensor_table.items()},
        "routing": {hid.hex(): sid for hid, sid in gw.routing.items()},
    }


def _sensor_body(sn: SensorState) -> dict:
    return {
        "sid": sn.sid,
        "sg": sn.sg.hex(),
        "l": sn.l.hex(),
        "pid": sn.pid.hex(),
        "public_key": sn.keys.public_key.hex(),
        "private_key": sn.keys.private_key.hex(),
    }


def _card_body(card: SmartCardStore) -> dict:
    return {
        "d1": card.d1.hex(),
        "d3": card.d3.hex(),
        "d4": card.d4.hex(),
        "omega": card.omega.hex(),
        "m": card.m.hex(),
        "tau": card.tau.hex(),
    }


_BUILDERS = {
    GatewayState: ("gateway", _gateway_body),
    SensorState: ("sensor", _sensor_body),
    SmartCardStore: ("card", _card_body),
}


def save_state(path: str | Path, state: Any, allow_plaintext: bool = False) -> None:
    if not allow_plaintext:
        raise PlaintextStateRefused(
            "state files hold long-term secrets in the clear; pass allow_plaintext=True"
        )
    try:
        kind, builder = _BUILDERS[type(state)]
    except KeyError:
        raise StateKindError(f"cannot persist objects of type {type(state).__name__}")
    envelope = {"fmt": STATE_FMT, "v": STATE_VERSION, "kind": kind, "body": builder(state)}
    Path(path).write_text(json.dumps(envelope, sort_keys=True, indent=2) + "\n")


def _bytes_field(body: dict, name: str, size: int | None) -> bytes:
    raw = body.get(name)
    if not isinstance(raw, str):
        raise StateFormatError(f"field {name!r} missing or not a hex string")
    try:
        value = bytes.fromhex(raw)
    except ValueError:
        raise StateFormatError(f"field {name!r} is not valid hex")
    if size is not None and len(value) != size:
        raise StateFormatError(f"field {name!r} must be {size} bytes, got {len(value)}")
    return value


def _str_field(body: dict, name: str) -> str:
    raw = body.get(name)
    if not isinstance(raw, str) or not raw:
        raise StateFormatError(f"field {name!r} missing or empty")
    return raw


def _block_field(body: dict, name: str) -> Block:
    return Block(_bytes_field(body, name, BLOCK_SIZE))


def _load_gateway(body: dict) -> GatewayState:
    for table in ("user_table", "sensor_table", "routing"):
        if not isinstance(body.get(table), dict):
            raise StateFormatError(f"field {table!r} missing or not an object")
    try:
        user_table = {
            Block(bytes.fromhex(k)): Block(bytes.fromhex(v))
            for k, v in body["user_table"].items()
        }
        sensor_table = {k: Block(bytes.fromhex(v)) for k, v in body["sensor_table"].items()}
        routing = {Block(bytes.fromhex(k)): v for k, v in body["routing"].items()}
    except (ValueError, TypeError) as exc:
        raise StateFormatError(f"malformed gateway table entry: {exc}")
    for sid in routing.values():
        if not isinstance(sid, str):
            raise StateFormatError("routing values must be sensor id strings")
    return GatewayState(
        gj=_block_field(body, "gj"),
        user_table=user_table,
        sensor_table=sensor_table,
        routing=routing,
    )


def _load_sensor(body: dict) -> SensorState:
    return SensorState(
        sid=_str_field(body, "sid"),
        sg=_block_field(body, "sg"),
        l=_bytes_field(body, "l", None),
        pid=_block_field(body, "pid"),
        keys=PkeKeyPair(
            public_key=_bytes_field(body, "public_key", 65),
            private_key=_bytes_field(body, "private_key", BLOCK_SIZE),
        ),
    )


def _load_card(body: dict) -> SmartCardStore:
    return SmartCardStore(
        d1=_block_field(body, "d1"),
        d3=_block_field(body, "d3"),
        d4=_block_field(body, "d4"),
        omega=_block_field(body, "omega"),
        m=_block_field(body, "m"),
        tau=HelperData(_bytes_field(body, "tau", HelperData.SIZE)),
    )


_LOADERS = {"gateway": _load_gateway, "sensor": _load_sensor, "card": _load_card}


def load_state(path: str | Path, kind: str) -> Any:
    if kind not in KINDS:
        raise StateKindError(f"unknown state kind {kind!r}")
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError:
        raise StateFormatError(f"{path}: not a text file")
    try:
        envelope = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFormatError(f"{path}: invalid JSON: {exc}")
    if not isinstance(envelope, dict) or envelope.get("fmt") != STATE_FMT:
        raise StateFormatError(f"{path}: not a state file")
    if envelope.get("v") != STATE_VERSION:
        raise StateVersionError(
            f"{path}: unsupported state version {envelope.get('v')!r}"
        )
    if envelope.get("kind") != kind:
        raise StateKindError(
            f"{path}: expected {kind!r} state, found {envelope.get('kind')!r}"
        )
    body = envelope.get("body")
    if not isinstance(body, dict):
        raise StateFormatError(f"{path}: body missing or not an object")
    return _LOADERS[kind](body)
