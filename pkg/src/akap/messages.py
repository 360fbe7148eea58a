"""Protocol messages and their bit-exact wire frames.

Every frame is one tag byte followed by the message fields in protocol
order. Blocks travel as their 32 raw bytes, timestamps as 8-byte
big-endian integers, and variable-width fields (sensor id, wrapped
pseudo identity, public key) carry a 2-byte big-endian length prefix.
Decoding consumes the frame exactly; trailing bytes are an error.
"""

from __future__ import annotations

from dataclasses import dataclass

from .blocks import Block
from .errors import ConfigError, DecodeError

TAG_M1 = 0x01
TAG_M2 = 0x02
TAG_M3 = 0x03
TAG_M4 = 0x04
TAG_USER_REG_REQUEST = 0x10
TAG_USER_REG_RESPONSE = 0x11
TAG_SENSOR_REG_REQUEST = 0x12
TAG_SENSOR_REG_RESPONSE = 0x13


@dataclass(frozen=True)
class UserRegRequest:
    """Secure channel, user -> gateway: masked identity, password, and salt."""

    hid: Block
    hpw: Block
    n: Block


@dataclass(frozen=True)
class UserRegResponse:
    """Secure channel, gateway -> user: the card material."""

    d1: Block
    d3: Block
    d4: Block


@dataclass(frozen=True)
class SensorRegRequest:
    """Secure channel, sensor -> gateway: id plus the sensor's public key."""

    sid: str
    public_key: bytes


@dataclass(frozen=True)
class SensorRegResponse:
    """Secure channel, gateway -> sensor: shared secret and wrapped pseudo id."""

    sg: Block
    l: bytes


@dataclass(frozen=True)
class M1:
    """Login request, user -> gateway."""

    hid: Block
    b2: Block
    x_ug: Block
    t1: int


@dataclass(frozen=True)
class M2:
    """Forwarded challenge, gateway -> sensor."""

    b4: Block
    b5: Block
    b6: Block
    x_gs: Block
    t2: int


@dataclass(frozen=True)
class M3:
    """Sensor response, sensor -> gateway."""

    b8: Block
    x_sg: Block
    x_su: Block
    t3: int


@dataclass(frozen=True)
class M4:
    """Final confirmation, gateway -> user; x_su is forwarded verbatim."""

    b5: Block
    b10: Block
    b11: Block
    x_gu: Block
    x_su: Block
    t4: int


# Field kinds: "block" = 32 raw bytes, "ts" = 8-byte big-endian int,
# "str" = UTF-8 with 2-byte length prefix, "var" = raw with 2-byte prefix.
_LAYOUT = {
    TAG_M1: (M1, (("hid", "block"), ("b2", "block"), ("x_ug", "block"), ("t1", "ts"))),
    TAG_M2: (
        M2,
        (
            ("b4", "block"),
            ("b5", "block"),
            ("b6", "block"),
            ("x_gs", "block"),
            ("t2", "ts"),
        ),
    ),
    TAG_M3: (
        M3,
        (("b8", "block"), ("x_sg", "block"), ("x_su", "block"), ("t3", "ts")),
    ),
    TAG_M4: (
        M4,
        (
            ("b5", "block"),
            ("b10", "block"),
            ("b11", "block"),
            ("x_gu", "block"),
            ("x_su", "block"),
            ("t4", "ts"),
        ),
    ),
    TAG_USER_REG_REQUEST: (
        UserRegRequest,
        (("hid", "block"), ("hpw", "block"), ("n", "block")),
    ),
    TAG_USER_REG_RESPONSE: (
        UserRegResponse,
        (("d1", "block"), ("d3", "block"), ("d4", "block")),
    ),
    TAG_SENSOR_REG_REQUEST: (
        SensorRegRequest,
        (("sid", "str"), ("public_key", "var")),
    ),
    TAG_SENSOR_REG_RESPONSE: (SensorRegResponse, (("sg", "block"), ("l", "var"))),
}

_TAG_BY_TYPE = {cls: tag for tag, (cls, _) in _LAYOUT.items()}

Message = (
    UserRegRequest
    | UserRegResponse
    | SensorRegRequest
    | SensorRegResponse
    | M1
    | M2
    | M3
    | M4
)


def message_tag(msg: Message) -> int:
    return _TAG_BY_TYPE[type(msg)]


def message_name(tag_or_msg) -> str:
    """Printable frame name, e.g. 'm1' or 'user-reg-request'."""
    tag = tag_or_msg if isinstance(tag_or_msg, int) else message_tag(tag_or_msg)
    names = {
        TAG_M1: "m1",
        TAG_M2: "m2",
        TAG_M3: "m3",
        TAG_M4: "m4",
        TAG_USER_REG_REQUEST: "user-reg-request",
        TAG_USER_REG_RESPONSE: "user-reg-response",
        TAG_SENSOR_REG_REQUEST: "sensor-reg-request",
        TAG_SENSOR_REG_RESPONSE: "sensor-reg-response",
    }
    return names.get(tag, f"0x{tag:02x}")


def message_timestamp(msg: Message) -> int | None:
    """The frame's timestamp field, if it carries one."""
    for name, kind in _LAYOUT[message_tag(msg)][1]:
        if kind == "ts":
            return getattr(msg, name)
    return None


def encode_message(msg: Message) -> bytes:
    tag = _TAG_BY_TYPE.get(type(msg))
    if tag is None:
        raise TypeError(f"not a wire message: {type(msg).__name__}")
    out = bytearray([tag])
    for name, kind in _LAYOUT[tag][1]:
        value = getattr(msg, name)
        if kind == "block":
            out += Block(value)
        elif kind == "ts":
            if not 0 <= value < 1 << 64:
                raise ValueError(f"timestamp out of range: {value}")
            out += value.to_bytes(8, "big")
        else:
            raw = value.encode("utf-8") if kind == "str" else bytes(value)
            if len(raw) >= 1 << 16:
                raise ValueError(f"field {name} too long for 2-byte length prefix")
            out += len(raw).to_bytes(2, "big") + raw
    return bytes(out)


def decode_message(data: bytes) -> Message:
    if not data:
        raise DecodeError("empty frame")
    entry = _LAYOUT.get(data[0])
    if entry is None:
        raise DecodeError(f"unknown frame tag 0x{data[0]:02x}")
    cls, layout = entry
    pos = 1
    values = {}
    for name, kind in layout:
        if kind == "block":
            chunk = data[pos : pos + Block.SIZE]
            if len(chunk) != Block.SIZE:
                raise DecodeError(f"truncated frame: field {name}")
            values[name] = Block(chunk)
            pos += Block.SIZE
        elif kind == "ts":
            chunk = data[pos : pos + 8]
            if len(chunk) != 8:
                raise DecodeError(f"truncated frame: field {name}")
            values[name] = int.from_bytes(chunk, "big")
            pos += 8
        else:
            if len(data) < pos + 2:
                raise DecodeError(f"truncated frame: length of {name}")
            length = int.from_bytes(data[pos : pos + 2], "big")
            pos += 2
            chunk = data[pos : pos + length]
            if len(chunk) != length:
                raise DecodeError(f"truncated frame: field {name}")
            if kind == "str":
                try:
                    values[name] = chunk.decode("utf-8")
                except UnicodeDecodeError as exc:
                    raise DecodeError(f"field {name} is not valid UTF-8: {exc}") from None
            else:
                values[name] = bytes(chunk)
            pos += length
    if pos != len(data):
        raise DecodeError(f"{len(data) - pos} trailing bytes after frame")
    return cls(**values)


def block_field_offset(msg: Message, field_name: str) -> int:
    """Byte offset of a Block field inside the encoded frame.

    Only defined for the fixed-layout authentication frames (M1..M4);
    used by the tamper tooling to flip a chosen bit of a chosen field.
    """
    tag = message_tag(msg)
    if tag not in (TAG_M1, TAG_M2, TAG_M3, TAG_M4):
        raise ConfigError("field offsets are defined for m1..m4 frames only")
    pos = 1
    for name, kind in _LAYOUT[tag][1]:
        if name == field_name:
            if kind != "block":
                raise ConfigError(f"field {field_name} is not a Block; pick one of "
                                  f"{', '.join(block_fields(tag))}")
            return pos
        pos += Block.SIZE if kind == "block" else 8
    raise ConfigError(f"{type(msg).__name__} has no field {field_name}")


def block_fields(msg_or_tag) -> list[str]:
    """Names of the Block-typed fields of a frame, in wire order."""
    tag = msg_or_tag if isinstance(msg_or_tag, int) else message_tag(msg_or_tag)
    return [name for name, kind in _LAYOUT[tag][1] if kind == "block"]
