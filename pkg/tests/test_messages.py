"""Wire format: golden frame bytes, round-trips, decode errors, field offsets."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akap.blocks import Block
from akap.errors import ConfigError, DecodeError
from akap.messages import (
    M1,
    M2,
    M3,
    M4,
    SensorRegRequest,
    SensorRegResponse,
    UserRegRequest,
    UserRegResponse,
    TAG_M1,
    TAG_M2,
    TAG_M3,
    TAG_M4,
    TAG_SENSOR_REG_REQUEST,
    block_field_offset,
    block_fields,
    decode_message,
    encode_message,
    message_name,
    message_tag,
    message_timestamp,
)

blocks = st.binary(min_size=32, max_size=32).map(Block)
timestamps = st.integers(min_value=0, max_value=2**64 - 1)


def _b(fill: int) -> Block:
    return Block(bytes([fill]) * 32)


def test_m1_golden_bytes():
    # layout pinned by hand: tag byte, three 32-byte blocks, 8-byte timestamp
    m = M1(hid=_b(0xAA), b2=_b(0xBB), x_ug=_b(0xCC), t1=0x0102030405060708)
    wire = encode_message(m)
    expect = (
        bytes([0x01])
        + b"\xaa" * 32
        + b"\xbb" * 32
        + b"\xcc" * 32
        + bytes([1, 2, 3, 4, 5, 6, 7, 8])
    )
    assert wire == expect
    assert len(wire) == 1 + 3 * 32 + 8


def test_sensor_reg_request_golden_bytes():
    m = SensorRegRequest(sid="ab", public_key=b"\x04\x05")
    assert encode_message(m) == bytes([0x12, 0, 2]) + b"ab" + bytes([0, 2, 4, 5])


@settings(max_examples=40, deadline=None)
@given(blocks, blocks, blocks, timestamps)
def test_m1_round_trip(hid, b2, x_ug, t1):
    m = M1(hid=hid, b2=b2, x_ug=x_ug, t1=t1)
    assert decode_message(encode_message(m)) == m


@settings(max_examples=40, deadline=None)
@given(blocks, blocks, blocks, blocks, timestamps)
def test_m2_round_trip(b4, b5, b6, x_gs, t2):
    m = M2(b4=b4, b5=b5, b6=b6, x_gs=x_gs, t2=t2)
    assert decode_message(encode_message(m)) == m


@settings(max_examples=40, deadline=None)
@given(blocks, blocks, blocks, timestamps)
def test_m3_round_trip(b8, x_sg, x_su, t3):
    m = M3(b8=b8, x_sg=x_sg, x_su=x_su, t3=t3)
    assert decode_message(encode_message(m)) == m


@settings(max_examples=40, deadline=None)
@given(blocks, blocks, blocks, blocks, blocks, timestamps)
def test_m4_round_trip(b5, b10, b11, x_gu, x_su, t4):
    m = M4(b5=b5, b10=b10, b11=b11, x_gu=x_gu, x_su=x_su, t4=t4)
    assert decode_message(encode_message(m)) == m


@settings(max_examples=40, deadline=None)
@given(blocks, blocks, blocks)
def test_reg_frames_round_trip(a, b, c):
    for m in (
        UserRegRequest(hid=a, hpw=b, n=c),
        UserRegResponse(d1=a, d3=b, d4=c),
        SensorRegResponse(sg=a, l=bytes(b)[:17]),
    ):
        assert decode_message(encode_message(m)) == m


@settings(max_examples=40, deadline=None)
@given(st.text(max_size=40), st.binary(max_size=80))
def test_sensor_reg_request_round_trip(sid, pk):
    m = SensorRegRequest(sid=sid, public_key=pk)
    assert decode_message(encode_message(m)) == m


def test_decode_errors():
    with pytest.raises(DecodeError):
        decode_message(b"")
    with pytest.raises(DecodeError):
        decode_message(b"\xff" + bytes(40))  # unknown tag
    wire = encode_message(M1(hid=_b(1), b2=_b(2), x_ug=_b(3), t1=9))
    with pytest.raises(DecodeError):
        decode_message(wire[:-1])  # truncated timestamp
    with pytest.raises(DecodeError):
        decode_message(wire[:40])  # truncated block
    with pytest.raises(DecodeError):
        decode_message(wire + b"\x00")  # trailing byte
    bad_sid = bytes([TAG_SENSOR_REG_REQUEST, 0, 2, 0xFF, 0xFE, 0, 0])
    with pytest.raises(DecodeError):
        decode_message(bad_sid)  # sid bytes are not UTF-8


def test_encode_rejects_non_messages_and_bad_timestamps():
    with pytest.raises(TypeError):
        encode_message(object())
    with pytest.raises(ValueError):
        encode_message(M1(hid=_b(0), b2=_b(0), x_ug=_b(0), t1=-1))
    with pytest.raises(ValueError):
        encode_message(M1(hid=_b(0), b2=_b(0), x_ug=_b(0), t1=1 << 64))


def test_names_tags_timestamps():
    m2 = M2(b4=_b(1), b5=_b(2), b6=_b(3), x_gs=_b(4), t2=77)
    assert message_tag(m2) == TAG_M2
    assert message_name(m2) == "m2"
    assert message_name(TAG_M3) == "m3"
    assert message_name(0x3F) == "0x3f"
    assert message_timestamp(m2) == 77
    assert message_timestamp(UserRegResponse(d1=_b(0), d3=_b(0), d4=_b(0))) is None


def test_block_fields_in_wire_order():
    assert block_fields(TAG_M1) == ["hid", "b2", "x_ug"]
    assert block_fields(TAG_M2) == ["b4", "b5", "b6", "x_gs"]
    assert block_fields(TAG_M3) == ["b8", "x_sg", "x_su"]
    assert block_fields(TAG_M4) == ["b5", "b10", "b11", "x_gu", "x_su"]


def test_block_field_offset_flips_only_that_field():
    m = M4(b5=_b(1), b10=_b(2), b11=_b(3), x_gu=_b(4), x_su=_b(5), t4=12)
    wire = bytearray(encode_message(m))
    off = block_field_offset(m, "b11")
    wire[off] ^= 0x80
    got = decode_message(bytes(wire))
    assert got.b11 != m.b11
    assert (got.b5, got.b10, got.x_gu, got.x_su, got.t4) == (
        m.b5,
        m.b10,
        m.x_gu,
        m.x_su,
        m.t4,
    )


def test_block_field_offset_errors():
    m1 = M1(hid=_b(0), b2=_b(0), x_ug=_b(0), t1=0)
    with pytest.raises(ConfigError):
        block_field_offset(m1, "t1")  # not a Block field
    with pytest.raises(ConfigError):
        block_field_offset(m1, "nope")
    with pytest.raises(ConfigError):
        block_field_offset(UserRegRequest(hid=_b(0), hpw=_b(0), n=_b(0)), "hid")
