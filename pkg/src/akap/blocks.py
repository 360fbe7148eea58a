"""Fixed-width byte algebra underpinning the whole scheme.

Everything secret or derived in the protocol is a 32-byte Block. Blocks
form a group under XOR, and the hash operation h() maps any ordered list
of parts (blocks, identities, timestamps) onto a fresh Block. Canonical
encodings are pinned here so that every party, the wire codec, and the
attack tooling agree byte-for-byte:

  Block      -> its 32 raw bytes
  identity   -> raw UTF-8 bytes (length-prefixed only on the wire)
  timestamp  -> 8-byte big-endian unsigned integer
"""

from __future__ import annotations

import hashlib
from typing import Callable, Union

from .errors import ConfigError

BLOCK_SIZE = 32
DEFAULT_HASH = "sha256"

# Only digests that are exactly one Block wide keep the XOR algebra closed.
_HASH_CTORS = {
    "sha256": hashlib.sha256,
    "sha3-256": hashlib.sha3_256,
    "blake2s": hashlib.blake2s,
}

Part = Union[bytes, str, int]


def hash_names() -> list[str]:
    """Names accepted by h(alg=...) and the --hash flag."""
    return sorted(_HASH_CTORS)


def _ctor(alg: str):
    try:
        return _HASH_CTORS[alg]
    except KeyError:
        raise ConfigError(
            f"unknown hash {alg!r}; choose one of {', '.join(hash_names())}"
        ) from None


class FixedBytes(bytes):
    """Immutable byte string with an enforced width and XOR support."""

    SIZE = 0

    def __new__(cls, data: bytes = b""):
        self = super().__new__(cls, data)
        if len(self) != cls.SIZE:
            raise ValueError(
                f"{cls.__name__} must be exactly {cls.SIZE} bytes, got {len(self)}"
            )
        return self

    def __xor__(self, other):
        if not isinstance(other, (bytes, bytearray)):
            return NotImplemented
        if len(other) != len(self):
            raise ValueError(
                f"xor width mismatch: {len(self)} vs {len(other)} bytes"
            )
        return type(self)(
            (int.from_bytes(self, "big") ^ int.from_bytes(other, "big")).to_bytes(
                len(self), "big"
            )
        )

    __rxor__ = __xor__


class Block(FixedBytes):
    SIZE = BLOCK_SIZE


class Sigma(FixedBytes):
    """Stable biometric key derived by the fuzzy extractor (128 bits)."""

    SIZE = 16


class Biometric(FixedBytes):
    """One biometric reading (640 bits)."""

    SIZE = 80


class HelperData(FixedBytes):
    """Public helper string emitted by the fuzzy extractor (640 bits)."""

    SIZE = 80


ZERO_BLOCK = Block(bytes(BLOCK_SIZE))


def xor(a: bytes, b: bytes) -> bytes:
    """XOR two equal-length byte strings (plain bytes in, plain bytes out)."""
    if len(a) != len(b):
        raise ValueError(f"xor width mismatch: {len(a)} vs {len(b)} bytes")
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(
        len(a), "big"
    )


def encode_part(part: Part) -> bytes:
    """Canonical byte encoding of one hash-input part."""
    if isinstance(part, bytes):
        return bytes(part)
    if isinstance(part, str):
        return part.encode("utf-8")
    if isinstance(part, int):
        if part < 0 or part >= 1 << 64:
            raise ValueError(f"timestamp out of range for 8-byte encoding: {part}")
        return part.to_bytes(8, "big")
    raise TypeError(f"cannot encode {type(part).__name__} as a hash part")


def h(*parts: Part, alg: str = DEFAULT_HASH) -> Block:
    """Hash the ordered parts into one Block.

    The input is the raw concatenation of the canonical encodings, so
    h(a, b) == h(ab-joined) by design; tuple boundaries are not framed.
    """
    digest = _ctor(alg)()
    for part in parts:
        digest.update(encode_part(part))
    return Block(digest.digest())


def hasher(alg: str) -> Callable[..., Block]:
    """Bind h() to one configured algorithm (validated eagerly)."""
    _ctor(alg)

    def bound(*parts: Part) -> Block:
        return h(*parts, alg=alg)

    return bound


def canon_block(tag: str, raw: Part, alg: str = DEFAULT_HASH) -> Block:
    """Lift an arbitrary-width value into the Block group.

    Passwords and sensor ids appear in XOR expressions whose other operands
    are Blocks; hashing under a short domain tag gives them a canonical
    32-byte form without colliding across roles.
    """
    return h(tag, raw, alg=alg)


def fingerprint(value: bytes, reveal: bool = False) -> str:
    """Short printable form of a secret Block (first 8 hex chars by default)."""
    return value.hex() if reveal else value.hex()[:8]
