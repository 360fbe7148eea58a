"""Public-key wrap/unwrap used once per sensor enrollment.

The registration channel carries one short secret (the sensor's pseudo
identity) under the sensor's public key. The contract is round-trip
fidelity for plaintexts up to 64 bytes plus an explicit failure on wrong
keys or tampering; cryptographic strength is not what this lab measures.

The scheme is an ECIES-style hybrid over P-256: a key pair is derived
from the seeded stream (so worlds stay reproducible), the ephemeral
scalar is derived by hashing (recipient key, message) which makes
encryption deterministic, and an appended hash tag turns any mismatch
into PkeDecryptionError instead of silent garbage. Internals pin SHA-256
independently of the protocol's configured hash; this is transport
plumbing, not protocol algebra.
"""

from __future__ import annotations

from dataclasses import dataclass

from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric import ec

from .blocks import h, xor
from .errors import PkeDecryptionError
from .rng import SeededRng

MAX_PLAINTEXT = 64

_CURVE = ec.SECP256R1()
# Order of the P-256 base point; scalars live in [1, order-1].
_ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551

_POINT_LEN = 65          # X9.62 uncompressed
_TAG_LEN = 32


@dataclass(frozen=True)
class PkeKeyPair:
    public_key: bytes    # X9.62 uncompressed point, 65 bytes
    private_key: bytes   # scalar, 32 bytes big-endian


def _scalar_to_key(scalar: int) -> ec.EllipticCurvePrivateKey:
    """Map an arbitrary 256-bit draw onto a valid scalar in [1, order-1]."""
    return ec.derive_private_key(scalar % (_ORDER - 1) + 1, _CURVE)


def _load_private(data: bytes) -> ec.EllipticCurvePrivateKey:
    """Load a stored scalar verbatim (it was reduced at keygen time)."""
    value = int.from_bytes(data, "big")
    if not 1 <= value < _ORDER:
        raise PkeDecryptionError("private scalar out of range")
    return ec.derive_private_key(value, _CURVE)


def _public_bytes(key: ec.EllipticCurvePrivateKey) -> bytes:
    return key.public_key().public_bytes(
        serialization.Encoding.X962, serialization.PublicFormat.UncompressedPoint
    )


def _load_point(data: bytes) -> ec.EllipticCurvePublicKey:
    try:
        return ec.EllipticCurvePublicKey.from_encoded_point(_CURVE, data)
    except ValueError as exc:
        raise PkeDecryptionError(f"invalid public point: {exc}") from None


def _keystream(shared: bytes, n: int) -> bytes:
    out = bytearray()
    counter = 0
    while len(out) < n:
        out.extend(h("PKE-KS", counter, shared))
        counter += 1
    return bytes(out[:n])


def pke_keygen(rng: SeededRng) -> PkeKeyPair:
    """Derive a key pair from the seeded stream (one block consumed)."""
    scalar = int.from_bytes(rng.next_block(), "big")
    key = _scalar_to_key(scalar)
    private = key.private_numbers().private_value.to_bytes(32, "big")
    return PkeKeyPair(public_key=_public_bytes(key), private_key=private)


def pke_encrypt(public_key: bytes, m: bytes) -> bytes:
    """Encrypt m (<= 64 bytes) to the holder of public_key."""
    if len(m) > MAX_PLAINTEXT:
        raise ValueError(f"plaintext too long: {len(m)} > {MAX_PLAINTEXT} bytes")
    recipient = _load_point(public_key)
    # Deterministic ephemeral: same (key, message) -> same ciphertext.
    eph_scalar = int.from_bytes(h("PKE-EPH", public_key, m), "big")
    eph = _scalar_to_key(eph_scalar)
    shared = eph.exchange(ec.ECDH(), recipient)
    body = xor(m, _keystream(shared, len(m)))
    tag = h("PKE-TAG", shared, m)
    return _public_bytes(eph) + len(body).to_bytes(2, "big") + body + tag


def pke_decrypt(private_key: bytes, c: bytes) -> bytes:
    """Invert pke_encrypt; raises PkeDecryptionError on any mismatch."""
    if len(c) < _POINT_LEN + 2 + _TAG_LEN:
        raise PkeDecryptionError("ciphertext too short")
    eph_point = _load_point(c[:_POINT_LEN])
    body_len = int.from_bytes(c[_POINT_LEN : _POINT_LEN + 2], "big")
    rest = c[_POINT_LEN + 2 :]
    if len(rest) != body_len + _TAG_LEN:
        raise PkeDecryptionError("ciphertext length field does not match payload")
    body, tag = rest[:body_len], rest[body_len:]
    key = _load_private(private_key)
    shared = key.exchange(ec.ECDH(), eph_point)
    m = xor(body, _keystream(shared, body_len))
    if h("PKE-TAG", shared, m) != tag:
        raise PkeDecryptionError("integrity tag mismatch (wrong key or tampering)")
    return m
