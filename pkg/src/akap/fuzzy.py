"""Code-offset fuzzy extractor over a 5x repetition code.

gen_fuzzy draws a fresh 128-bit key sigma, expands it bitwise into a
640-bit repetition codeword (each key bit written five times), and
publishes tau = codeword XOR reading as helper data. rep_fuzzy XORs a new
reading against tau and majority-decodes each 5-bit group, so up to two
flipped bits per group are corrected and three or more flips in one group
invert exactly that key bit.

Bits are indexed MSB-first: bit 0 is the top bit of byte 0. Key bit j
governs reading bits 5j .. 5j+4.
"""

from __future__ import annotations

from .blocks import Biometric, HelperData, Sigma, xor
from .rng import SeededRng

SIGMA_BITS = Sigma.SIZE * 8          # 128
REPEAT = 5
BIO_BITS = SIGMA_BITS * REPEAT       # 640

_GROUP_MASK = (1 << REPEAT) - 1


def repetition_encode(sigma: Sigma) -> bytes:
    """Expand each sigma bit into a run of five; returns the 80-byte codeword."""
    value = int.from_bytes(sigma, "big")
    word = 0
    for j in range(SIGMA_BITS):
        if (value >> (SIGMA_BITS - 1 - j)) & 1:
            word |= _GROUP_MASK << (BIO_BITS - REPEAT * (j + 1))
    return word.to_bytes(BIO_BITS // 8, "big")


def gen_fuzzy(bio: Biometric, rng: SeededRng) -> tuple[Sigma, HelperData]:
    """Enrollment: derive (sigma, tau) from one reading. tau is public."""
    sigma = Sigma(rng.next_block()[: Sigma.SIZE])
    tau = HelperData(xor(repetition_encode(sigma), bio))
    return sigma, tau


def rep_fuzzy(bio: Biometric, tau: HelperData) -> Sigma:
    """Reproduction: majority-decode tau XOR reading back to sigma."""
    word = int.from_bytes(xor(tau, bio), "big")
    value = 0
    for j in range(SIGMA_BITS):
        group = (word >> (BIO_BITS - REPEAT * (j + 1))) & _GROUP_MASK
        if group.bit_count() * 2 > REPEAT:
            value |= 1 << (SIGMA_BITS - 1 - j)
    return Sigma(value.to_bytes(Sigma.SIZE, "big"))


def flip_bits(bio: Biometric, positions) -> Biometric:
    """Return a copy of the reading with the given MSB-first bit positions flipped."""
    value = int.from_bytes(bio, "big")
    for p in positions:
        if not 0 <= p < BIO_BITS:
            raise ValueError(f"bit position out of range: {p}")
        value ^= 1 << (BIO_BITS - 1 - p)
    return Biometric(value.to_bytes(BIO_BITS // 8, "big"))
