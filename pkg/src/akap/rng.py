"""Deterministic randomness for reproducible worlds.

Every random value in a run is pulled from one SeededRng, so a whole
scenario (registration, sessions, attacks) replays bit-for-bit from a
single 32-byte seed. The stream is counter-based: block i depends only on
(seed, i), never on how earlier draws were sliced up.
"""

from __future__ import annotations

import hashlib

from .blocks import BLOCK_SIZE, Block
from .errors import ConfigError


class SeededRng:
    def __init__(self, seed: bytes):
        if len(seed) != BLOCK_SIZE:
            raise ConfigError(
                f"rng seed must be {BLOCK_SIZE} bytes, got {len(seed)}"
            )
        self._seed = bytes(seed)
        self._counter = 0

    @property
    def seed(self) -> bytes:
        return self._seed

    @property
    def counter(self) -> int:
        """Number of blocks drawn so far."""
        return self._counter

    def block_at(self, index: int) -> Block:
        """Pure lookup of stream block `index`; does not advance the stream."""
        if index < 0:
            raise ValueError("rng block index must be >= 0")
        material = self._seed + index.to_bytes(8, "big")
        return Block(hashlib.sha256(material).digest())

    def next_block(self) -> Block:
        block = self.block_at(self._counter)
        self._counter += 1
        return block

    def next_bytes(self, n: int) -> bytes:
        """Draw n bytes, consuming whole blocks from the stream."""
        if n < 0:
            raise ValueError("byte count must be >= 0")
        out = bytearray()
        while len(out) < n:
            out.extend(self.next_block())
        return bytes(out[:n])
