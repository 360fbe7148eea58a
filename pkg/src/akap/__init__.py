"""Executable model of a gateway-mediated sensor authentication scheme.

Three parties (user, gateway, sensor) agree on a session key over four
messages built from XOR and hashing, after card-based enrollment. The
package models the honest protocol, a simulated adversarial network,
and the two published breaks against the design: session-key recovery
from leaked ephemerals and card-based impersonation. A bounded closure
engine mechanizes "what can the attacker derive" questions.

Everything is deterministic under a caller-supplied seed.
"""

from .blocks import BLOCK_SIZE, Biometric, Block, HelperData, Sigma, h, xor
from .errors import AkapError
from .protocol import ProtoConfig, UserCredentials, derive_sk
from .rng import SeededRng

__version__ = "0.1.0"

__all__ = [
    "AkapError",
    "BLOCK_SIZE",
    "Biometric",
    "Block",
    "HelperData",
    "ProtoConfig",
    "SeededRng",
    "Sigma",
    "UserCredentials",
    "derive_sk",
    "h",
    "xor",
    "__version__",
]
