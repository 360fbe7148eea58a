"""Error taxonomy shared across the package.

Every failure a party or tool can report has its own class so callers can
branch on type instead of parsing messages. The CLI maps these onto its
exit-code contract in one place (cli.py).
"""


class AkapError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AkapError):
    """Invalid configuration: bad seed length, unknown hash, delta < 1, ..."""


class RegistrationRejected(AkapError):
    """The gateway (or world) refused a registration request."""


class LocalAuthFailed(AkapError):
    """The smart card's local login check rejected the supplied credentials."""


class StaleTimestamp(AkapError):
    """A message timestamp fell outside the freshness window."""

    def __init__(self, label: str, party: str, sent: int, now: int, delta: int):
        self.label = label
        self.party = party
        self.sent = sent
        self.now = now
        self.delta = delta
        super().__init__(
            f"{label} outside freshness window at {party}: |{now} - {sent}| > {delta}"
        )


class UnknownIdentity(AkapError):
    """A lookup by identity digest or sensor id found no registered entry."""


class AuthenticatorMismatch(AkapError):
    """A hash authenticator did not verify. Message reads 'X_UG mismatch at gateway'."""

    def __init__(self, check: str, party: str):
        self.check = check
        self.party = party
        super().__init__(f"{check} mismatch at {party}")


class NoActiveSession(AkapError):
    """A session-bound message arrived but no matching session is active."""


class DecodeError(AkapError):
    """A wire frame could not be decoded."""


class PkeDecryptionError(AkapError):
    """Public-key decryption failed (wrong key or tampered ciphertext)."""


class LeakUnavailable(AkapError):
    """A leak oracle was queried before the requested value was generated."""


class AttackInputsMissing(AkapError):
    """An attack was invoked without a required oracle input."""


class PlaintextStateRefused(AkapError):
    """Refused to write secrets to disk without explicit acknowledgment."""


class StateFileError(AkapError):
    """Base class for state-file load failures."""


class StateFormatError(StateFileError):
    """State file is not valid JSON or has malformed field values."""


class StateVersionError(StateFileError):
    """State file declares an unknown format name or version."""


class StateKindError(StateFileError):
    """State file holds a different kind of state than requested."""


class TranscriptFormatError(AkapError):
    """Transcript file failed validation on import."""
