"""Exception hierarchy for the pumpguard toolkit.

Every error raised by the library derives from PumpguardError so callers
(and the CLI exit-code mapping) can distinguish toolkit failures from
genuine I/O errors.
"""


class PumpguardError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(PumpguardError):
    """A value or configuration violates an invariant."""


class ConfigError(ValidationError):
    """A configuration document is malformed; the message names the key."""


class SchemaError(PumpguardError):
    """A CSV input does not carry the expected columns."""


class EmptyDataError(PumpguardError):
    """No rows survived parsing/cleaning."""


class DataError(PumpguardError):
    """An operation received data outside its domain (empty, non-finite,
    or degenerate for the requested computation)."""


class CapacityError(PumpguardError):
    """A series is too short for the requested number of injections."""


class ContractError(PumpguardError):
    """Two inputs that must agree (lengths, feature layouts) do not."""


class PersistenceError(PumpguardError):
    """A persisted model file has an unknown kind or version."""
