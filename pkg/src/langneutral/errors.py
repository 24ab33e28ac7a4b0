"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: usage/configuration problems exit 2,
data and container-format problems exit 3, numeric/training failures exit 4.
"""


class LangNeutralError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(LangNeutralError):
    """Input data violates a documented invariant (bad dims, NaN, empty set)."""


class FormatError(LangNeutralError):
    """A container file is not in the expected format (magic, version, kind)."""


class CorruptionError(FormatError):
    """A container file is structurally valid at the start but damaged inside."""


class ConfigError(LangNeutralError):
    """A requested operation is inconsistent with the supplied configuration."""


class TrainingError(LangNeutralError):
    """Optimization failed numerically (non-finite loss)."""
