"""Exception and warning types shared across the package."""


class LinselError(Exception):
    """Base class for all library errors."""


class InvalidInputError(LinselError, ValueError):
    """Malformed or dimensionally inconsistent input."""


class IdentifiabilityError(LinselError):
    """The linear identifiability condition cannot be established.

    Carries the numerical rank found and the rank required.
    """

    def __init__(self, message, rank=None, required=None):
        super().__init__(message)
        self.rank = rank
        self.required = required


class ConfigurationError(LinselError):
    """Inconsistent combination of inputs (e.g. table built for another family)."""


class CalibrationWarning(UserWarning):
    """Non-fatal condition met while calibrating penalties (e.g. Gamma target unreachable)."""
