"""Exception types shared across the package."""


class KerrMetroError(Exception):
    """Base class for all package errors."""


class DomainError(KerrMetroError, ValueError):
    """An input lies outside the domain of a formula."""


class SeriesTruncationError(KerrMetroError):
    """The Q-function series needs more terms than the configured maximum."""


class OracleError(KerrMetroError):
    """The Fock-space integrator produced an untrustworthy result."""


class CutoffError(OracleError):
    """The number-basis cutoff is too small for the requested state.

    ``suggested`` carries a cutoff that would satisfy the tail tolerance,
    when one could be computed.
    """

    def __init__(self, message, suggested=None):
        super().__init__(message)
        self.suggested = suggested


class FitError(KerrMetroError):
    """Too few usable points for a scaling fit."""


class ConfigError(KerrMetroError):
    """Malformed or incomplete configuration file."""
