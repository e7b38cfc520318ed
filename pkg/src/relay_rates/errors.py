"""Exception types raised across the package."""


class RelayRatesError(Exception):
    """Base class for every error raised by relay_rates."""


class DomainError(RelayRatesError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ArgumentError(RelayRatesError, ValueError):
    """Malformed argument combination, e.g. overlapping variable sets."""


class UnknownVariableError(RelayRatesError, KeyError):
    """Variable name not present among a pmf's axes."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class NormalizationError(RelayRatesError, ValueError):
    """Probabilities that do not sum to one (or are negative)."""


class SizeError(RelayRatesError, ValueError):
    """Dense alphabet product too large to materialize."""


class FactorizationError(RelayRatesError, ValueError):
    """Joint pmf that does not have the required product structure."""


class DegenerateChannelError(RelayRatesError, ValueError):
    """Channel gain of zero where a formula divides by it."""


class EmptyRegion(RelayRatesError):
    """No admissible compression-noise variance for a scheme."""


class ConvergenceError(RelayRatesError, RuntimeError):
    """Root or bracket search failed; ``diagnostics`` holds what was tried."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class GeometryError(RelayRatesError, ValueError):
    """Invalid node layout, e.g. two coincident nodes."""
