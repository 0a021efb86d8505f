"""Exception types raised across the package."""


class MetaEqError(Exception):
    """Base class for all package errors."""


class ConfigError(MetaEqError, ValueError):
    """A configuration value is missing, malformed or violates an invariant."""


class DomainError(MetaEqError, ValueError):
    """A position or region lies outside the habitat, or the habitat is degenerate."""


class PreconditionError(MetaEqError, ValueError):
    """An operation was called outside the regime where it is defined."""


class NotApplicable(PreconditionError):
    """A bound is requested where its hypotheses do not hold."""


class NumericalError(MetaEqError, RuntimeError):
    """An iterative numerical method failed; ``diagnostics`` holds details."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConvergenceError(NumericalError):
    """Fixed-point iteration exceeded its iteration budget."""


class IntegrationError(NumericalError):
    """The ODE integrator could not complete the requested horizon."""


class ModelInvalidError(MetaEqError, ValueError):
    """Transition probabilities fall outside [0, 1] for some patch."""

    def __init__(self, message, patch=None):
        super().__init__(message)
        self.patch = patch
