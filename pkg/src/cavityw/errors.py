"""Exception classes shared across the package."""


class CavityWError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CavityWError):
    """Invalid configuration: bad mode declarations, bad config file, bad units."""


class BasisMismatchError(CavityWError):
    """Two objects that must share a basis do not."""


class ConditionViolationError(CavityWError):
    """A parameter matching condition required by an operation does not hold."""


class IntegrationError(CavityWError):
    """The adaptive integrator could not meet its tolerance or step underflowed."""
