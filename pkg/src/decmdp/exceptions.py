class DecMdpError(Exception):
    """Base class for errors raised by the package."""


class ModelError(DecMdpError):
    """A model failed validation."""

    def __init__(self, message, issues=()):
        super().__init__(message)
        self.issues = list(issues)


class HorizonError(DecMdpError):
    """An operation was asked to step past the planning horizon."""


class CapacityError(DecMdpError):
    """An enumeration or table would exceed its configured cap."""
