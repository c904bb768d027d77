"""
Exception hierarchy shared by every socrec_dp module.
"""

from typing import Optional


class SocRecError(Exception):
    """Base class for all socrec_dp errors."""
    pass


class GraphFormatError(SocRecError):
    """Error while parsing an edge-list file."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class GraphEditError(SocRecError, ValueError):
    """An edge edit that cannot be applied to the given graph."""
    pass


class DomainError(SocRecError, ValueError):
    """An argument outside the domain of the operation."""
    pass


class ConfigError(DomainError):
    """Invalid experiment or CLI configuration."""
    pass


class NoCandidatesError(SocRecError):
    """The target has no candidate nodes to recommend."""
    pass


class ZeroUtilityError(SocRecError):
    """Every candidate has zero utility; the target is skipped."""

    def __init__(self, reason: str = "all candidate utilities are zero"):
        super().__init__(reason)
        self.reason = reason


class UnsupportedConfigurationError(SocRecError):
    """A configuration the library has no certified result for."""
    pass


class InstanceTooLargeError(SocRecError):
    """Instance exceeds the size guard of an exhaustive or numeric routine."""
    pass


class NoBoundDerivableError(SocRecError):
    """The requested bound has no finite value at these parameters."""
    pass


class AuditInternalError(SocRecError):
    """An audit hit a state the audited mechanisms can never produce."""
    pass
