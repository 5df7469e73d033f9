"""
Error types raised by vacuumprobe.
"""
from typing import Optional


class VacuumProbeError(Exception):
    """Base class for all vacuumprobe errors."""


class DomainError(VacuumProbeError, ValueError):
    """
    A numerical operation was called outside its domain.

    Attributes:
        operation: Name of the operation whose precondition failed
    """

    def __init__(self, operation: str, message: str):
        super().__init__(f"{operation}: {message}")
        self.operation = operation


class ConfigError(VacuumProbeError):
    """
    A scenario configuration could not be parsed or validated.

    Attributes:
        field: Dotted path of the offending field (None for file-level errors)
    """

    def __init__(self, message: str, field: Optional[str] = None):
        prefix = f"{field}: " if field else ""
        super().__init__(f"{prefix}{message}")
        self.field = field


class ArtifactIOError(VacuumProbeError, OSError):
    """
    An output artifact could not be written.

    Attributes:
        path: Path that failed
    """

    def __init__(self, path: str, reason: str):
        super().__init__(f"cannot write {path}: {reason}")
        self.path = path
