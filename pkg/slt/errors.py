"""
Exception hierarchy shared by the library and the CLI
"""
from typing import Any, Dict, Optional


class SLTError(Exception):
    """Base class for every error raised by slt."""


class ParameterError(SLTError, ValueError):
    """A parameter lies outside the documented domain."""


class ContractError(SLTError):
    """An operation was called with inputs that violate its contract."""


class ResourceCapError(SLTError):
    """A simulation was refused because it would exceed the configured resource cap."""

    def __init__(self, expected_jumps: float, cap: float):
        self.expected_jumps = expected_jumps
        self.cap = cap
        super().__init__(
            f"Refusing to simulate: expected jump count {expected_jumps:.4g} exceeds the cap {cap:.4g}. "
            "Increase eps or shorten the horizon."
        )


class UnsupportedRangeError(SLTError):
    """An argument lies outside the supported evaluation range of a series."""


class NumericalError(SLTError):
    """A numerical routine (quadrature, root finding) did not converge."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        if self.diagnostics:
            details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
            message = f"{message} ({details})"
        super().__init__(message)


class ConfigError(SLTError):
    """A configuration text could not be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AcceptanceFailure(SLTError):
    """An experiment finished but one or more acceptance thresholds failed."""
