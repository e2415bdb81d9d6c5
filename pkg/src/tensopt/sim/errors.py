"""Simulator error types."""

from __future__ import annotations


class SimulationError(Exception):
    """Raised when a kernel cannot be executed (bad address, unsupported
    configuration, runaway execution, ...)."""

    def __init__(self, message: str, kind: str = "runtime"):
        super().__init__(message)
        self.message = message
        self.kind = kind


class LoweringError(SimulationError):
    """Raised when a parsed kernel cannot be translated for execution."""

    def __init__(self, message: str):
        super().__init__(message, kind="lowering")
