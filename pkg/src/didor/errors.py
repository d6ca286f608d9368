"""Exception types shared across the package."""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid or incomplete configuration; message names the offending field."""


class SimulationDiverged(RuntimeError):
    """Integration produced a non-finite state.

    Carries the offending state vector and, when known, the domain that
    produced it.
    """

    def __init__(self, message: str, state=None, domain_id=None):
        super().__init__(message)
        self.state = state
        self.domain_id = domain_id


class IntegrityError(RuntimeError):
    """Stored artifact does not match its manifest hash."""


class ProtocolMismatch(ValueError):
    """Evaluation reports with incompatible protocols were combined."""
