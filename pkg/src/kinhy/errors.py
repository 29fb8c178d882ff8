"""Exception types shared across the solver."""

from __future__ import annotations


class KinhyError(Exception):
    """Base class for all solver errors."""


class ConfigError(KinhyError):
    """Invalid or unparsable run configuration."""


class NonPhysicalStateError(KinhyError):
    """A macroscopic state with rho <= 0 or P <= 0 was encountered.

    ``where`` identifies the offending cell ``(j, i)`` or face
    ``(axis, j, face_index)`` when known.
    """

    def __init__(self, message: str, where=None):
        super().__init__(message if where is None else f"{message} at {where}")
        self.where = where


class VacuumCellError(NonPhysicalStateError):
    """Velocity-space density below the vacuum threshold."""


class ClosureFailureError(KinhyError):
    """The relaxation tensor lost positive definiteness."""

    def __init__(self, message: str, det=None, trace=None):
        detail = message
        if det is not None or trace is not None:
            detail = f"{message} (det={det}, trace={trace})"
        super().__init__(detail)
        self.det = det
        self.trace = trace


class RealizabilityViolationError(KinhyError):
    """Moment data incompatible with a positive distribution (C_bar <= 1)."""


class ContractViolationError(KinhyError):
    """An internal precondition was violated (e.g. a non-symmetric matrix)."""
