"""Exception hierarchy shared by every module of the lab."""

from __future__ import annotations


class RicciLabError(Exception):
    """Base class for all lab errors."""


class ParameterError(RicciLabError, ValueError):
    """Invalid argument: grid too small, bad dimension, non-finite input."""


class DegenerateProfileError(RicciLabError):
    """The profile does not close up smoothly at a pole."""


class PreconditionError(RicciLabError):
    """A documented precondition of a routine does not hold."""


class DomainError(RicciLabError, ValueError):
    """Evaluation outside the domain of a closed-form expression.

    ``blowup`` carries the blow-up time when one is relevant.
    """

    def __init__(self, msg: str, blowup: float | None = None):
        super().__init__(msg)
        self.blowup = blowup


class GeometryError(RicciLabError):
    """A geometric construction does not fit on the current manifold."""


class StepRejected(RicciLabError):
    """A time step produced a non-finite or non-positive state."""

    def __init__(self, msg: str, sample: int | None = None, time: float | None = None):
        super().__init__(msg)
        self.sample = sample
        self.time = time


class FlowError(RicciLabError):
    """A flow run aborted; ``trace`` holds every sample recorded so far."""

    def __init__(self, msg: str, trace=None):
        super().__init__(msg)
        self.trace = trace


class CurvatureBoundViolation(FlowError):
    """The a-priori curvature bound asserted during a run was exceeded."""


class ConstructionError(RicciLabError):
    """A cutoff function failed one of its defining properties."""


class InfeasibleError(RicciLabError):
    """No admissible parameter was found by a search."""


class UnsupportedDimension(RicciLabError):
    """The requested operation is only defined in another dimension."""


class GenerationError(RicciLabError):
    """A member of an initial-data family is not admissible."""

    def __init__(self, msg: str, eps: float | None = None):
        super().__init__(msg)
        self.eps = eps


class ConfigError(RicciLabError):
    """Malformed or inconsistent experiment configuration."""
