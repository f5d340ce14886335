"""Exception types shared across the package."""


class LglabError(Exception):
    """Base class for all package errors."""


class InvalidParams(LglabError):
    """Parameter record violates a positivity or range constraint."""


class KinkPoint(LglabError):
    """Jacobian requested exactly on the refuge line x = m (m > 0)."""


class NotAnEquilibrium(LglabError):
    """Classification requested at a point that is not an equilibrium."""


class NoHopf(LglabError):
    """The purely-imaginary-eigenvalue condition fails at this equilibrium."""


class NumericalFailure(LglabError):
    """Root polishing or another iterative routine did not converge."""


class NonHyperbolicPresent(LglabError):
    """Index bookkeeping skipped because a non-hyperbolic equilibrium is present."""


class StepTooLarge(LglabError):
    """An integration step left the closed quadrant by more than round-off."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class NonFinite(LglabError):
    """Integration produced an overflow or NaN."""


class PositivityViolation(LglabError):
    """A Milstein step landed at or below zero (h too large for this noise)."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class TooShort(LglabError):
    """Trajectory tail has too few points for the requested statistic."""


class Inconclusive(LglabError):
    """Too few Poincare-section crossings to decide on a cycle."""
