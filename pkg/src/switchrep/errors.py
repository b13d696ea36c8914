"""Exception types shared across the package."""


class SwitchrepError(Exception):
    """Base class for all switchrep errors."""


class ModelValidationError(SwitchrepError):
    """A model failed validation; carries the offending messages."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class NonFiniteStateError(SwitchrepError):
    """The integrated state left the representable range (dt too large)."""

    def __init__(self, t):
        self.t = float(t)
        super().__init__(f"non-finite state at t={self.t:.6g}; reduce dt")


class AbsorbingStateError(SwitchrepError):
    """Jump sampling requested from a regime with zero exit rate."""


class StepTooLargeError(SwitchrepError):
    """A transition-probability row of I + Q(P)*dt left [0, 1]."""

    def __init__(self, msg, t=None):
        self.t = t
        super().__init__(msg)


class NumericalError(SwitchrepError):
    """A linear solve failed its residual bound."""


class DegenerateLeaderError(SwitchrepError):
    """Mean fitnesses tie at the top; no unique leading genotype."""

    def __init__(self, tied):
        self.tied = tuple(tied)
        super().__init__(f"degenerate leader: genotypes {self.tied} tie in mean fitness")


class ReducibleGeneratorError(SwitchrepError):
    """Certificate construction requires an irreducible generator."""


class ResidualTooLargeError(SwitchrepError):
    """Right-hand side not orthogonal to the generator kernel within tolerance."""


class PoleEvaluationError(SwitchrepError):
    """Certificate function evaluated at its pole (vertex coordinate zero)."""
