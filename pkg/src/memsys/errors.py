"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument outside the domain where a function is defined."""


class InvariantError(ValueError):
    """Data violates a structural invariant (e.g. nonpositive exp-sum terms)."""


class ParseError(ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class FitFailure(RuntimeError):
    """Rational fit produced poles/residues that could not be repaired."""

    def __init__(self, message, poles=None, residues=None):
        super().__init__(message)
        self.poles = poles
        self.residues = residues


class ConversionFailure(RuntimeError):
    """Barycentric to partial-fraction conversion failed."""


class NoConvergence(RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NegativeQuadraticForm(ValueError):
    """(Dv, v) < 0 for an operator that was required to be SPD."""


class StabilityViolation(RuntimeError):
    def __init__(self, message, level=None, energy=None, bound=None):
        super().__init__(message)
        self.level = level
        self.energy = energy
        self.bound = bound


class SingularMass(RuntimeError):
    """Block mass operator of the coupled system is numerically singular."""


class QuadratureFailure(RuntimeError):
    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class CheckpointMismatch(ValueError):
    """Checkpoint times are not shared by the runs being compared."""
