"""Exception hierarchy shared across the toolkit."""


class FrdiagError(Exception):
    """Base class for all toolkit errors."""


class DomainError(FrdiagError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(FrdiagError):
    """An iterative solver failed to converge within its budget."""


class DegenerateMeasure(FrdiagError):
    """Operation requires a non-degenerate (non point mass) measure."""


class MassDefect(FrdiagError):
    """Recovered density deviates from unit mass beyond tolerance."""


class ScalarOperand(FrdiagError):
    """Operation requires a non-scalar operand."""


class ThresholdExceeded(FrdiagError):
    """Moment order outside the integrability range."""


class Unsupported(FrdiagError):
    """Requested computation is outside the supported parameter range."""


class MonotonicityViolation(FrdiagError):
    """A quantity that must be monotone decreased beyond slack."""


class SingularDraw(FrdiagError):
    """Random matrix draw too ill-conditioned to invert, even after redraws."""


class EmptySample(FrdiagError):
    """Empirical law contains no sample points."""
