"""Exception types shared across the package."""


class RankReproError(Exception):
    """Base class for all package errors."""


class InvalidInputError(RankReproError, ValueError):
    """An argument violates a documented precondition."""


class InfeasibleNeighborhoodError(RankReproError):
    """Below/above sets for some population leave no admissible rank."""

    def __init__(self, population, lo, hi):
        self.population = population
        self.lo = lo
        self.hi = hi
        super().__init__(
            f"population {population!r}: neighborhood sets force the empty rank "
            f"interval [{lo}, {hi}]"
        )


class ConvergenceError(RankReproError):
    """An iterative solver stopped before reaching its tolerance.

    Carries the best iterate found so callers can inspect or salvage it.
    """

    def __init__(self, message, best=None, residuals=None):
        self.best = best
        self.residuals = residuals
        super().__init__(message)


class InfeasibleProblemError(RankReproError):
    """A constraint system admits no solution; carries a certificate."""

    def __init__(self, message, certificate=None):
        self.certificate = certificate
        super().__init__(message)


class DegenerateDesignError(RankReproError):
    """A design matrix is rank-deficient beyond its known null direction."""


class EstimationError(RankReproError):
    """A point estimator cannot be computed from the given data."""


class DataFormatError(RankReproError):
    """A data file violates its schema; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
