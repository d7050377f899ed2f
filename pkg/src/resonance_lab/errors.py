"""Exception hierarchy shared by all modules."""


class ResonanceLabError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(ResonanceLabError, ValueError):
    """Arguments violate a documented precondition."""


class SingularPointError(ResonanceLabError):
    """The spectral parameter sits on the spectrum where no value exists."""


class UnsupportedError(ResonanceLabError):
    """The requested evaluation is not available for this model kind."""


class RefinementNeeded(ResonanceLabError):
    """An enumeration step is ambiguous; the offending interval must be refined."""

    def __init__(self, interval, message=None):
        self.interval = tuple(interval)
        super().__init__(message or f"ambiguous matching on interval {self.interval}")


class RefinementFailure(ResonanceLabError):
    """Adaptive refinement hit its depth budget, a discontinuity is likely."""

    def __init__(self, interval, distance, message=None):
        self.interval = tuple(interval)
        self.distance = float(distance)
        super().__init__(
            message
            or f"step distance {self.distance:.3g} unresolved on {self.interval}"
        )


class EgorovBudgetExceeded(ResonanceLabError):
    """The carved compact set misses too much of the interval."""

    def __init__(self, measure, delta, worst):
        self.measure = float(measure)
        self.delta = float(delta)
        self.worst = list(worst)
        super().__init__(
            f"grid measure of the excluded set {self.measure:.4g} >= delta={self.delta:.4g};"
            f" worst lambdas: {[round(w, 6) for w in self.worst[:5]]}"
        )


class ClusterLeakError(ResonanceLabError):
    """Tracked eigenvalue cluster is not isolated on the region."""


class UnresolvedSingularityError(ResonanceLabError):
    """Loops at two radii gave different monodromy."""
