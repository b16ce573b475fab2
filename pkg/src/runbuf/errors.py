"""Shared exception types."""


class GenerationFailure(RuntimeError):
    """Random instance generation exhausted its placement budget."""


class TooLarge(ValueError):
    """Instance exceeds the documented size guard of an exact method."""


class Infeasible(ValueError):
    """No ordering satisfies the requested running-buffer cap."""

    def __init__(self, k):
        super().__init__(f"no ordering fits within running-buffer cap {k}")
        self.k = k


class NotPerfectSquare(ValueError):
    """The cycle family is only defined for perfect-square sizes."""


class InvalidPermutation(ValueError):
    """Ordering argument is not a permutation of the expected index range."""


class SolveTimeout(RuntimeError):
    """Cooperative deadline expired inside a solver."""
