"""Exception hierarchy shared by all gridshrink modules."""


class GridShrinkError(Exception):
    pass


class ParseError(GridShrinkError):
    pass


class DuplicatePoint(GridShrinkError):
    pass


class NonAdjacentEdge(GridShrinkError):
    pass


class Disconnected(GridShrinkError):
    pass


class NotATree(GridShrinkError):
    pass


class PinCoverageError(GridShrinkError):
    pass


class StateBudgetExceeded(GridShrinkError):
    pass


class InvalidOperation(GridShrinkError):
    pass


class MixedDirectionError(InvalidOperation):
    pass


class CollisionError(GridShrinkError):
    """Raised when a round's operations collide; ``reports`` lists what was found."""

    def __init__(self, reports, round_index=None):
        self.reports = list(reports)
        self.round_index = round_index
        kinds = sorted({r.kind for r in self.reports})
        where = f" in round {round_index}" if round_index is not None else ""
        super().__init__(f"{len(self.reports)} collision(s){where}: {', '.join(kinds)}")


class CapacityError(GridShrinkError):
    pass


class Overflow(GridShrinkError):
    pass


class MPrimeTooLarge(GridShrinkError):
    pass


class EmptyCandidateSet(GridShrinkError):
    pass


class TargetTooLong(GridShrinkError):
    pass


class NotTopologicallyEquivalent(GridShrinkError):
    pass


class InfeasibleParameters(GridShrinkError):
    pass


class KTooSmall(GridShrinkError):
    pass


class KTooLarge(GridShrinkError):
    pass


class IndexOutOfRange(GridShrinkError):
    pass


class ConfigError(GridShrinkError):
    pass


class InsufficientData(GridShrinkError):
    pass


class VerificationFailure(GridShrinkError):
    def __init__(self, message, round_index=None):
        self.round_index = round_index
        super().__init__(message if round_index is None else f"round {round_index}: {message}")
