"""Exception hierarchy for sheaflens."""


class SheafLensError(Exception):
    """Base class for every error raised by this package."""


class TopologyError(SheafLensError, ValueError):
    pass


class MissingEmptyOrWhole(TopologyError):
    pass


class NotClosedUnderUnion(TopologyError):
    def __init__(self, first, second):
        self.witness = (first, second)
        super().__init__(f"union of {sorted(first)} and {sorted(second)} is not open")


class NotClosedUnderIntersection(TopologyError):
    def __init__(self, first, second):
        self.witness = (first, second)
        super().__init__(f"intersection of {sorted(first)} and {sorted(second)} is not open")


class CapExceeded(SheafLensError):
    pass


class SpaceMismatch(SheafLensError, ValueError):
    pass


class StalkShapeMismatch(SheafLensError, ValueError):
    pass


class CommutativityViolation(SheafLensError):
    def __init__(self, message, paths=None, deviation=None):
        self.paths = paths
        self.deviation = deviation
        super().__init__(message)


class PartialAssignment(SheafLensError):
    def __init__(self, missing):
        self.missing = tuple(sorted(missing))
        super().__init__(f"assignment has no value on opens {list(self.missing)}")


class SheafMismatch(SheafLensError, ValueError):
    pass


class NoSupport(SheafLensError, ValueError):
    pass


class NonConvergence(SheafLensError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics
        super().__init__(message)


class BaseMapNotContinuous(SheafLensError, ValueError):
    pass


class SquareViolation(SheafLensError):
    def __init__(self, smaller, larger, deviation):
        self.smaller = smaller
        self.larger = larger
        self.deviation = deviation
        super().__init__(
            f"naturality square fails on open {smaller} inside {larger} (deviation {deviation:.3g})"
        )


class ChainMismatch(SheafLensError, ValueError):
    pass


class NotARefinement(SheafLensError, ValueError):
    pass


class InvalidTau(SheafLensError, ValueError):
    def __init__(self, witness):
        self.witness = witness
        super().__init__(f"refinement function does not contain member {witness}")


class NonComposable(SheafLensError, ValueError):
    pass


class InfiniteMismatch(SheafLensError):
    pass


class EmptyInput(SheafLensError, ValueError):
    pass
