"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument violates a documented precondition."""


class ShapeMismatch(InvalidArgument):
    """Two arrays that must share a shape do not."""


class DegenerateSchedule(ValueError):
    """Schedule values make a bound formula undefined (log of zero)."""


class DegenerateMixture(ValueError):
    """Mixture responsibilities underflowed everywhere."""


class SeamMismatch(ValueError):
    """Adjacent clips disagree on their shared boundary frame."""
