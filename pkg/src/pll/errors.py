"""Exception hierarchy.

Every failure mode that callers may want to branch on carries a short
machine-readable ``tag`` (e.g. ``"tail-exhausted"``) so CLI output and
JSON reports can name it without parsing messages.
"""


class PLLError(ValueError):
    tag = "error"

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context


class DomainError(PLLError):
    tag = "domain"


class TailExhausted(PLLError):
    tag = "tail-exhausted"


class DegenerateSurvival(PLLError):
    tag = "degenerate-survival"


class WindowsOverlap(PLLError):
    tag = "windows-overlap"

    def __init__(self, message, min_n=None, **context):
        super().__init__(message, min_n=min_n, **context)
        self.min_n = min_n


class InsufficientNeighbours(PLLError):
    tag = "insufficient-neighbours"


class DegenerateSpan(PLLError):
    tag = "degenerate-span"


class InvalidRatios(PLLError):
    tag = "invalid-ratios"


class UnpooledCells(PLLError):
    tag = "unpooled-cells"


class DegenerateTable(PLLError):
    tag = "degenerate-table"


class InsufficientPoints(PLLError):
    tag = "insufficient-points"


class OutsideWindow(PLLError):
    """A query reaches past the window a truncated sample was drawn on."""

    tag = "outside-window"
