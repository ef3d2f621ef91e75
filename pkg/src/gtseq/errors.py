"""Exception types shared across the package."""


class GtseqError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(GtseqError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class BracketError(GtseqError, ValueError):
    """A root-finding bracket does not enclose a sign change."""


class ContractError(GtseqError, ValueError):
    """A call violates a documented precondition (e.g. advancing a stopped run)."""


class HorizonError(GtseqError, RuntimeError):
    """The truncation horizon left too much probability mass unaccounted for.

    Attributes
    ----------
    residual_tail : float
        The stopping-time tail probability beyond the requested horizon.
    """

    def __init__(self, message: str, residual_tail: float):
        super().__init__(message)
        self.residual_tail = residual_tail
