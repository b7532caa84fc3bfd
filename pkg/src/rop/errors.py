"""Exceptions raised by the solvers and numerical helpers."""


class RopError(Exception):
    """Base class for all package errors."""


class NoSignChange(RopError):
    """Bisection bracket does not straddle a root."""


class NonConvergence(RopError):
    """An iterative routine ran out of iterations.

    ``state`` carries whatever the routine had when it gave up, so callers
    can inspect residuals instead of losing them.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class Infeasible(RopError):
    """No allocation satisfies the constraints."""


class DegenerateChannel(RopError):
    """A closed form is undefined for the given channel gains."""
