"""Exception hierarchy shared by all modules.

Three coarse families matter to callers (and map to CLI exit codes):
input problems (bad syntax, violated preconditions), resource/bound
infeasibility (a search that would be astronomically large at the
configured caps), and internal invariant violations (bugs).
"""

from __future__ import annotations


class HypgrpError(Exception):
    """Base class for every error raised by this package."""


class InputError(HypgrpError):
    """The caller supplied something malformed or precondition-violating."""


class WordParseError(InputError):
    def __init__(self, message: str, token: str | None = None, position: int | None = None):
        super().__init__(message)
        self.token = token
        self.position = position


class PresentationError(InputError):
    """Malformed presentation document or violated backend invariant."""


class ValidationError(InputError):
    """Context construction rejected: the declared constants failed the
    oracle spot-check.  Carries the violating path when there is one."""

    def __init__(self, message: str, violating_word=None):
        super().__init__(message)
        self.violating_word = violating_word


class TrivialInputError(InputError):
    """An operation that requires a nontrivial element got the identity."""


class TorsionInputError(InputError):
    """An operation that requires an infinite-order element got torsion.

    Carries the order so callers can report it.
    """

    def __init__(self, message: str, order: int):
        super().__init__(message)
        self.order = order


class UnsupportedBackendError(InputError):
    """Operation not defined for this presentation backend."""


class ResourceError(HypgrpError):
    """A bound or cap makes the requested computation infeasible."""


class BallOverflowError(ResourceError):
    """Ball construction would exceed the configured vertex limit."""

    def __init__(self, message: str, radius: int, limit: int):
        super().__init__(message)
        self.radius = radius
        self.limit = limit


class BoundInfeasibleError(ResourceError):
    """A paper bound evaluated to something beyond the configured cap.

    Carries the offending value so the caller sees how far off it is.
    """

    def __init__(self, message: str, bound_value=None):
        super().__init__(message)
        self.bound_value = bound_value


class InternalError(HypgrpError):
    """An internal invariant failed; always a bug, never user error."""
