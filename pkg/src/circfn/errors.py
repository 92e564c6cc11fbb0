"""Exception hierarchy shared by every circfn module."""


class CircfnError(Exception):
    """Base class for all circfn errors."""


class DomainError(CircfnError, ValueError):
    """A point lies outside the chart domain it was given in."""


class ValidationError(CircfnError, ValueError):
    """An object violates a structural invariant."""


class UsageError(CircfnError, ValueError):
    """An operation was called on an input it does not apply to."""


class FlatProfileError(CircfnError):
    """A critical point of a profile has all available derivatives vanishing."""


class MorsifyError(CircfnError):
    """No Morse replacement fits into the available room."""


class NotEvenError(CircfnError, ValueError):
    """Input to the Whitney factorisation is not an even function."""


class GapError(CircfnError, ValueError):
    """Collar radii do not fit between consecutive critical circles."""


class NotHFieldError(CircfnError):
    """A tangent field vanishes somewhere on the band part of the surface."""


class NotNormalizedError(CircfnError):
    """A circle action was requested from a field that is not period-normalized."""


class PreconditionError(CircfnError):
    """The two actions given to the conjugator do not agree on the window."""


class AmbiguousLociError(CircfnError):
    """Grid resolution is too coarse to separate neighbouring critical circles."""
