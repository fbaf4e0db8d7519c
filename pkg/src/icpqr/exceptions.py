"""Exception and warning types raised by the package."""


class ValidationError(ValueError):
    """Input failed a precondition (non-finite values, bad parameter, ...)."""


class ShapeError(ValidationError):
    """Array shapes are incompatible with each other or with a fitted model."""


class ConnectivityError(ValidationError):
    """A kernel row has zero mass, i.e. the affinity graph has an isolated vertex."""


class NumericalIntegrityError(ArithmeticError):
    """A computed quantity contradicts an identity that must hold up to roundoff.

    Usually signals a corrupted or mismatched model.
    """


class BoundViolation(NumericalIntegrityError):
    """A proven distortion/approximation bound was exceeded."""


class ConditioningWarning(UserWarning):
    """The triangular core is badly conditioned; derived quantities lose accuracy."""


class ParseError(ValidationError):
    """An input file is missing, unreadable or malformed."""
