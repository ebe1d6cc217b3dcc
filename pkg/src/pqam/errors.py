"""Exception types shared by every module."""


class QamError(Exception):
    """Base class for errors raised by pqam."""


class InvalidInput(QamError, ValueError):
    """Malformed pattern, query, layout or gate argument."""


class NumericalError(QamError, ArithmeticError):
    """A numerical invariant (normalization, branch weight) was violated."""
