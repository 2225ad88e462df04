"""Exception types shared across the toolkit.

Everything raised on purpose derives from :class:`QsqsError`, so callers can
catch one type at the boundary.  Plain ``OSError`` is deliberately left alone:
a missing file is an I/O failure, not a domain error, and the CLI maps the two
to different exit codes.
"""


class QsqsError(Exception):
    """Base class for all toolkit errors."""


class EmptyInputError(QsqsError):
    """An operation that needs at least one element received none."""


class InvalidInputError(QsqsError):
    """Arguments violate an operation's contract."""


class TooLargeError(QsqsError):
    """Problem size exceeds a solver's hard cap."""


class ParseError(QsqsError):
    """File content is not syntactically valid."""


class ValidationError(QsqsError):
    """File content parsed but violates the schema contract."""


class UndefinedMetricError(QsqsError):
    """The requested metric is undefined for the given data."""
