"""Exception hierarchy shared by every modfix module."""


class ModfixError(Exception):
    """Base class for all library errors."""


class ParameterError(ModfixError, ValueError):
    """An argument is outside its admissible range."""


class AlignmentError(ModfixError, ValueError):
    """A function vector does not match the grid (or another vector) in length."""


class DomainError(ModfixError, ValueError):
    """A value is non-finite or otherwise outside the domain of an operation."""


class UnsupportedError(ModfixError):
    """The operation is not defined for the given modular or mapping."""


class ParseError(ModfixError, ValueError):
    """Malformed expression text.

    ``offset`` is the 0-based character position where parsing failed.
    """

    def __init__(self, message, offset, text=None):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class EvaluationError(ModfixError, ArithmeticError):
    """An expression could not be evaluated (division by zero, sqrt of a negative).

    ``index`` is the grid point index when the failure happened inside a
    pointwise mapping application. ``trace`` is filled in by
    :func:`modfix.iterate.run` with the partial trace recorded so far.
    """

    def __init__(self, message, index=None):
        self.index = index
        self.trace = None
        if index is not None:
            message = f"{message} (point {index})"
        super().__init__(message)


class InvalidEllError(ModfixError, ValueError):
    """The comparison function for condition (I) does not vanish at 0."""


class ConfigError(ModfixError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
