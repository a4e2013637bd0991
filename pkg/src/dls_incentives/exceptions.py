"""Exception hierarchy shared across the package."""


class DLSError(Exception):
    """Base class for all package errors."""


class InputError(DLSError, ValueError):
    """Malformed or out-of-range input."""


class InfeasibleError(DLSError, ValueError):
    """A requested target cannot be reached by any admissible control.

    ``interval`` carries the reachable range when one is known.
    """

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class UnsupportedPriorError(DLSError, TypeError):
    """The closed-form QP only exists for uniform type priors."""


class SizeError(DLSError, ValueError):
    """Enumeration would exceed the configured point budget."""


class ParseError(InputError):
    """A data file could not be parsed. ``line`` is 1-based."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
        if line is not None:
            loc = f"{loc}:{line}" if loc else f"line {line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line
