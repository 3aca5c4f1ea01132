"""Exception hierarchy shared by the library and the CLI exit codes."""


class KamacError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ValidationError(KamacError, ValueError):
    """Malformed input: bad pmf, bad alphabet, bad scenario field."""

    exit_code = 3

    def __init__(self, message, path=None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class SizeCapError(KamacError, ValueError):
    """An exponential algorithm was asked to run beyond its size cap."""

    exit_code = 4


class DomainError(KamacError, ValueError):
    """A function was evaluated (or differentiated) outside its domain."""

    exit_code = 5


class ConvergenceError(KamacError, RuntimeError):
    """An iterative solver failed to reach its certificate tolerance."""

    exit_code = 5
