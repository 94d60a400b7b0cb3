"""Exception hierarchy shared by the library and the command-line tool.

Every class carries the process exit code the CLI uses when it escapes.
"""


class FragkitError(Exception):
    exit_code = 1


class ParameterError(FragkitError, ValueError):
    """Invalid parameter value or combination."""

    exit_code = 1


class InputError(FragkitError, ValueError):
    """Input data that violates an operation's precondition."""

    exit_code = 1


class FormatError(FragkitError):
    """Malformed or unsupported artifact file."""

    exit_code = 2

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class CompatibilityError(FragkitError):
    """Dataset and machine (or two datasets) do not describe the same features or samples."""

    exit_code = 3


class NumericError(FragkitError):
    """A numerical procedure failed to converge or produced non-finite values."""

    exit_code = 4
