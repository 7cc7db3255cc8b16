"""Exception types shared across the package.

DataError (and subclasses) signal problems with input data and map to CLI
exit code 1.  Programming errors (bad arguments from calling code) raise
plain ValueError/TypeError and are not caught by the CLI.
"""


class DataError(Exception):
    """A problem with input data (bad file, bad value, inconsistent sets)."""


class SchemaError(DataError):
    """Input file does not match the expected schema (e.g. missing column)."""


class RowError(DataError):
    """A single data row could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
