"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`ArxcastError`.
The CLI prints the class name as the machine-readable error category.
"""


class ArxcastError(Exception):
    exit_code = 1

    @property
    def category(self) -> str:
        return type(self).__name__


class ConfigError(ArxcastError, ValueError):
    exit_code = 2


class EmptyInput(ArxcastError, ValueError):
    pass


class EmptyAlignment(ArxcastError, ValueError):
    pass


class LengthMismatch(ArxcastError, ValueError):
    pass


class IndexMismatch(ArxcastError, ValueError):
    pass


class NoValidHours(ArxcastError, ValueError):
    pass


# ingestion


class NetworkError(ArxcastError):
    """Transient transport failure; the caller may retry."""

    exit_code = 3
    retryable = True


class NotFound(ArxcastError):
    """The archive has no file for the requested cycle/lead."""

    exit_code = 3

    def __init__(self, message, url=None):
        super().__init__(message)
        self.url = url


class DataNotFound(ArxcastError, FileNotFoundError):
    exit_code = 4


class SchemaError(ArxcastError, ValueError):
    exit_code = 4


class RowError(ArxcastError, ValueError):
    """One or more CSV rows failed validation.

    ``rows`` holds ``(row_number, reason)`` pairs, row numbers counted from 1
    for the header line.
    """

    exit_code = 4

    def __init__(self, rows):
        self.rows = list(rows)
        shown = "; ".join(f"row {n}: {why}" for n, why in self.rows[:5])
        more = f" (+{len(self.rows) - 5} more)" if len(self.rows) > 5 else ""
        super().__init__(f"{len(self.rows)} invalid row(s): {shown}{more}")


# estimation


class Underdetermined(ArxcastError, ValueError):
    pass


class Singular(ArxcastError, ValueError):
    pass


class MissingInput(ArxcastError, ValueError):
    """A prediction input (lag measurement or forecast) is unavailable."""


class MissingExogenous(MissingInput):
    pass


class ModelNotFound(ArxcastError, FileNotFoundError):
    exit_code = 5


class VersionMismatch(ArxcastError, ValueError):
    exit_code = 5


class CorruptFile(ArxcastError, ValueError):
    exit_code = 5


class DegenerateSplit(UserWarning):
    """A nonempty hour bucket produced an empty test set."""
