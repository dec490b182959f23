"""Exception hierarchy shared by every stage of the pipeline."""


class ClearingError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ClearingError):
    """Invalid user input: bad records, missing offers, limits on non-edges."""


class ParseError(InputError):
    """A record file could not be parsed. ``row`` is the 1-based file line."""

    def __init__(self, message, row=None, source=None):
        self.row = row
        self.source = source
        where = []
        if source is not None:
            where.append(str(source))
        if row is not None:
            where.append(f"row {row}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class TopologyError(InputError):
    """The network cannot be handled, typically an unsupported cycle."""


class SolverError(ClearingError):
    """The LP solver did not reach an optimal basis."""
