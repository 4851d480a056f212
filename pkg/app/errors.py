from typing import Iterable, Optional


class SpinallocError(Exception):
    """Root of every error raised by the solver suite."""


class ParseError(SpinallocError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContradictionError(SpinallocError):
    """
    Raised when decimation empties a clause.

    The factor graph is left consistent; `stations` lists the stations whose
    Alpha clause ran out of literals, `clauses` every clause emptied by the fix.
    """

    def __init__(self, stations: Iterable[int], clauses: Iterable = ()):
        self.stations = sorted(set(stations))
        self.clauses = list(clauses)
        super().__init__(
            f"Decimation left no option for stations {self.stations}"
            if self.stations else "Decimation produced an empty clause")


class InstanceTooLargeError(SpinallocError):
    pass


class PartialAllocationError(SpinallocError):
    pass


class EmptyInputError(SpinallocError):
    pass


class ConfigError(SpinallocError):
    pass
