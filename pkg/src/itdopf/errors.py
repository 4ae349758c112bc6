"""Exception hierarchy.

Every input problem raises a subclass of :class:`ItdError` so that callers
(and the CLI) can map failures to diagnostics without catching bare
``Exception``.  Solver outcomes are *not* exceptions; they are reported via
``Solution.status``.
"""


class ItdError(Exception):
    """Base class for all itdopf errors."""


class NetworkError(ItdError):
    """Inconsistent network data."""


class ZeroImpedance(NetworkError):
    pass


class NonPositiveBase(NetworkError):
    pass


class BoundaryError(ItdError):
    """A boundary link cannot be resolved against the parsed networks."""


class UnknownBus(BoundaryError):
    pass


class DisabledBus(BoundaryError):
    pass


class DuplicateLink(BoundaryError):
    pass


class PhaseMismatch(BoundaryError):
    pass


class ParseError(ItdError):
    """Malformed input file.  Carries an optional source location."""

    def __init__(self, message, line=None, column=None, source=None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        super().__init__(self._format())

    def _format(self):
        where = []
        if self.source:
            where.append(str(self.source))
        if self.line is not None:
            where.append(f"line {self.line}")
            if self.column is not None:
                where.append(f"column {self.column}")
        return f"{': '.join([', '.join(where)] if where else [])}{': ' if where else ''}{self.message}"


class CaseSyntaxError(ParseError):
    pass


class MissingSection(ParseError):
    pass


class UnsupportedCostModel(ParseError):
    pass


class SingularImpedanceBlock(ParseError):
    pass


class UnknownBusReference(ParseError):
    pass


class MissingField(ParseError):
    pass


class UnsupportedFormulation(ItdError):
    pass
