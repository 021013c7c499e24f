"""Exception hierarchy.

Everything raised on purpose derives from :class:`CubeKitError`.  The two
intermediate classes map onto CLI exit codes: :class:`UserError` (1) and
:class:`DatabaseError` (2).
"""

from __future__ import annotations


class CubeKitError(Exception):
    """Base class for all cubekit errors."""


class UserError(CubeKitError):
    """Bad input: unknown names, malformed views, unparsable text."""


class DatabaseError(CubeKitError):
    """Anything that went wrong on the database side."""


# cube model / view builder
class NoMeasures(UserError):
    pass


class AggMismatch(UserError):
    pass


class UnknownAttribute(UserError):
    pass


class LiteralTypeError(UnknownAttribute):
    """A literal whose type cannot be compared with the bound column."""


class UnknownLevel(UserError):
    pass


class UnknownDimension(UserError):
    pass


class UnknownMeasure(UserError):
    pass


class UnknownView(UserError):
    pass


class UnknownMember(UserError):
    def __init__(self, message: str, level: str | None = None):
        super().__init__(message)
        self.level = level


class NoChildLevel(UserError):
    pass


class AxisOrderError(UserError):
    pass


class DuplicateAxis(UserError):
    pass


class DuplicateMeasure(UserError):
    pass


class HugeViewError(UserError):
    """Populating the default view without an explicit opt-in."""


class AmbiguousLabel(UserError):
    pass


class NothingToInfer(UserError):
    pass


class MissingTable(UserError):
    def __init__(self, names):
        self.names = list(names)
        super().__init__("metadata names tables missing from the database: " + ", ".join(self.names))


class ConfigError(UserError):
    pass


class SyntaxErrorAt(UserError):
    """Parse error carrying a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class DslSyntaxError(SyntaxErrorAt):
    pass


class TurtleSyntaxError(SyntaxErrorAt):
    pass


# database side
class ConnectionFailed(DatabaseError):
    pass


class PermissionDenied(DatabaseError):
    pass


class QueryFailed(DatabaseError):
    def __init__(self, message: str, sql: str):
        self.sql = sql
        super().__init__(f"{message}\n-- while executing:\n{sql}")


class LoadError(DatabaseError):
    pass
