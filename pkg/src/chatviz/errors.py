"""Exception types shared across the package."""


class ChatvizError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ChatvizError):
    """Malformed input file (CSV rows, session lines)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(ChatvizError):
    """Invalid table schema (duplicate columns, bad kinds)."""


class CorpusError(ChatvizError):
    """A dialogue session violates a corpus invariant."""

    def __init__(self, message: str, session_id: str | None = None, turn: int | None = None):
        self.session_id = session_id
        self.turn = turn
        where = ""
        if session_id is not None:
            where = f"session {session_id!r}"
            if turn is not None:
                where += f" turn {turn}"
            where += ": "
        super().__init__(where + message)


class SqlSyntaxError(ChatvizError):
    """SQL text that does not parse; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int = 0):
        self.offset = offset
        super().__init__(f"at offset {offset}: {message}")


class UnsupportedFeature(ChatvizError):
    """Syntactically valid SQL outside the supported subset (e.g. JOIN)."""


class UnknownColumn(ChatvizError):
    """A referenced column does not exist in the table schema."""


class TypeMismatch(ChatvizError):
    """An operation applied to a column of an incompatible kind."""


class SubqueryArityError(ChatvizError):
    """A subquery used where a single output column is required."""


class UnresolvedColumn(ChatvizError):
    """A column slot in an AST has no resolved column index."""


class NotDerivable(ChatvizError):
    """A tree is not a derivation of the grammar."""


class IllegalAction(ChatvizError):
    """An action not admissible at the current derivation frontier."""

    def __init__(self, message: str, step: int, expected: str | None = None):
        self.step = step
        self.expected = expected
        super().__init__(f"step {step}: {message}")


class IncompleteDerivation(ChatvizError):
    """An action sequence that ends before the derivation is complete."""


class OutOfSubset(ChatvizError):
    """SQL that cannot be expressed in the intermediate grammar."""


class UnknownChartType(ChatvizError):
    """A chart type keyword outside the supported vocabulary."""


class ArityMismatch(ChatvizError):
    """Chart data with the wrong number of output columns."""


class NoDataSource(ChatvizError):
    """A chart request with neither its own data part nor a prior SQL result."""


class DerivationOverflow(ChatvizError):
    """Action decoding exceeded the maximum step budget."""


class CheckpointError(ChatvizError):
    """A model checkpoint file that cannot be read or is incompatible."""
