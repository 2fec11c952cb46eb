"""Core domain types: tables, queries, responses and dialogue sessions.

All types are immutable after construction and safe to share across
concurrent readers.
"""
from __future__ import annotations

import csv
import enum
import os
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional, Union

from .errors import CorpusError, ParseError, SchemaError

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .dv import DvQuery, VegaLiteSpec
    from .sql.ast import SqlAst
    from .sql.executor import ResultTable

Value = Union[str, int, float, None]

# Column kinds ordered from most to least specific: integer < real < text.
KIND_INTEGER = "integer"
KIND_REAL = "real"
KIND_TEXT = "text"
KINDS = (KIND_INTEGER, KIND_REAL, KIND_TEXT)


@dataclass(frozen=True)
class Column:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown column kind {self.kind!r}")


@dataclass(frozen=True)
class Table:
    """A named dataset: typed columns plus value rows."""

    name: str
    columns: tuple[Column, ...]
    rows: tuple[tuple[Value, ...], ...]

    def __post_init__(self):
        seen = set()
        for col in self.columns:
            low = col.name.lower()
            if low in seen:
                raise SchemaError(f"duplicate column name {col.name!r}")
            seen.add(low)
        arity = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != arity:
                raise SchemaError(f"row {i} has {len(row)} values, expected {arity}")
            for col, value in zip(self.columns, row):
                if value is None:
                    continue
                if col.kind in (KIND_INTEGER, KIND_REAL) and isinstance(value, str):
                    raise SchemaError(
                        f"non-numeric value {value!r} in numeric column {col.name!r}"
                    )

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column_index(self, name: str) -> int:
        """Case-insensitive column lookup; raises KeyError when absent."""
        low = name.lower()
        for i, col in enumerate(self.columns):
            if col.name.lower() == low:
                return i
        raise KeyError(name)

    def column(self, name: str) -> Column:
        return self.columns[self.column_index(name)]


class Modality(enum.Enum):
    TEXT = "text"
    SQL = "sql"
    DV = "dv"


@dataclass(frozen=True)
class Query:
    """One user utterance within a session."""

    text: str
    turn_index: int

    def __post_init__(self):
        if not self.text:
            raise CorpusError("query text must be non-empty")
        if self.turn_index < 0:
            raise CorpusError("turn_index must be non-negative")


@dataclass(frozen=True)
class Response:
    """A system reply: exactly one body matching the modality."""

    modality: Modality
    text_body: Optional[str] = None
    sql_body: Optional["SqlAst"] = None
    dv_body: Optional["DvQuery"] = None
    rendered: Optional[Union["ResultTable", "VegaLiteSpec"]] = None

    def __post_init__(self):
        bodies = {
            Modality.TEXT: self.text_body,
            Modality.SQL: self.sql_body,
            Modality.DV: self.dv_body,
        }
        present = [m for m, b in bodies.items() if b is not None]
        if present != [self.modality]:
            raise CorpusError(
                f"response must carry exactly the {self.modality.value} body, got {[m.value for m in present]}"
            )
        if self.rendered is not None and self.modality is Modality.TEXT:
            raise CorpusError("rendered payload is only valid for sql/dv responses")


@dataclass(frozen=True)
class DialogueSession:
    """An ordered query/response transcript bound to one dataset."""

    id: str
    dataset_ref: str
    turns: tuple[tuple[Query, Response], ...]

    def __post_init__(self):
        for i, (query, _) in enumerate(self.turns):
            if query.turn_index != i:
                raise CorpusError(
                    f"turn index {query.turn_index} at position {i}",
                    session_id=self.id, turn=i,
                )

    def validate_gold(self) -> None:
        """Gold sessions must close with a chart turn."""
        if not self.turns:
            raise CorpusError("gold session has no turns", session_id=self.id)
        last = self.turns[-1][1]
        if last.modality is not Modality.DV:
            raise CorpusError(
                "gold session must end with a dv turn",
                session_id=self.id, turn=len(self.turns) - 1,
            )


@dataclass(frozen=True)
class TrainingSample:
    """One supervised step: (dataset, history, query) -> gold response."""

    dataset_ref: str
    history: tuple[tuple[Query, Response], ...]
    query: Query
    gold: Response
    session_id: str = ""


def samples_from_session(session: DialogueSession) -> list[TrainingSample]:
    out = []
    for i, (query, response) in enumerate(session.turns):
        out.append(TrainingSample(
            dataset_ref=session.dataset_ref,
            history=session.turns[:i],
            query=query,
            gold=response,
            session_id=session.id,
        ))
    return out


def samples_from_sessions(sessions: Iterable[DialogueSession]) -> list[TrainingSample]:
    out: list[TrainingSample] = []
    for session in sessions:
        out.extend(samples_from_session(session))
    return out


_INT_RE = re.compile(r"[+-]?\d+\Z")
_REAL_RE = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?\Z")


def _cell_kind(cell: str) -> str:
    """Most specific kind a single cell value can carry."""
    if _INT_RE.match(cell):
        return KIND_INTEGER
    if _REAL_RE.match(cell):
        return KIND_REAL
    return KIND_TEXT


def _weakest(a: str, b: str) -> str:
    return a if KINDS.index(a) >= KINDS.index(b) else b


def _convert(cell: str, kind: str) -> Value:
    if cell == "":
        return None
    if kind == KIND_INTEGER:
        return int(cell)
    if kind == KIND_REAL:
        return float(cell)
    return cell


def load_table(path: str, name: str | None = None) -> Table:
    """Load a CSV file (UTF-8, comma-separated, first line header).

    Column kinds are inferred as the weakest kind consistent with every
    non-empty cell; empty cells become null.
    """
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected a header line", line=1)
        lowered = [h.lower() for h in header]
        if len(set(lowered)) != len(lowered):
            dupes = sorted({h for h in lowered if lowered.count(h) > 1})
            raise SchemaError(f"duplicate header names: {', '.join(dupes)}")
        raw_rows: list[list[str]] = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(
                    f"row has {len(row)} cells, expected {len(header)}", line=line_no
                )
            raw_rows.append(row)

    kinds = [KIND_INTEGER] * len(header)
    for row in raw_rows:
        for i, cell in enumerate(row):
            if cell == "":
                continue
            kinds[i] = _weakest(kinds[i], _cell_kind(cell))

    columns = tuple(Column(h, k) for h, k in zip(header, kinds))
    rows = tuple(
        tuple(_convert(cell, kinds[i]) for i, cell in enumerate(row))
        for row in raw_rows
    )
    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    return Table(name=name, columns=columns, rows=rows)
