"""Chart queries: a SQL-like surface with a visualization component, compiled
to Vega-Lite specifications.

Surface syntax::

    VISUALIZE <CHART_TYPE> [<select query>] [BIN <column> BY <interval>]

The data part is optional; when omitted, the pipeline falls back to the SQL
response of the most recent data turn.
"""
from __future__ import annotations

import datetime
import json
import math
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .data import Query, Table, Value
from .errors import (
    ArityMismatch,
    NoDataSource,
    SqlSyntaxError,
    UnknownChartType,
)
from .sql.ast import SqlAst
from .sql.canonical import canonical_sql, sql_to_string
from .sql.executor import ResultTable, execute
from .sql.parser import parse_sql

CHART_TYPES = (
    "BAR", "PIE", "LINE", "SCATTER", "STACKED_BAR", "GROUPING_LINE", "GROUPING_SCATTER",
)
GROUPING_TYPES = ("STACKED_BAR", "GROUPING_LINE", "GROUPING_SCATTER")

_MARKS = {
    "BAR": "bar",
    "STACKED_BAR": "bar",
    "PIE": "arc",
    "LINE": "line",
    "GROUPING_LINE": "line",
    "SCATTER": "point",
    "GROUPING_SCATTER": "point",
}

TEMPORAL_INTERVALS = ("YEAR", "MONTH", "WEEKDAY")

BinInterval = Union[str, int, float]


@dataclass(frozen=True)
class Binning:
    column: str
    interval: BinInterval  # YEAR / MONTH / WEEKDAY or a numeric bucket width


@dataclass(frozen=True)
class DvQuery:
    chart_type: str
    data_part: Optional[SqlAst] = None
    binning: Optional[Binning] = None

    def __post_init__(self):
        if self.chart_type not in CHART_TYPES:
            raise UnknownChartType(f"unknown chart type {self.chart_type!r}")
        if self.data_part is not None:
            items = self.data_part.left.select_items if self.data_part.is_compound \
                else self.data_part.select_items
            if not any(i.column == "*" for i in items):
                n = len(items)
                needed = (3,) if self.chart_type in GROUPING_TYPES else (2, 3)
                if n not in needed:
                    raise ArityMismatch(
                        f"{self.chart_type} takes {' or '.join(map(str, needed))} data columns, got {n}"
                    )


@dataclass(frozen=True)
class Channel:
    field: str
    type: str  # nominal | quantitative | temporal


@dataclass(frozen=True)
class VegaLiteSpec:
    mark: str
    x: Channel
    y: Channel
    color: Optional[Channel] = None
    values: tuple[dict, ...] = ()

    def to_dict(self) -> dict:
        encoding = {
            "x": {"field": self.x.field, "type": self.x.type},
            "y": {"field": self.y.field, "type": self.y.type},
        }
        if self.color is not None:
            encoding["color"] = {"field": self.color.field, "type": self.color.type}
        if self.mark == "arc":
            # arc charts angle on the measure and color on the dimension
            encoding = {
                "theta": {"field": self.y.field, "type": self.y.type},
                "color": {"field": self.x.field, "type": self.x.type},
            }
        return {
            "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
            "mark": self.mark,
            "encoding": encoding,
            "data": {"values": [dict(v) for v in self.values]},
        }

    def to_json(self) -> str:
        """Canonical serialization: sorted keys, two-space indent, LF ends."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def validate_spec(spec: VegaLiteSpec) -> None:
    """Structural checks; raises ValueError on any violation."""
    if spec.mark not in set(_MARKS.values()):
        raise ValueError(f"mark {spec.mark!r} outside the allowed set")
    channels = [spec.x, spec.y] + ([spec.color] if spec.color else [])
    for channel in channels:
        if channel.type not in ("nominal", "quantitative", "temporal"):
            raise ValueError(f"bad channel type {channel.type!r}")
    if spec.values:
        keys = set(spec.values[0].keys())
        for record in spec.values:
            if set(record.keys()) != keys:
                raise ValueError("inline records do not share one field set")
        for channel in channels:
            if channel.field not in keys:
                raise ValueError(f"channel field {channel.field!r} missing from records")
    json.dumps(spec.to_dict())  # must be JSON-serializable


_DV_HEAD_RE = re.compile(r"\s*visualize\s+([A-Za-z_]+)\s*", re.IGNORECASE)
_BIN_RE = re.compile(
    r"\s+bin\s+([A-Za-z_][A-Za-z0-9_]*)\s+by\s+([A-Za-z_]+|\d+\.\d+|\d+)\s*$",
    re.IGNORECASE,
)


def parse_dv_query(text: str) -> DvQuery:
    """Parse the chart-query surface; raises on unknown chart types and
    malformed data parts."""
    head = _DV_HEAD_RE.match(text)
    if head is None:
        raise SqlSyntaxError("expected VISUALIZE <CHART_TYPE>", offset=0)
    chart_type = head.group(1).upper()
    if chart_type not in CHART_TYPES:
        raise UnknownChartType(f"unknown chart type {chart_type!r}")
    rest = text[head.end():]

    binning = None
    bin_match = _BIN_RE.search(rest)
    if bin_match is not None:
        column = bin_match.group(1)
        raw = bin_match.group(2)
        if raw.upper() in TEMPORAL_INTERVALS:
            interval: BinInterval = raw.upper()
        elif re.fullmatch(r"\d+\.\d+", raw):
            interval = float(raw)
        elif raw.isdigit():
            interval = int(raw)
        else:
            raise SqlSyntaxError(f"bad bin interval {raw!r}", offset=bin_match.start(2))
        binning = Binning(column=column, interval=interval)
        rest = rest[: bin_match.start()]

    data_part = parse_sql(rest) if rest.strip() else None
    return DvQuery(chart_type=chart_type, data_part=data_part, binning=binning)


def dv_to_string(query: DvQuery, canonical: bool = False) -> str:
    parts = [f"VISUALIZE {query.chart_type}"]
    if query.data_part is not None:
        render = canonical_sql if canonical else sql_to_string
        parts.append(render(query.data_part))
    if query.binning is not None:
        parts.append(f"BIN {query.binning.column} BY {query.binning.interval}")
    return " ".join(parts)


def _column_is_numeric(rows: Sequence[tuple], idx: int) -> bool:
    saw_number = False
    for row in rows:
        value = row[idx]
        if value is None:
            continue
        if isinstance(value, str):
            return False
        saw_number = True
    return saw_number


def _bin_value(value: Value, interval: BinInterval) -> Value:
    if value is None:
        return None
    if isinstance(interval, (int, float)):
        if isinstance(value, str):
            return value
        return math.floor(value / interval) * interval
    text = str(value)
    match = re.match(r"(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?", text)
    if match is None:
        return None
    year = int(match.group(1))
    month = int(match.group(2) or 1)
    day = int(match.group(3) or 1)
    if interval == "YEAR":
        return year
    if interval == "MONTH":
        return month
    return datetime.date(year, month, day).weekday()


def compile_vegalite(query: DvQuery, data: ResultTable) -> VegaLiteSpec:
    """Build the chart specification from executed data (Vega-Lite mark +
    x/y/color channels + inline records)."""
    n = len(data.columns)
    needed = (3,) if query.chart_type in GROUPING_TYPES else (2, 3)
    if n not in needed:
        raise ArityMismatch(
            f"{query.chart_type} takes {' or '.join(map(str, needed))} data columns, got {n}"
        )

    rows = [list(row) for row in data.rows]
    types = []
    for idx, name in enumerate(data.columns):
        numeric = _column_is_numeric(data.rows, idx)
        channel_type = "quantitative" if numeric else "nominal"
        if query.binning is not None and _binned_column(query.binning, name):
            for row in rows:
                row[idx] = _bin_value(row[idx], query.binning.interval)
            if isinstance(query.binning.interval, str):
                channel_type = "temporal"
            else:
                channel_type = "quantitative"
        types.append(channel_type)

    channels = [Channel(field=name, type=t) for name, t in zip(data.columns, types)]
    records = tuple(dict(zip(data.columns, row)) for row in rows)
    spec = VegaLiteSpec(
        mark=_MARKS[query.chart_type],
        x=channels[0],
        y=channels[1],
        color=channels[2] if n == 3 else None,
        values=records,
    )
    validate_spec(spec)
    return spec


def _binned_column(binning: Binning, result_name: str) -> bool:
    # result columns may carry aggregate decoration, e.g. avg(price)
    inner = re.fullmatch(r"\w+\((.*)\)", result_name)
    plain = inner.group(1) if inner else result_name
    return plain.lower() == binning.column.lower()


def resolve_data_part(query: DvQuery, r_sql: Optional[SqlAst]) -> SqlAst:
    """Algorithm: prefer the chart query's own data part, else the SQL
    response of the last data turn."""
    if query.data_part is not None:
        return query.data_part
    if r_sql is not None:
        return r_sql
    raise NoDataSource("chart query has no data part and no prior SQL response")


def chart_pipeline(query: Query, history, model, r_sql: Optional[SqlAst],
                   table: Table) -> tuple[DvQuery, VegaLiteSpec]:
    """End-to-end chart construction: decode the chart query, resolve and run
    its data part, compile the specification. Pixel rendering is client-side.
    """
    dv_query = model.dv_query(query, history, table, r_sql)
    data_sql = resolve_data_part(dv_query, r_sql)
    data = execute(data_sql, table)
    return dv_query, compile_vegalite(dv_query, data)
