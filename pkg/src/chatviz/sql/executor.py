"""Execute the SQL subset against in-memory tables.

Semantics (shared with the brute-force test oracle, implemented there
independently):

* comparisons involving a null operand or a null literal are not satisfied;
* equality unifies int/real; ``=`` across text and numeric kinds is false and
  ``!=`` across kinds is true; ordering comparisons across kinds are not
  satisfied, and on two text values are lexicographic;
* LIKE matches ``%``/``_`` wildcards, case-sensitively, against ``str(value)``;
* IN / NOT IN take a one-column subquery; null members are ignored;
* a comparison against a scalar subquery uses the subquery's first output
  cell, or null when the subquery yields no rows;
* aggregates ignore nulls, ``count(*)`` counts rows, ``sum``/``avg``/``min``/
  ``max`` over an empty or all-null input yield null; an output row whose
  cells are all null is omitted;
* predicates whose operand carries an aggregate filter groups (HAVING
  placement); a conjunct mixing aggregated and plain operands is evaluated at
  group level, where plain operands read the group's first row;
* group-by output is ordered by group key ascending, ungrouped output keeps
  input row order, ORDER BY overrides both (stable sort); set operations
  deduplicate and emit rows in sorted order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

from ..data import Table, Value
from ..errors import SchemaError, SubqueryArityError, TypeMismatch, UnknownColumn
from .ast import (
    And,
    Comparison,
    Condition,
    Operand,
    Or,
    SelectItem,
    SqlAst,
    conjuncts,
    has_aggregate,
)


@dataclass(frozen=True)
class ResultTable:
    """Execution output: decorated column names plus value rows."""

    columns: tuple[str, ...]
    rows: tuple[tuple[Value, ...], ...]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise SchemaError("result row arity mismatch")


def _sort_key(value: Value):
    """Total order over nulls, numbers and strings for deterministic output."""
    if value is None:
        return (0, 0, 0)
    if isinstance(value, str):
        return (1, 1, value)
    return (1, 0, float(value))


def _row_key(row: tuple[Value, ...]):
    return tuple(_sort_key(v) for v in row)


def _like_match(pattern: str, value: Value) -> bool:
    if value is None:
        return False
    regex = ""
    for ch in pattern:
        if ch == "%":
            regex += ".*"
        elif ch == "_":
            regex += "."
        else:
            regex += re.escape(ch)
    return re.fullmatch(regex, _value_text(value)) is not None


def _value_text(value: Value) -> str:
    if isinstance(value, str):
        return value
    return str(value)


def _is_number(value: Value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _compare(op: str, left: Value, right: Value) -> bool:
    if left is None or right is None:
        return False
    both_numeric = _is_number(left) and _is_number(right)
    both_text = isinstance(left, str) and isinstance(right, str)
    if op == "=":
        return left == right if (both_numeric or both_text) else False
    if op == "!=":
        return left != right if (both_numeric or both_text) else True
    if not (both_numeric or both_text):
        return False
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise ValueError(f"unknown comparison operator {op!r}")


def _aggregate(agg: str, column_values: list[Value], n_rows: int, distinct: bool = False) -> Value:
    if agg == "count":
        if column_values is None:  # count(*)
            return n_rows
        present = [v for v in column_values if v is not None]
        if distinct:
            return len(set(present))
        return len(present)
    present = [v for v in column_values if v is not None]
    if distinct:
        seen, uniq = set(), []
        for v in present:
            if v not in seen:
                seen.add(v)
                uniq.append(v)
        present = uniq
    if not present:
        return None
    if agg in ("sum", "avg"):
        if any(isinstance(v, str) for v in present):
            raise TypeMismatch(f"{agg} over a text column")
        total = sum(present)
        return total if agg == "sum" else total / len(present)
    if agg in ("min", "max"):
        # mixed text/numeric would be unorderable; kinds are uniform per column
        return min(present) if agg == "min" else max(present)
    raise ValueError(f"unknown aggregate {agg!r}")


class _Executor:
    def __init__(self, table: Table):
        self.table = table

    def resolve(self, name: str) -> int:
        try:
            return self.table.column_index(name)
        except KeyError:
            raise UnknownColumn(f"unknown column {name!r} in table {self.table.name!r}")

    def operand_over_rows(self, operand: Operand, rows: list[tuple[Value, ...]]) -> Value:
        """Aggregate-operand value over a group of rows."""
        if operand.aggregate is None:
            raise ValueError("plain operand evaluated without a row context")
        if operand.column == "*":
            if operand.aggregate != "count":
                raise TypeMismatch(f"{operand.aggregate}(*) is not defined")
            return _aggregate("count", None, len(rows))
        idx = self.resolve(operand.column)
        return _aggregate(operand.aggregate, [r[idx] for r in rows], len(rows))

    # -- predicates --------------------------------------------------------
    def comparison_rhs(self, comp: Comparison):
        """Pre-evaluate the right-hand side (subquery results are cached)."""
        if comp.subquery is None:
            return comp.value
        sub = execute(comp.subquery, self.table)
        if len(sub.columns) != 1:
            raise SubqueryArityError(
                f"subquery yields {len(sub.columns)} columns, expected 1"
            )
        if comp.op in ("in", "not_in"):
            return {row[0] for row in sub.rows if row[0] is not None}
        return sub.rows[0][0] if sub.rows else None

    def eval_comparison(self, comp: Comparison, lhs_value: Value, rhs) -> bool:
        if comp.op == "between":
            lo, hi = rhs
            return _compare(">=", lhs_value, lo) and _compare("<=", lhs_value, hi)
        if comp.op == "like":
            return lhs_value is not None and _like_match(str(rhs), lhs_value)
        if comp.op == "not_like":
            return lhs_value is not None and not _like_match(str(rhs), lhs_value)
        if comp.op == "in":
            return lhs_value is not None and lhs_value in rhs
        if comp.op == "not_in":
            return lhs_value is not None and lhs_value not in rhs
        return _compare(comp.op, lhs_value, rhs)

    def eval_condition(self, cond: Condition, get_operand: Callable[[Operand], Value],
                       rhs_cache: dict[int, object]) -> bool:
        if isinstance(cond, And):
            return (self.eval_condition(cond.left, get_operand, rhs_cache)
                    and self.eval_condition(cond.right, get_operand, rhs_cache))
        if isinstance(cond, Or):
            return (self.eval_condition(cond.left, get_operand, rhs_cache)
                    or self.eval_condition(cond.right, get_operand, rhs_cache))
        key = id(cond)
        if key not in rhs_cache:
            rhs_cache[key] = self.comparison_rhs(cond)
        return self.eval_comparison(cond, get_operand(cond.lhs), rhs_cache[key])

    # -- query shapes --------------------------------------------------------
    def run(self, ast: SqlAst) -> ResultTable:
        row_terms, group_terms = [], []
        for term in conjuncts(ast.where_clause):
            (group_terms if has_aggregate(term) else row_terms).append(term)
        rhs_cache: dict[int, object] = {}

        rows = list(self.table.rows)
        for term in row_terms:
            kept = []
            for row in rows:
                def from_row(operand: Operand, row=row) -> Value:
                    if operand.column == "*":
                        raise TypeMismatch("'*' is not valid in a predicate")
                    return row[self.resolve(operand.column)]
                if self.eval_condition(term, from_row, rhs_cache):
                    kept.append(row)
            rows = kept

        items = self.expand_star(ast.select_items)
        has_agg_select = any(i.aggregate is not None for i in items)
        order_has_agg = ast.order_by is not None and ast.order_by.item.aggregate is not None
        grouped = bool(ast.group_by) or has_agg_select or bool(group_terms) or order_has_agg

        if grouped:
            result_rows = self.run_grouped(ast, items, rows, group_terms, rhs_cache)
        else:
            if ast.order_by is not None:
                idx = self.resolve(ast.order_by.item.column)
                rows = sorted(rows, key=lambda r: _sort_key(r[idx]),
                              reverse=ast.order_by.direction == "desc")
            result_rows = [tuple(row[self.resolve(i.column)] for i in items) for row in rows]
            if any(i.distinct for i in items):
                seen, uniq = set(), []
                for row in result_rows:
                    if row not in seen:
                        seen.add(row)
                        uniq.append(row)
                result_rows = uniq

        result_rows = [r for r in result_rows if any(v is not None for v in r)]
        if ast.limit is not None:
            result_rows = result_rows[: ast.limit]
        return ResultTable(
            columns=tuple(self.item_name(i) for i in items),
            rows=tuple(result_rows),
        )

    def run_grouped(self, ast: SqlAst, items: list[SelectItem],
                    rows: list[tuple[Value, ...]], group_terms: list[Condition],
                    rhs_cache: dict[int, object]) -> list[tuple[Value, ...]]:
        if ast.group_by:
            key_idx = [self.resolve(c) for c in ast.group_by]
            groups: dict[tuple, list] = {}
            for row in rows:
                groups.setdefault(tuple(row[i] for i in key_idx), []).append(row)
            ordered = sorted(groups.items(), key=lambda kv: _row_key(kv[0]))
            group_rows = [v for _, v in ordered]
        else:
            group_rows = [rows]  # one global group (possibly empty)

        for item in items:
            if item.aggregate is None and not ast.group_by:
                raise SchemaError(
                    f"bare column {item.column!r} in an aggregate query without GROUP BY"
                )
            if item.aggregate is None and item.column.lower() not in [c.lower() for c in ast.group_by]:
                # lenient: resolved against the group's first row below
                self.resolve(item.column)

        out = []
        for group in group_rows:
            def from_group(operand: Operand, group=group) -> Value:
                if operand.aggregate is not None:
                    return self.operand_over_rows(operand, group)
                if not group:
                    return None
                return group[0][self.resolve(operand.column)]

            keep = all(self.eval_condition(t, from_group, rhs_cache) for t in group_terms)
            if not keep:
                continue
            cells = []
            for item in items:
                if item.aggregate is not None:
                    if item.column == "*":
                        if item.aggregate != "count":
                            raise TypeMismatch(f"{item.aggregate}(*) is not defined")
                        cells.append(_aggregate("count", None, len(group)))
                    else:
                        idx = self.resolve(item.column)
                        cells.append(_aggregate(
                            item.aggregate, [r[idx] for r in group], len(group),
                            distinct=item.distinct,
                        ))
                else:
                    cells.append(group[0][self.resolve(item.column)] if group else None)
            out.append((tuple(cells), from_group))

        if ast.order_by is not None:
            op = ast.order_by.item
            out = sorted(out, key=lambda pair: _sort_key(pair[1](op)),
                         reverse=ast.order_by.direction == "desc")
        return [cells for cells, _ in out]

    def expand_star(self, items: tuple[SelectItem, ...]) -> list[SelectItem]:
        expanded: list[SelectItem] = []
        for item in items:
            if item.column == "*" and item.aggregate is None:
                expanded.extend(SelectItem(column=c.name, distinct=item.distinct)
                                for c in self.table.columns)
            else:
                if item.column != "*":
                    self.resolve(item.column)
                expanded.append(item)
        return expanded

    def item_name(self, item: SelectItem) -> str:
        name = item.column if item.column == "*" else self.table.columns[self.resolve(item.column)].name
        if item.aggregate is None:
            return name
        inner = f"distinct {name}" if item.distinct else name
        return f"{item.aggregate}({inner})"


def execute(ast: SqlAst, table: Table) -> ResultTable:
    """Run a query; deterministic row order per the module semantics."""
    if ast.is_compound:
        left = execute(ast.left, table)
        right = execute(ast.right, table)
        if len(left.columns) != len(right.columns):
            raise SchemaError(
                f"set operation arity mismatch: {len(left.columns)} vs {len(right.columns)}"
            )
        left_set = set(left.rows)
        right_set = set(right.rows)
        if ast.set_op == "union":
            combined = left_set | right_set
        elif ast.set_op == "intersect":
            combined = left_set & right_set
        else:
            combined = left_set - right_set
        rows = tuple(sorted(combined, key=_row_key))
        return ResultTable(columns=left.columns, rows=rows)
    return _Executor(table).run(ast)
