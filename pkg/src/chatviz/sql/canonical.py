"""Deterministic SQL rendering.

``sql_to_string`` preserves item and conjunct order (used for corpus files
and chart-query surfaces, where select order fixes the axes).
``canonical_sql`` additionally lowercases identifiers and sorts select items
and AND-conjuncts, so queries equal up to commutative reordering compare
equal as strings.
"""
from __future__ import annotations

from dataclasses import replace

from ..data import Value
from .ast import (
    And,
    Comparison,
    Condition,
    Operand,
    Or,
    OrderBy,
    SelectItem,
    SqlAst,
    conjoin,
    conjuncts,
    has_aggregate,
)


def _render_value(value: Value) -> str:
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _render_item(item: SelectItem) -> str:
    if item.aggregate is None:
        return item.column
    inner = f"DISTINCT {item.column}" if item.distinct else item.column
    return f"{item.aggregate.upper()}({inner})"


def _render_operand(op: Operand) -> str:
    if op.aggregate is None:
        return op.column
    return f"{op.aggregate.upper()}({op.column})"


def _render_comparison(comp: Comparison) -> str:
    lhs = _render_operand(comp.lhs)
    if comp.op == "between":
        lo, hi = comp.value
        return f"{lhs} BETWEEN {_render_value(lo)} AND {_render_value(hi)}"
    if comp.op == "like":
        return f"{lhs} LIKE {_render_value(comp.value)}"
    if comp.op == "not_like":
        return f"{lhs} NOT LIKE {_render_value(comp.value)}"
    if comp.op == "in":
        return f"{lhs} IN ({_render(comp.subquery)})"
    if comp.op == "not_in":
        return f"{lhs} NOT IN ({_render(comp.subquery)})"
    if comp.subquery is not None:
        return f"{lhs} {comp.op} ({_render(comp.subquery)})"
    return f"{lhs} {comp.op} {_render_value(comp.value)}"


def _render_condition(cond: Condition) -> str:
    if isinstance(cond, And):
        parts = []
        for term in (cond.left, cond.right):
            text = _render_condition(term)
            if isinstance(term, Or):
                text = f"({text})"
            parts.append(text)
        return " AND ".join(parts)
    if isinstance(cond, Or):
        return f"{_render_condition(cond.left)} OR {_render_condition(cond.right)}"
    return _render_comparison(cond)


def _render(ast: SqlAst) -> str:
    if ast.is_compound:
        return f"{_render(ast.left)} {ast.set_op.upper()} {_render(ast.right)}"

    distinct_all = any(i.distinct and i.aggregate is None for i in ast.select_items)
    head = "SELECT DISTINCT " if distinct_all else "SELECT "
    parts = [head + ", ".join(_render_item(i) for i in ast.select_items),
             f"FROM {ast.from_table}"]

    where_terms = [t for t in conjuncts(ast.where_clause) if not has_aggregate(t)]
    having_terms = [t for t in conjuncts(ast.where_clause) if has_aggregate(t)]
    if where_terms:
        parts.append("WHERE " + _render_condition(conjoin(where_terms)))
    if ast.group_by:
        parts.append("GROUP BY " + ", ".join(ast.group_by))
    if having_terms:
        parts.append("HAVING " + _render_condition(conjoin(having_terms)))
    if ast.order_by is not None:
        parts.append(f"ORDER BY {_render_operand(ast.order_by.item)} {ast.order_by.direction.upper()}")
    if ast.limit is not None:
        parts.append(f"LIMIT {ast.limit}")
    return " ".join(parts)


def sql_to_string(ast: SqlAst) -> str:
    """Order-preserving deterministic rendering."""
    return _render(ast)


def _canonicalize_condition(cond: Condition) -> Condition:
    if isinstance(cond, And):
        terms = [_canonicalize_condition(t) for t in conjuncts(cond)]
        terms.sort(key=_render_condition)
        return conjoin(terms)
    if isinstance(cond, Or):
        return Or(_canonicalize_condition(cond.left), _canonicalize_condition(cond.right))
    lhs = Operand(column=cond.lhs.column.lower(), aggregate=cond.lhs.aggregate)
    sub = _canonicalize(cond.subquery) if cond.subquery is not None else None
    return Comparison(op=cond.op, lhs=lhs, value=cond.value, subquery=sub)


def _canonicalize(ast: SqlAst) -> SqlAst:
    if ast.is_compound:
        return replace(ast, left=_canonicalize(ast.left), right=_canonicalize(ast.right))
    items = tuple(sorted(
        (replace(i, column=i.column.lower()) for i in ast.select_items),
        key=_render_item,
    ))
    where = _canonicalize_condition(ast.where_clause) if ast.where_clause is not None else None
    order = None
    if ast.order_by is not None:
        order = OrderBy(
            Operand(ast.order_by.item.column.lower(), ast.order_by.item.aggregate),
            ast.order_by.direction,
        )
    return replace(
        ast,
        select_items=items,
        from_table=ast.from_table.lower(),
        where_clause=where,
        group_by=tuple(sorted(c.lower() for c in ast.group_by)),
        order_by=order,
    )


def canonical_sql(ast: SqlAst) -> str:
    """Canonical rendering: sorted commutative positions, lowercase identifiers."""
    return _render(_canonicalize(ast))
