"""Compile derivation trees to SQL and parse SQL back into derivations.

The grammar has no GROUP BY symbol: grouping is implicit. Whenever a query
mixes aggregated and bare projection columns (or filters/orders on an
aggregate), the bare projection columns become the group key.

Filter literals (the ``100`` in ``price > 100``) are not part of the action
vocabulary; they ride on the tree nodes and, at inference time, are copied
out of the query text by :func:`attach_literals`.
"""
from __future__ import annotations

import re
from dataclasses import replace
from typing import Optional, Union

from ..data import KIND_TEXT, Table
from ..errors import OutOfSubset, UnresolvedColumn
from ..sql.ast import (
    And,
    Comparison,
    Condition,
    Operand,
    Or,
    OrderBy,
    SelectItem,
    SqlAst,
)
from .grammar import (
    STAR_INDEX,
    ColumnRef,
    Grammar,
    SemQlNode,
    define_grammar,
)

_COMPARISON_LABELS = ("=", "!=", "<", ">", "<=", ">=")
_LITERAL_LABELS = _COMPARISON_LABELS + ("between", "like", "not_like")
_SUBQUERY_LABELS = ("=R", "!=R", "<R", ">R", "in", "not_in")


def _column_name(ref: ColumnRef, table: Table) -> str:
    if ref.column_index is None:
        raise UnresolvedColumn("column leaf has no resolved index")
    if ref.column_index == STAR_INDEX:
        return "*"
    return table.columns[ref.column_index - 1].name


def column_pointer_index(name: str, table: Table) -> int:
    if name == "*":
        return STAR_INDEX
    return table.column_index(name) + 1


def _operand_of(a_node: SemQlNode, table: Table) -> Operand:
    agg = None if a_node.label == "none" else a_node.label
    return Operand(column=_column_name(a_node.children[0], table), aggregate=agg)


def _placeholder(label: str, column: str, table: Table):
    """Type-consistent stand-in literal when none was extracted."""
    kind = KIND_TEXT
    if column != "*":
        kind = table.column(column).kind
    if label == "between":
        return ("a", "b") if kind == KIND_TEXT else (0, 1)
    if label in ("like", "not_like"):
        return "%v%"
    return "v" if kind == KIND_TEXT else 1


def _compile_filter(node: SemQlNode, table: Table) -> Condition:
    label = node.label
    if label in ("and", "or"):
        left = _compile_filter(node.children[0], table)
        right = _compile_filter(node.children[1], table)
        return And(left, right) if label == "and" else Or(left, right)
    lhs = _operand_of(node.children[0], table)
    if label in _SUBQUERY_LABELS:
        sub = _compile_r(node.children[1], table)
        op = label[:-1] if label.endswith("R") else label
        return Comparison(op=op, lhs=lhs, subquery=sub)
    value = node.literal
    if value is None:
        value = _placeholder(label, lhs.column, table)
    return Comparison(op=label, lhs=lhs, value=value)


def _compile_r(node: SemQlNode, table: Table) -> SqlAst:
    select_node = node.children[0]
    order_node = sup_node = filter_node = None
    for child in node.children[1:]:
        if child.lhs == "Order":
            order_node = child
        elif child.lhs == "Superlative":
            sup_node = child
        elif child.lhs == "Filter":
            filter_node = child

    items = []
    for a_node in select_node.children:
        agg = None if a_node.label == "none" else a_node.label
        items.append(SelectItem(column=_column_name(a_node.children[0], table), aggregate=agg))

    where = _compile_filter(filter_node, table) if filter_node is not None else None

    order_by = None
    limit = None
    if order_node is not None:
        order_by = OrderBy(_operand_of(order_node.children[0], table), order_node.label)
    if sup_node is not None:
        direction = "desc" if sup_node.label == "most" else "asc"
        order_by = OrderBy(_operand_of(sup_node.children[0], table), direction)
        limit = 1

    bare = [i.column for i in items if i.aggregate is None and i.column != "*"]
    any_aggregate = (
        any(i.aggregate is not None for i in items)
        or (where is not None and _condition_has_aggregate(where))
        or (order_by is not None and order_by.item.aggregate is not None)
    )
    group_by = tuple(bare) if (any_aggregate and bare) else ()

    return SqlAst(
        select_items=tuple(items),
        from_table=table.name,
        where_clause=where,
        group_by=group_by,
        order_by=order_by,
        limit=limit,
    )


def _condition_has_aggregate(cond: Condition) -> bool:
    if isinstance(cond, (And, Or)):
        return _condition_has_aggregate(cond.left) or _condition_has_aggregate(cond.right)
    return cond.lhs.aggregate is not None


def semql_to_sql(ast: SemQlNode, table: Table) -> SqlAst:
    """Deterministic SQL for a resolved derivation tree."""
    grammar = define_grammar()
    if ast.label == "plain":
        return _compile_r(ast.children[0], table)
    return SqlAst(
        set_op=ast.label,
        left=_compile_r(ast.children[0], table),
        right=_compile_r(ast.children[1], table),
    )


# -- SQL -> derivation tree (gold-label construction) -------------------------


def _a_node(grammar: Grammar, aggregate: Optional[str], column: str, table: Table) -> SemQlNode:
    label = aggregate or "none"
    prod = grammar.find("A", label)
    ref = ColumnRef(column_index=column_pointer_index(column, table))
    return SemQlNode(rule_id=prod.rule_id, children=(ref,))


def _filter_node(grammar: Grammar, cond: Condition, table: Table) -> SemQlNode:
    if isinstance(cond, (And, Or)):
        label = "and" if isinstance(cond, And) else "or"
        prod = grammar.find("Filter", label)
        return SemQlNode(rule_id=prod.rule_id, children=(
            _filter_node(grammar, cond.left, table),
            _filter_node(grammar, cond.right, table),
        ))
    lhs = _a_node(grammar, cond.lhs.aggregate, cond.lhs.column, table)
    if cond.subquery is not None:
        label = cond.op if cond.op in ("in", "not_in") else cond.op + "R"
        try:
            prod = grammar.find("Filter", label)
        except KeyError:
            raise OutOfSubset(f"subquery comparison {cond.op!r} is not expressible")
        sub = _r_node(grammar, cond.subquery, table)
        return SemQlNode(rule_id=prod.rule_id, children=(lhs, sub))
    prod = grammar.find("Filter", cond.op)
    return SemQlNode(rule_id=prod.rule_id, children=(lhs,), literal=cond.value)


def _r_node(grammar: Grammar, ast: SqlAst, table: Table) -> SemQlNode:
    if ast.is_compound:
        raise OutOfSubset("set operations are only expressible at the top level")
    if len(ast.select_items) > 4:
        raise OutOfSubset("more than 4 select items")
    if any(i.distinct for i in ast.select_items):
        raise OutOfSubset("DISTINCT is not expressible")

    bare = [i.column.lower() for i in ast.select_items if i.aggregate is None and i.column != "*"]
    if ast.group_by and sorted(c.lower() for c in ast.group_by) != sorted(bare):
        raise OutOfSubset("GROUP BY key must equal the bare select columns")

    arity_label = ("one", "two", "three", "four")[len(ast.select_items) - 1]
    select = SemQlNode(
        rule_id=grammar.find("Select", arity_label).rule_id,
        children=tuple(_a_node(grammar, i.aggregate, i.column, table) for i in ast.select_items),
    )

    order_child = None
    if ast.order_by is not None and ast.limit == 1:
        label = "most" if ast.order_by.direction == "desc" else "least"
        order_child = SemQlNode(
            rule_id=grammar.find("Superlative", label).rule_id,
            children=(_a_node(grammar, ast.order_by.item.aggregate, ast.order_by.item.column, table),),
        )
        r_label_order = "sup"
    elif ast.order_by is not None:
        if ast.limit is not None:
            raise OutOfSubset("LIMIT other than 1 is not expressible")
        order_child = SemQlNode(
            rule_id=grammar.find("Order", ast.order_by.direction).rule_id,
            children=(_a_node(grammar, ast.order_by.item.aggregate, ast.order_by.item.column, table),),
        )
        r_label_order = "order"
    elif ast.limit is not None:
        raise OutOfSubset("LIMIT without ORDER BY is not expressible")
    else:
        r_label_order = None

    filter_child = _filter_node(grammar, ast.where_clause, table) if ast.where_clause is not None else None

    if r_label_order is None and filter_child is None:
        label, children = "select", (select,)
    elif r_label_order is None:
        label, children = "select_filter", (select, filter_child)
    elif filter_child is None:
        label, children = f"select_{r_label_order}", (select, order_child)
    else:
        label, children = f"select_{r_label_order}_filter", (select, order_child, filter_child)
    return SemQlNode(rule_id=grammar.find("R", label).rule_id, children=children)


def sql_to_semql(ast: SqlAst, table: Table) -> SemQlNode:
    """Derivation tree for a query inside the expressible subset."""
    grammar = define_grammar()
    if ast.is_compound:
        prod = grammar.find("Z", ast.set_op)
        return SemQlNode(rule_id=prod.rule_id, children=(
            _r_node(grammar, ast.left, table),
            _r_node(grammar, ast.right, table),
        ))
    prod = grammar.find("Z", "plain")
    return SemQlNode(rule_id=prod.rule_id, children=(_r_node(grammar, ast, table),))


# -- literal extraction --------------------------------------------------------

_NUMBER_RE = re.compile(r"\d+\.\d+|\d+")
_QUOTED_RE = re.compile(r"'([^']*)'|\"([^\"]*)\"")


def _text_pool(query_text: str) -> tuple[list[Union[int, float]], list[str]]:
    numbers: list[Union[int, float]] = []
    for token in _NUMBER_RE.findall(query_text):
        numbers.append(float(token) if "." in token else int(token))
    strings = [a or b for a, b in _QUOTED_RE.findall(query_text)]
    return numbers, strings


def attach_literals(ast: SemQlNode, query_text: str, table: Table) -> SemQlNode:
    """Fill filter literal slots from the query text, pre-order.

    Numeric slots consume numbers in order of appearance, text slots consume
    quoted strings; LIKE patterns wrap the extracted string in ``%``.
    Exhausted pools fall back to type placeholders at compile time.
    """
    numbers, strings = _text_pool(query_text)

    def numeric_slot(column: str) -> bool:
        if column == "*":
            return False
        return table.column(column).kind != KIND_TEXT

    def walk(node: Union[SemQlNode, ColumnRef]):
        if isinstance(node, ColumnRef):
            return node
        label = node.label
        literal = node.literal
        if node.lhs == "Filter" and label in _LITERAL_LABELS:
            column = _column_name(node.children[0].children[0], table)
            if label == "between":
                pool = numbers if numeric_slot(column) else strings
                if len(pool) >= 2:
                    literal = (pool.pop(0), pool.pop(0))
            elif label in ("like", "not_like"):
                if strings:
                    literal = f"%{strings.pop(0)}%"
            elif numeric_slot(column):
                if numbers:
                    literal = numbers.pop(0)
            else:
                if strings:
                    literal = strings.pop(0)
        children = tuple(walk(c) for c in node.children)
        return replace(node, children=children, literal=literal)

    return walk(ast)
