"""AST node types for the supported single-table SQL subset."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..data import Value

AGGREGATES = ("max", "min", "count", "sum", "avg")
COMPARISON_OPS = ("=", "!=", "<", ">", "<=", ">=")
LITERAL_OPS = COMPARISON_OPS + ("between", "like", "not_like")
SUBQUERY_OPS = COMPARISON_OPS + ("in", "not_in")
SET_OPS = ("intersect", "union", "except")


@dataclass(frozen=True)
class SelectItem:
    column: str                      # identifier or "*"
    aggregate: Optional[str] = None  # one of AGGREGATES or None
    distinct: bool = False


@dataclass(frozen=True)
class Operand:
    """Left-hand side of a predicate or an ORDER BY expression."""

    column: str
    aggregate: Optional[str] = None


@dataclass(frozen=True)
class Comparison:
    """A leaf predicate: operand against a literal, a range, or a subquery."""

    op: str
    lhs: Operand
    value: Union[Value, tuple[Value, Value], None] = None
    subquery: Optional["SqlAst"] = None

    def __post_init__(self):
        if self.subquery is not None:
            if self.op not in SUBQUERY_OPS:
                raise ValueError(f"operator {self.op!r} cannot take a subquery")
        else:
            if self.op not in LITERAL_OPS:
                raise ValueError(f"operator {self.op!r} requires a subquery")


@dataclass(frozen=True)
class And:
    left: "Condition"
    right: "Condition"


@dataclass(frozen=True)
class Or:
    left: "Condition"
    right: "Condition"


Condition = Union[And, Or, Comparison]


@dataclass(frozen=True)
class OrderBy:
    item: Operand
    direction: str  # "asc" | "desc"


@dataclass(frozen=True)
class SqlAst:
    """One query: either a plain SELECT or a set operation over two queries."""

    select_items: tuple[SelectItem, ...] = ()
    from_table: str = ""
    where_clause: Optional[Condition] = None
    group_by: tuple[str, ...] = ()
    order_by: Optional[OrderBy] = None
    limit: Optional[int] = None
    set_op: Optional[str] = None
    left: Optional["SqlAst"] = None
    right: Optional["SqlAst"] = None

    def __post_init__(self):
        if self.set_op is not None:
            if self.set_op not in SET_OPS:
                raise ValueError(f"unknown set operator {self.set_op!r}")
            if self.left is None or self.right is None:
                raise ValueError("set operation requires both operand queries")
        else:
            if not self.select_items:
                raise ValueError("query requires at least one select item")
            if not self.from_table:
                raise ValueError("query requires a source table")
        if self.limit is not None and self.limit <= 0:
            raise ValueError("limit must be positive")

    @property
    def is_compound(self) -> bool:
        return self.set_op is not None


def conjuncts(cond: Optional[Condition]) -> list[Condition]:
    """Flatten the top-level AND chain of a condition tree."""
    if cond is None:
        return []
    if isinstance(cond, And):
        return conjuncts(cond.left) + conjuncts(cond.right)
    return [cond]


def conjoin(terms: list[Condition]) -> Optional[Condition]:
    """Right-fold a list of conditions back into an AND chain."""
    if not terms:
        return None
    out = terms[-1]
    for term in reversed(terms[:-1]):
        out = And(term, out)
    return out


def has_aggregate(cond: Condition) -> bool:
    """True when any predicate inside the tree aggregates its operand."""
    if isinstance(cond, (And, Or)):
        return has_aggregate(cond.left) or has_aggregate(cond.right)
    return cond.lhs.aggregate is not None
