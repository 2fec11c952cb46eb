"""Grammar-based intermediate query representation.

Queries are derivation trees over a frozen production table; a derivation is
equivalently a flat sequence of actions (apply a production, or point at a
schema column), which is the form the structured decoder emits. Production
order below is frozen: rule ids are stable across runs and checkpoints.

Column indices follow the pointer convention: index 0 is the pseudo-column
``*``, index ``k`` (k >= 1) is schema column ``k - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from ..errors import (
    IllegalAction,
    IncompleteDerivation,
    NotDerivable,
    UnresolvedColumn,
)

APPLY_RULE = "ApplyRule"
SELECT_COLUMN = "SelectColumn"

STAR_INDEX = 0  # pointer index of the pseudo-column "*"


@dataclass(frozen=True)
class Production:
    rule_id: int
    lhs: str
    label: str
    rhs: tuple[str, ...]


_PRODUCTION_SPECS = [
    # query root: optional set operation over two plain queries
    ("Z", "intersect", ("R", "R")),
    ("Z", "union", ("R", "R")),
    ("Z", "except", ("R", "R")),
    ("Z", "plain", ("R",)),
    # one query: projection plus optional ordering / superlative / filter
    ("R", "select", ("Select",)),
    ("R", "select_filter", ("Select", "Filter")),
    ("R", "select_order", ("Select", "Order")),
    ("R", "select_sup", ("Select", "Superlative")),
    ("R", "select_order_filter", ("Select", "Order", "Filter")),
    ("R", "select_sup_filter", ("Select", "Superlative", "Filter")),
    # projection arity 1..4
    ("Select", "one", ("A",)),
    ("Select", "two", ("A", "A")),
    ("Select", "three", ("A", "A", "A")),
    ("Select", "four", ("A", "A", "A", "A")),
    # aggregated column
    ("A", "none", ("C",)),
    ("A", "max", ("C",)),
    ("A", "min", ("C",)),
    ("A", "count", ("C",)),
    ("A", "sum", ("C",)),
    ("A", "avg", ("C",)),
    # filters
    ("Filter", "and", ("Filter", "Filter")),
    ("Filter", "or", ("Filter", "Filter")),
    ("Filter", "=", ("A",)),
    ("Filter", "!=", ("A",)),
    ("Filter", "<", ("A",)),
    ("Filter", ">", ("A",)),
    ("Filter", "<=", ("A",)),
    ("Filter", ">=", ("A",)),
    ("Filter", "between", ("A",)),
    ("Filter", "like", ("A",)),
    ("Filter", "not_like", ("A",)),
    ("Filter", "=R", ("A", "R")),
    ("Filter", "!=R", ("A", "R")),
    ("Filter", "<R", ("A", "R")),
    ("Filter", ">R", ("A", "R")),
    ("Filter", "in", ("A", "R")),
    ("Filter", "not_in", ("A", "R")),
    # ordering
    ("Order", "asc", ("A",)),
    ("Order", "desc", ("A",)),
    # top-1 by an expression
    ("Superlative", "most", ("A",)),
    ("Superlative", "least", ("A",)),
]


@dataclass(frozen=True)
class Grammar:
    productions: tuple[Production, ...]

    @property
    def n_a(self) -> int:
        return len(self.productions)

    def by_lhs(self, lhs: str) -> tuple[Production, ...]:
        return tuple(p for p in self.productions if p.lhs == lhs)

    def find(self, lhs: str, label: str) -> Production:
        for p in self.productions:
            if p.lhs == lhs and p.label == label:
                return p
        raise KeyError((lhs, label))

    def nonterminals(self) -> frozenset[str]:
        symbols = {p.lhs for p in self.productions}
        symbols.add("C")
        return frozenset(symbols)


_GRAMMAR = Grammar(tuple(
    Production(i, lhs, label, rhs) for i, (lhs, label, rhs) in enumerate(_PRODUCTION_SPECS)
))


def define_grammar() -> Grammar:
    """The frozen production table used by the structured decoder."""
    return _GRAMMAR


@dataclass(frozen=True)
class Action:
    """One decoding step: apply a production or point at a column."""

    kind: str
    rule_id: Optional[int] = None
    column_index: Optional[int] = None

    def __post_init__(self):
        if self.kind == APPLY_RULE:
            if self.rule_id is None or self.column_index is not None:
                raise ValueError("ApplyRule carries exactly a rule_id")
            if not 0 <= self.rule_id < _GRAMMAR.n_a:
                raise ValueError(f"rule_id {self.rule_id} out of range")
        elif self.kind == SELECT_COLUMN:
            if self.column_index is None or self.rule_id is not None:
                raise ValueError("SelectColumn carries exactly a column_index")
            if self.column_index < 0:
                raise ValueError("column_index must be non-negative")
        else:
            raise ValueError(f"unknown action kind {self.kind!r}")

    def serialize(self) -> str:
        if self.kind == APPLY_RULE:
            return f"R{self.rule_id}"
        return f"C{self.column_index}"


def apply_rule(rule_id: int) -> Action:
    return Action(kind=APPLY_RULE, rule_id=rule_id)


def select_column(index: int) -> Action:
    return Action(kind=SELECT_COLUMN, column_index=index)


ActionSequence = tuple[Action, ...]

SKETCH_PLACEHOLDER = "C?"

Sketch = tuple[str, ...]


def parse_action_text(text: str) -> ActionSequence:
    """Parse the space-separated ``R<id>`` / ``C<index>`` serialization."""
    actions = []
    for token in text.split():
        if token.startswith("R"):
            actions.append(apply_rule(int(token[1:])))
        elif token.startswith("C"):
            actions.append(select_column(int(token[1:])))
        else:
            raise ValueError(f"bad action token {token!r}")
    return tuple(actions)


def serialize_actions(seq: Iterable[Action]) -> str:
    return " ".join(a.serialize() for a in seq)


@dataclass(frozen=True)
class ColumnRef:
    """A resolved (or pending) column leaf."""

    column_index: Optional[int] = None


@dataclass(frozen=True)
class SemQlNode:
    """An internal derivation node; ``literal`` holds filter constants that
    are outside the action vocabulary (filled in from the query text)."""

    rule_id: int
    children: tuple[Union["SemQlNode", ColumnRef], ...]
    literal: object = None

    @property
    def production(self) -> Production:
        return _GRAMMAR.productions[self.rule_id]

    @property
    def label(self) -> str:
        return self.production.label

    @property
    def lhs(self) -> str:
        return self.production.lhs


SemQlAst = SemQlNode  # the root is always a Z node


def _validate(node: Union[SemQlNode, ColumnRef], symbol: str) -> None:
    if symbol == "C":
        if not isinstance(node, ColumnRef):
            raise NotDerivable(f"expected a column leaf, got {node!r}")
        return
    if not isinstance(node, SemQlNode):
        raise NotDerivable(f"expected a {symbol} node, got {node!r}")
    prod = node.production
    if prod.lhs != symbol:
        raise NotDerivable(f"expected {symbol}, node applies {prod.lhs} rule {prod.rule_id}")
    if len(node.children) != len(prod.rhs):
        raise NotDerivable(
            f"rule {prod.rule_id} needs {len(prod.rhs)} children, got {len(node.children)}"
        )
    for child, child_symbol in zip(node.children, prod.rhs):
        _validate(child, child_symbol)


def actions_of(ast: SemQlAst) -> ActionSequence:
    """Pre-order action sequence of a derivation tree."""
    _validate(ast, "Z")
    out: list[Action] = []

    def walk(node: Union[SemQlNode, ColumnRef]) -> None:
        if isinstance(node, ColumnRef):
            if node.column_index is None:
                raise UnresolvedColumn("column leaf has no resolved index")
            out.append(select_column(node.column_index))
            return
        out.append(apply_rule(node.rule_id))
        for child in node.children:
            walk(child)

    walk(ast)
    return tuple(out)


class Derivation:
    """Incremental left-most derivation used to mask decoder outputs.

    The frontier is a stack of pending grammar symbols; an action is legal
    iff it expands the top symbol.
    """

    def __init__(self, grammar: Grammar | None = None):
        self.grammar = grammar or _GRAMMAR
        self.stack: list[str] = ["Z"]
        self.steps = 0

    @property
    def complete(self) -> bool:
        return not self.stack

    @property
    def frontier(self) -> Optional[str]:
        return self.stack[-1] if self.stack else None

    def legal_rule_ids(self) -> tuple[int, ...]:
        top = self.frontier
        if top is None or top == "C":
            return ()
        return tuple(p.rule_id for p in self.grammar.by_lhs(top))

    def expects_column(self) -> bool:
        return self.frontier == "C"

    def apply(self, action: Action) -> None:
        top = self.frontier
        if top is None:
            raise IllegalAction("derivation is already complete", step=self.steps)
        if action.kind == SELECT_COLUMN:
            if top != "C":
                raise IllegalAction(
                    f"SelectColumn at a {top} frontier", step=self.steps, expected=top
                )
            self.stack.pop()
        else:
            prod = self.grammar.productions[action.rule_id]
            if prod.lhs != top:
                raise IllegalAction(
                    f"rule {action.rule_id} expands {prod.lhs}, frontier is {top}",
                    step=self.steps, expected=top,
                )
            self.stack.pop()
            self.stack.extend(reversed(prod.rhs))
        self.steps += 1


def legal_next(prefix: Sequence[Action], n_columns: Optional[int] = None,
               grammar: Grammar | None = None) -> tuple[Action, ...]:
    """Admissible actions after a (valid) prefix.

    When the frontier expects a column, ``n_columns`` gives the pointer
    vocabulary size (pseudo-column ``*`` included).
    """
    der = Derivation(grammar)
    for action in prefix:
        der.apply(action)
    if der.complete:
        return ()
    if der.expects_column():
        if n_columns is None:
            raise ValueError("n_columns required at a column frontier")
        return tuple(select_column(k) for k in range(n_columns))
    return tuple(apply_rule(r) for r in der.legal_rule_ids())


def parse_actions(seq: Sequence[Action], grammar: Grammar | None = None) -> SemQlAst:
    """Rebuild the derivation tree from a complete action sequence."""
    grammar = grammar or _GRAMMAR
    pos = 0

    def build(symbol: str) -> Union[SemQlNode, ColumnRef]:
        nonlocal pos
        if pos >= len(seq):
            raise IncompleteDerivation(f"sequence ends while deriving {symbol}")
        action = seq[pos]
        pos += 1
        if symbol == "C":
            if action.kind != SELECT_COLUMN:
                raise IllegalAction("expected SelectColumn", step=pos - 1, expected="C")
            return ColumnRef(column_index=action.column_index)
        if action.kind != APPLY_RULE:
            raise IllegalAction(f"expected a {symbol} rule", step=pos - 1, expected=symbol)
        prod = grammar.productions[action.rule_id]
        if prod.lhs != symbol:
            raise IllegalAction(
                f"rule {action.rule_id} expands {prod.lhs}, expected {symbol}",
                step=pos - 1, expected=symbol,
            )
        children = tuple(build(s) for s in prod.rhs)
        return SemQlNode(rule_id=prod.rule_id, children=children)

    root = build("Z")
    if pos != len(seq):
        raise IllegalAction("trailing actions after a complete derivation", step=pos)
    return root


def sketch_of(seq: Sequence[Action]) -> Sketch:
    """Mask column choices, keeping the structural rule ids."""
    return tuple(
        SKETCH_PLACEHOLDER if a.kind == SELECT_COLUMN else a.serialize() for a in seq
    )
