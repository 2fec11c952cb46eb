"""Recursive-descent parser for the single-table SQL subset.

Keywords are case-insensitive; identifier case is preserved and resolved
against the schema at execution time.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import SqlSyntaxError, UnsupportedFeature
from .ast import (
    AGGREGATES,
    And,
    Comparison,
    Condition,
    Operand,
    Or,
    OrderBy,
    SelectItem,
    SqlAst,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+\.\d*([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?|\d+([eE][+-]?\d+)?)
  | (?P<string>'(?:[^']|'')*')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><>|!=|<=|>=|=|<|>|\(|\)|,|\*|-)
    """,
    re.VERBOSE,
)

_UNSUPPORTED = {
    "join", "inner", "outer", "left", "right", "cross", "on",
    "insert", "update", "delete", "create", "drop", "alter",
    "case", "cast", "over", "window", "offset",
}


@dataclass(frozen=True)
class _Token:
    kind: str   # "number" | "string" | "ident" | "op" | "eof"
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise SqlSyntaxError(f"unexpected character {text[pos]!r}", offset=pos)
        if match.lastgroup != "ws":
            kind = match.lastgroup
            tokens.append(_Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    # -- token helpers ----------------------------------------------------
    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        token = self.tokens[self.i]
        self.i += 1
        return token

    def at_keyword(self, *words: str) -> bool:
        token = self.peek()
        return token.kind == "ident" and token.text.lower() in words

    def expect_keyword(self, word: str) -> None:
        token = self.advance()
        if token.kind != "ident" or token.text.lower() != word:
            raise SqlSyntaxError(f"expected {word.upper()}, got {token.text!r}", token.offset)

    def expect_op(self, op: str) -> None:
        token = self.advance()
        if token.kind != "op" or token.text != op:
            raise SqlSyntaxError(f"expected {op!r}, got {token.text!r}", token.offset)

    def take_keyword(self, *words: str) -> str | None:
        if self.at_keyword(*words):
            return self.advance().text.lower()
        return None

    def expect_ident(self) -> str:
        token = self.advance()
        if token.kind != "ident":
            raise SqlSyntaxError(f"expected identifier, got {token.text!r}", token.offset)
        word = token.text.lower()
        if word in _UNSUPPORTED:
            raise UnsupportedFeature(f"{token.text.upper()} is outside the supported subset")
        return token.text

    # -- grammar ----------------------------------------------------------
    def parse_query(self) -> SqlAst:
        left = self.parse_select()
        set_op = self.take_keyword("union", "intersect", "except")
        if set_op is not None:
            if self.take_keyword("all"):
                raise UnsupportedFeature("UNION ALL is outside the supported subset")
            right = self.parse_select()
            return SqlAst(set_op=set_op, left=left, right=right)
        return left

    def parse_select(self) -> SqlAst:
        self.expect_keyword("select")
        all_distinct = self.take_keyword("distinct") is not None
        items = [self.parse_select_item(all_distinct)]
        while self.peek().kind == "op" and self.peek().text == ",":
            self.advance()
            items.append(self.parse_select_item(all_distinct))

        self.expect_keyword("from")
        table = self.expect_ident()
        if self.at_keyword(*_UNSUPPORTED) or (self.peek().kind == "op" and self.peek().text == ","):
            raise UnsupportedFeature("multiple tables / joins are outside the supported subset")

        where = None
        if self.take_keyword("where"):
            where = self.parse_condition()

        group_by: tuple[str, ...] = ()
        if self.at_keyword("group"):
            self.advance()
            self.expect_keyword("by")
            cols = [self.expect_ident()]
            while self.peek().kind == "op" and self.peek().text == ",":
                self.advance()
                cols.append(self.expect_ident())
            group_by = tuple(cols)

        if self.take_keyword("having"):
            having = self.parse_condition()
            where = And(where, having) if where is not None else having

        order_by = None
        if self.at_keyword("order"):
            self.advance()
            self.expect_keyword("by")
            operand = self.parse_operand()
            direction = self.take_keyword("asc", "desc") or "asc"
            order_by = OrderBy(operand, direction)

        limit = None
        if self.take_keyword("limit"):
            token = self.advance()
            if token.kind != "number" or not token.text.isdigit() or int(token.text) <= 0:
                raise SqlSyntaxError("LIMIT requires a positive integer", token.offset)
            limit = int(token.text)

        return SqlAst(
            select_items=tuple(items),
            from_table=table,
            where_clause=where,
            group_by=group_by,
            order_by=order_by,
            limit=limit,
        )

    def parse_select_item(self, all_distinct: bool) -> SelectItem:
        token = self.peek()
        if token.kind == "op" and token.text == "*":
            self.advance()
            return SelectItem(column="*", distinct=all_distinct)
        if token.kind == "ident" and token.text.lower() in AGGREGATES:
            nxt = self.tokens[self.i + 1]
            if nxt.kind == "op" and nxt.text == "(":
                agg = self.advance().text.lower()
                self.advance()  # (
                distinct = self.take_keyword("distinct") is not None
                inner = self.peek()
                if inner.kind == "op" and inner.text == "*":
                    self.advance()
                    column = "*"
                else:
                    column = self.expect_ident()
                self.expect_op(")")
                return SelectItem(column=column, aggregate=agg, distinct=distinct or all_distinct)
        column = self.expect_ident()
        return SelectItem(column=column, distinct=all_distinct)

    def parse_operand(self) -> Operand:
        token = self.peek()
        if token.kind == "ident" and token.text.lower() in AGGREGATES:
            nxt = self.tokens[self.i + 1]
            if nxt.kind == "op" and nxt.text == "(":
                agg = self.advance().text.lower()
                self.advance()
                inner = self.peek()
                if inner.kind == "op" and inner.text == "*":
                    self.advance()
                    column = "*"
                else:
                    column = self.expect_ident()
                self.expect_op(")")
                return Operand(column=column, aggregate=agg)
        return Operand(column=self.expect_ident())

    def parse_condition(self) -> Condition:
        left = self.parse_and()
        while self.at_keyword("or"):
            self.advance()
            left = Or(left, self.parse_and())
        return left

    def parse_and(self) -> Condition:
        left = self.parse_primary()
        while self.at_keyword("and"):
            self.advance()
            left = And(left, self.parse_primary())
        return left

    def parse_primary(self) -> Condition:
        token = self.peek()
        if token.kind == "op" and token.text == "(":
            self.advance()
            cond = self.parse_condition()
            self.expect_op(")")
            return cond
        return self.parse_predicate()

    def parse_predicate(self) -> Comparison:
        lhs = self.parse_operand()
        token = self.advance()

        if token.kind == "ident":
            word = token.text.lower()
            negated = False
            if word == "not":
                negated = True
                token = self.advance()
                word = token.text.lower() if token.kind == "ident" else ""
            if word == "between":
                if negated:
                    raise UnsupportedFeature("NOT BETWEEN is outside the supported subset")
                lo = self.parse_value()
                self.expect_keyword("and")
                hi = self.parse_value()
                return Comparison(op="between", lhs=lhs, value=(lo, hi))
            if word == "like":
                pattern = self.parse_value()
                if not isinstance(pattern, str):
                    raise SqlSyntaxError("LIKE requires a string pattern", token.offset)
                return Comparison(op="not_like" if negated else "like", lhs=lhs, value=pattern)
            if word == "in":
                self.expect_op("(")
                sub = self.parse_query()
                self.expect_op(")")
                return Comparison(op="not_in" if negated else "in", lhs=lhs, subquery=sub)
            raise SqlSyntaxError(f"expected a comparison operator, got {token.text!r}", token.offset)

        if token.kind != "op" or token.text not in ("=", "!=", "<>", "<", ">", "<=", ">="):
            raise SqlSyntaxError(f"expected a comparison operator, got {token.text!r}", token.offset)
        op = "!=" if token.text == "<>" else token.text

        nxt = self.peek()
        if nxt.kind == "op" and nxt.text == "(":
            self.advance()
            sub = self.parse_query()
            self.expect_op(")")
            return Comparison(op=op, lhs=lhs, subquery=sub)
        return Comparison(op=op, lhs=lhs, value=self.parse_value())

    def parse_value(self):
        token = self.advance()
        sign = 1
        if token.kind == "op" and token.text == "-":
            sign = -1
            token = self.advance()
        if token.kind == "number":
            text = token.text
            if re.fullmatch(r"\d+", text):
                return sign * int(text)
            return sign * float(text)
        if token.kind == "string" and sign == 1:
            return token.text[1:-1].replace("''", "'")
        raise SqlSyntaxError(f"expected a literal value, got {token.text!r}", token.offset)


def parse_sql(text: str) -> SqlAst:
    """Parse SQL text into an AST; raises SqlSyntaxError / UnsupportedFeature."""
    parser = _Parser(text)
    ast = parser.parse_query()
    trailing = parser.peek()
    if trailing.kind != "eof":
        word = trailing.text.lower()
        if word in _UNSUPPORTED:
            raise UnsupportedFeature(f"{trailing.text.upper()} is outside the supported subset")
        raise SqlSyntaxError(f"unexpected trailing input {trailing.text!r}", trailing.offset)
    return ast
