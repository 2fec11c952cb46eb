"""Shared test machinery: an independent brute-force SQL evaluator, random
table and query generators, and a greedy per-sample evaluation helper.

The brute-force evaluator implements the documented execution semantics
from scratch (no subquery caching, naive per-row work) so engine results
can be checked against a second, structurally different path.
"""
from __future__ import annotations

import numpy as np

from chatviz.data import Column, Modality, Table
from chatviz.errors import ChatvizError
from chatviz.metrics import (
    dv_accuracy,
    last_sql_response,
    sketch_accuracy,
    sql_accuracy,
)
from chatviz.semql import (
    ColumnRef,
    SemQlNode,
    actions_of,
    attach_literals,
    define_grammar,
    parse_actions,
    semql_to_sql,
    sql_to_semql,
)
from chatviz.sql.ast import And, Or, SqlAst

# ---------------------------------------------------------------------------
# brute-force evaluator


def _bf_value_matches(op, left, right):
    if left is None or right is None:
        return False
    left_num = isinstance(left, (int, float))
    right_num = isinstance(right, (int, float))
    if op == "=":
        return left == right if left_num == right_num else False
    if op == "!=":
        return left != right if left_num == right_num else True
    if left_num != right_num:
        return False
    return {"<": left < right, "<=": left <= right,
            ">": left > right, ">=": left >= right}[op]


def _bf_like(value, pattern):
    if value is None:
        return False
    text = value if isinstance(value, str) else str(value)
    # recursive wildcard matcher, deliberately not regex-based
    def match(t, p):
        if not p:
            return not t
        if p[0] == "%":
            return any(match(t[k:], p[1:]) for k in range(len(t) + 1))
        if t and (p[0] == "_" or p[0] == t[0]):
            return match(t[1:], p[1:])
        return False
    return match(text, pattern)


def _bf_aggregate(agg, values, n_rows, distinct=False):
    if agg == "count":
        if values is None:
            return n_rows
        present = [v for v in values if v is not None]
        return len(set(present)) if distinct else len(present)
    present = [v for v in values if v is not None]
    if distinct:
        uniq = []
        for v in present:
            if v not in uniq:
                uniq.append(v)
        present = uniq
    if not present:
        return None
    if agg == "sum":
        return sum(present)
    if agg == "avg":
        return sum(present) / len(present)
    if agg == "min":
        return min(present)
    return max(present)


def _bf_sort_key(v):
    if v is None:
        return (0, 0, 0)
    if isinstance(v, str):
        return (1, 1, v)
    return (1, 0, float(v))


def _bf_operand(table, operand, rows, row):
    """Operand value: aggregated over ``rows`` or read from ``row``."""
    if operand.aggregate is not None:
        if operand.column == "*":
            return _bf_aggregate("count", None, len(rows))
        idx = table.column_index(operand.column)
        return _bf_aggregate(operand.aggregate, [r[idx] for r in rows], len(rows))
    if row is None:
        return None
    return row[table.column_index(operand.column)]


def _bf_condition(table, cond, rows, row):
    if isinstance(cond, And):
        return (_bf_condition(table, cond.left, rows, row)
                and _bf_condition(table, cond.right, rows, row))
    if isinstance(cond, Or):
        return (_bf_condition(table, cond.left, rows, row)
                or _bf_condition(table, cond.right, rows, row))
    left = _bf_operand(table, cond.lhs, rows, row)
    if cond.subquery is not None:
        sub = brute_force_execute(cond.subquery, table)
        if cond.op in ("in", "not_in"):
            members = [r[0] for r in sub.rows if r[0] is not None]
            if left is None:
                return False
            return (left in members) if cond.op == "in" else (left not in members)
        scalar = sub.rows[0][0] if sub.rows else None
        return _bf_value_matches(cond.op, left, scalar)
    if cond.op == "between":
        lo, hi = cond.value
        return (_bf_value_matches(">=", left, lo)
                and _bf_value_matches("<=", left, hi))
    if cond.op == "like":
        return left is not None and _bf_like(left, cond.value)
    if cond.op == "not_like":
        return left is not None and not _bf_like(left, cond.value)
    return _bf_value_matches(cond.op, left, cond.value)


def _bf_has_aggregate(cond):
    if isinstance(cond, (And, Or)):
        return _bf_has_aggregate(cond.left) or _bf_has_aggregate(cond.right)
    return cond.lhs.aggregate is not None


def _bf_conjuncts(cond):
    if cond is None:
        return []
    if isinstance(cond, And):
        return _bf_conjuncts(cond.left) + _bf_conjuncts(cond.right)
    return [cond]


def brute_force_execute(ast: SqlAst, table: Table):
    from chatviz.sql.executor import ResultTable

    if ast.is_compound:
        left = brute_force_execute(ast.left, table)
        right = brute_force_execute(ast.right, table)
        out = []
        if ast.set_op == "union":
            pool = list(left.rows) + list(right.rows)
            for row in pool:
                if row not in out:
                    out.append(row)
        elif ast.set_op == "intersect":
            for row in left.rows:
                if row in right.rows and row not in out:
                    out.append(row)
        else:
            for row in left.rows:
                if row not in right.rows and row not in out:
                    out.append(row)
        out.sort(key=lambda r: tuple(_bf_sort_key(v) for v in r))
        return ResultTable(columns=left.columns, rows=tuple(out))

    row_terms = [t for t in _bf_conjuncts(ast.where_clause) if not _bf_has_aggregate(t)]
    group_terms = [t for t in _bf_conjuncts(ast.where_clause) if _bf_has_aggregate(t)]

    rows = [r for r in table.rows
            if all(_bf_condition(table, t, None, r) for t in row_terms)]

    items = []
    for item in ast.select_items:
        if item.column == "*" and item.aggregate is None:
            items.extend(
                type(item)(column=c.name, distinct=item.distinct) for c in table.columns
            )
        else:
            items.append(item)

    def item_name(item):
        name = item.column if item.column == "*" else \
            table.columns[table.column_index(item.column)].name
        if item.aggregate is None:
            return name
        inner = f"distinct {name}" if item.distinct else name
        return f"{item.aggregate}({inner})"

    names = tuple(item_name(i) for i in items)

    aggregated = any(i.aggregate is not None for i in items) or bool(group_terms) or (
        ast.order_by is not None and ast.order_by.item.aggregate is not None)

    if ast.group_by or aggregated:
        if ast.group_by:
            key_idx = [table.column_index(c) for c in ast.group_by]
            keys = []
            for r in rows:
                key = tuple(r[i] for i in key_idx)
                if key not in keys:
                    keys.append(key)
            keys.sort(key=lambda k: tuple(_bf_sort_key(v) for v in k))
            groups = [[r for r in rows if tuple(r[i] for i in key_idx) == key]
                      for key in keys]
        else:
            groups = [rows]
        kept = [g for g in groups
                if all(_bf_condition(table, t, g, g[0] if g else None)
                       for t in group_terms)]
        result = []
        for g in kept:
            cells = []
            for item in items:
                if item.aggregate is not None:
                    if item.column == "*":
                        cells.append(_bf_aggregate("count", None, len(g)))
                    else:
                        idx = table.column_index(item.column)
                        cells.append(_bf_aggregate(item.aggregate,
                                                   [r[idx] for r in g], len(g),
                                                   item.distinct))
                else:
                    cells.append(g[0][table.column_index(item.column)] if g else None)
            result.append((tuple(cells), g))
        if ast.order_by is not None:
            op = ast.order_by.item
            result.sort(
                key=lambda pair: _bf_sort_key(
                    _bf_operand(table, op, pair[1], pair[1][0] if pair[1] else None)),
                reverse=ast.order_by.direction == "desc",
            )
        out_rows = [cells for cells, _ in result]
    else:
        if ast.order_by is not None:
            idx = table.column_index(ast.order_by.item.column)
            rows = sorted(rows, key=lambda r: _bf_sort_key(r[idx]),
                          reverse=ast.order_by.direction == "desc")
        out_rows = [tuple(r[table.column_index(i.column)] for i in items)
                    for r in rows]
        if any(i.distinct for i in items):
            uniq = []
            for row in out_rows:
                if row not in uniq:
                    uniq.append(row)
            out_rows = uniq

    out_rows = [r for r in out_rows if any(v is not None for v in r)]
    if ast.limit is not None:
        out_rows = out_rows[: ast.limit]
    from chatviz.sql.executor import ResultTable

    return ResultTable(columns=names, rows=tuple(out_rows))


# ---------------------------------------------------------------------------
# random generators


def random_table(rng: np.random.Generator, max_rows: int = 8) -> Table:
    n_cols = int(rng.integers(2, 5))
    kinds = ["text"] + [str(rng.choice(["text", "integer", "real"]))
                        for _ in range(n_cols - 2)] + ["integer"]
    words = ["ant", "bee", "cat", "dog", "elk", "fox"]
    columns = tuple(Column(f"c{i}", kinds[i]) for i in range(n_cols))
    n_rows = int(rng.integers(0, max_rows + 1))
    rows = []
    for _ in range(n_rows):
        row = []
        for kind in kinds:
            if rng.random() < 0.1:
                row.append(None)
            elif kind == "text":
                row.append(str(rng.choice(words)))
            elif kind == "integer":
                row.append(int(rng.integers(-5, 20)))
            else:
                row.append(float(rng.integers(-10, 40)) / 2.0)
        rows.append(tuple(row))
    return Table(name="t", columns=columns, rows=tuple(rows))


class SemqlGenerator:
    """Seeded random derivations that always compile to executable SQL."""

    def __init__(self, rng: np.random.Generator, table: Table):
        self.rng = rng
        self.table = table
        self.grammar = define_grammar()
        self.text_cols = [i + 1 for i, c in enumerate(table.columns) if c.kind == "text"]
        self.num_cols = [i + 1 for i, c in enumerate(table.columns) if c.kind != "text"]
        self.all_cols = list(range(1, len(table.columns) + 1))

    def _choice(self, seq):
        return seq[int(self.rng.integers(0, len(seq)))]

    def _node(self, lhs, label, children, literal=None):
        return SemQlNode(rule_id=self.grammar.find(lhs, label).rule_id,
                         children=tuple(children), literal=literal)

    def _a(self, label=None, numeric_only=False):
        if label is None:
            label = self._choice(["none", "none", "max", "min", "count", "sum", "avg"])
        if label in ("sum", "avg"):
            col = self._choice(self.num_cols)
        elif label == "count" and self.rng.random() < 0.3:
            col = 0  # count(*)
        elif numeric_only:
            col = self._choice(self.num_cols)
        else:
            col = self._choice(self.all_cols)
        return self._node("A", label, [ColumnRef(column_index=col)]), label

    def _literal_for(self, col_index):
        if col_index in self.num_cols:
            kind = self.table.columns[col_index - 1].kind
            value = int(self.rng.integers(-5, 20))
            return float(value) if kind == "real" and self.rng.random() < 0.5 else value
        return str(self._choice(["ant", "bee", "cat", "dog", "xy"]))

    def _filter(self, depth, sub_depth):
        roll = self.rng.random()
        if depth > 0 and roll < 0.25:
            label = self._choice(["and", "or"])
            return self._node("Filter", label, [
                self._filter(depth - 1, sub_depth),
                self._filter(depth - 1, sub_depth),
            ])
        if sub_depth > 0 and roll > 0.8:
            label = self._choice(["=R", "!=R", "<R", ">R", "in", "not_in"])
            if label in ("in", "not_in"):
                col = self._choice(self.all_cols)
                lhs = self._node("A", "none", [ColumnRef(column_index=col)])
                sub = self._r(sub_depth - 1, arity=1)
            else:
                col = self._choice(self.num_cols)
                lhs = self._node("A", "none", [ColumnRef(column_index=col)])
                sub = self._r(sub_depth - 1, arity=1, numeric_only=True)
            return self._node("Filter", label, [lhs, sub])
        label = self._choice(["=", "!=", "<", ">", "<=", ">=", "between",
                              "like", "not_like"])
        if label in ("like", "not_like"):
            col = self._choice(self.text_cols or self.all_cols)
            lhs = self._node("A", "none", [ColumnRef(column_index=col)])
            pattern = "%" + str(self._choice(["a", "e", "o", "x"])) + "%"
            return self._node("Filter", label, [lhs], literal=pattern)
        col = self._choice(self.all_cols)
        lhs = self._node("A", "none", [ColumnRef(column_index=col)])
        if label == "between":
            a, b = self._literal_for(col), self._literal_for(col)
            if isinstance(a, str):
                literal = tuple(sorted([a, str(self._literal_for(col))]))[:2]
            else:
                literal = (min(a, b), max(a, b))
            return self._node("Filter", label, [lhs], literal=literal)
        return self._node("Filter", label, [lhs], literal=self._literal_for(col))

    def _select(self, arity=None, numeric_only=False):
        if arity is None:
            arity = int(self.rng.integers(1, 5))
        label = ("one", "two", "three", "four")[arity - 1]
        children = [self._a(numeric_only=numeric_only)[0] for _ in range(arity)]
        return self._node("Select", label, children), arity

    def _r(self, sub_depth, arity=None, numeric_only=False):
        select, arity = self._select(arity, numeric_only)
        roll = self.rng.random()
        extras = []
        label = "select"
        if roll < 0.2:
            order_label = self._choice(["asc", "desc"])
            a_node, _ = self._a(numeric_only=True)
            extras = [self._node("Order", order_label, [a_node])]
            label = "select_order"
        elif roll < 0.4:
            sup_label = self._choice(["most", "least"])
            a_node, _ = self._a(numeric_only=True)
            extras = [self._node("Superlative", sup_label, [a_node])]
            label = "select_sup"
        if self.rng.random() < 0.5:
            extras.append(self._filter(1, sub_depth))
            label = {"select": "select_filter",
                     "select_order": "select_order_filter",
                     "select_sup": "select_sup_filter"}[label]
        return self._node("R", label, [select] + extras)

    def ast(self, sub_depth: int = 1) -> SemQlNode:
        if self.rng.random() < 0.15:
            label = self._choice(["intersect", "union", "except"])
            arity = int(self.rng.integers(1, 4))
            return self._node("Z", label, [
                self._r(sub_depth, arity=arity), self._r(sub_depth, arity=arity),
            ])
        return self._node("Z", "plain", [self._r(sub_depth)])


def random_sql(rng: np.random.Generator, table: Table) -> SqlAst:
    return semql_to_sql(SemqlGenerator(rng, table).ast(), table)


# ---------------------------------------------------------------------------
# greedy evaluation over flat samples


def eval_greedy_samples(model, samples, tables) -> dict:
    """Greedy decoding accuracy per modality over a flat sample list."""
    out = {"cls": [], "sketch": [], "sql": [], "dv": []}
    for sample in samples:
        table = tables[sample.dataset_ref]
        enc = model.encode(sample.query.text, sample.history, table)
        out["cls"].append(int(model.classify(enc) is sample.gold.modality))
        if sample.gold.modality is Modality.SQL:
            gold_actions = actions_of(sql_to_semql(sample.gold.sql_body, table))
            try:
                pred = model.decode_semql(enc, table)
                tree = attach_literals(parse_actions(pred), sample.query.text, table)
                pred_ast = semql_to_sql(tree, table)
            except ChatvizError:
                out["sketch"].append(0)
                out["sql"].append(0)
            else:
                out["sketch"].append(sketch_accuracy(pred, gold_actions))
                out["sql"].append(sql_accuracy(pred_ast, sample.gold.sql_body))
        elif sample.gold.modality is Modality.DV:
            r_sql = last_sql_response(sample.history)
            try:
                pred_dv = model.decode_dv(enc, r_sql)
                _, _, _, dv = dv_accuracy(pred_dv, sample.gold.dv_body, table, r_sql)
            except ChatvizError:
                dv = 0
            out["dv"].append(dv)
    return {k: (sum(v) / len(v) if v else 1.0) for k, v in out.items()}
