"""Synthetic dialogue corpora: seeded sessions that open with general
dataset questions, continue with data-manipulation turns, and close with a
chart request.

A bundled product-catalog fixture and ~40 seed (question, chart query)
pairs stand in for an external corpus; templates cover every grammar
production the structured decoder can emit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .data import (
    Column,
    DialogueSession,
    Modality,
    Query,
    Response,
    Table,
)
from .dv import parse_dv_query
from .errors import ChatvizError
from .semql import sql_to_semql
from .sql.executor import execute
from .sql.parser import parse_sql


def case_study_table() -> Table:
    """The minimal product table used by the four-turn walkthrough fixture."""
    return Table(
        name="product",
        columns=(Column("name", "text"), Column("price", "integer")),
        rows=(("a", 1), ("a", 3), ("b", 2)),
    )


def catalog_table() -> Table:
    """The richer bundled dataset used for corpus synthesis."""
    rows = (
        ("alpha", "toys", 12.5, 10, 4.5),
        ("beta", "tools", 30.0, 5, 3.5),
        ("gamma", "food", 7.5, 24, 4.0),
        ("delta", "toys", 45.0, 3, 2.5),
        ("epsilon", "games", 22.0, 8, 5.0),
        ("zeta", "tools", 18.5, 12, 3.0),
        ("eta", "food", 5.0, 40, 4.5),
        ("theta", "games", 60.0, 2, 2.0),
        ("iota", "toys", 15.0, 9, 3.5),
        ("kappa", "tools", 27.5, 6, 4.0),
        ("lambda", "food", 9.0, 30, 3.0),
        ("mu", "games", 35.0, 4, 4.5),
    )
    return Table(
        name="products",
        columns=(
            Column("name", "text"),
            Column("category", "text"),
            Column("price", "real"),
            Column("quantity", "integer"),
            Column("rating", "real"),
        ),
        rows=rows,
    )


def bundled_tables() -> dict[str, Table]:
    tables = {}
    for table in (case_study_table(), catalog_table()):
        tables[table.name] = table
    return tables


def case_study_session() -> DialogueSession:
    """The four-turn walkthrough: description, group average, minimum, chart."""
    table = case_study_table()
    turns = []
    specs = [
        ("give me a short description about the table", Modality.TEXT,
         "this table describes 3 products with columns name and price"),
        ("what are the different product names and the average product price for each of them",
         Modality.SQL, "SELECT name, AVG(price) FROM product GROUP BY name"),
        ("how about the minimum product price", Modality.SQL,
         "SELECT MIN(price) FROM product"),
        ("show me a bar for the above result", Modality.DV,
         "VISUALIZE BAR SELECT name, AVG(price) FROM product GROUP BY name"),
    ]
    for i, (query_text, modality, body) in enumerate(specs):
        query = Query(text=query_text, turn_index=i)
        if modality is Modality.TEXT:
            response = Response(modality=modality, text_body=body)
        elif modality is Modality.SQL:
            response = Response(modality=modality, sql_body=parse_sql(body))
        else:
            response = Response(modality=modality, dv_body=parse_dv_query(body))
        turns.append((query, response))
    return DialogueSession(id="case-study", dataset_ref=table.name, turns=tuple(turns))


# -- templates -----------------------------------------------------------------


def _general_templates(table: Table) -> list[tuple[str, str]]:
    names = [c.name for c in table.columns]
    numeric = [c.name for c in table.columns if c.kind != "text"]
    n, m = len(table.rows), len(table.columns)
    listed = " , ".join(names)
    return [
        ("hello", "hello , how can i help you with this dataset"),
        ("what is this dataset about",
         f"this table {table.name} has {n} rows and {m} columns"),
        ("how many rows does the table have", f"there are {n} rows"),
        ("how many columns does the table have", f"there are {m} columns"),
        ("what are the columns", f"the columns are {listed}"),
        ("give me a short description about the table",
         f"the table {table.name} contains {listed} for {n} products"),
        ("which columns are numeric",
         "the numeric columns are " + " , ".join(numeric)),
        ("what can you do",
         "i can describe the data , run queries and draw charts"),
        ("thanks", "you are welcome"),
        ("goodbye", "goodbye , happy analyzing"),
        ("what kind of table is this", f"it is a {table.name} table with {m} columns"),
        ("is the data complete", f"the table has {n} complete rows"),
    ]


@dataclass(frozen=True)
class _SqlTemplate:
    name: str
    build: Callable[[Table, np.random.Generator], tuple[str, str]]


def _text_columns(table: Table) -> list[str]:
    return [c.name for c in table.columns if c.kind == "text"]


def _numeric_columns(table: Table) -> list[str]:
    return [c.name for c in table.columns if c.kind != "text"]


def _pick(rng: np.random.Generator, options: Sequence):
    return options[int(rng.integers(0, len(options)))]


def _literal(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def _numeric_value(table: Table, rng: np.random.Generator, column: str):
    values = [r[table.column_index(column)] for r in table.rows
              if r[table.column_index(column)] is not None]
    return _pick(rng, values)


def _text_value(table: Table, rng: np.random.Generator, column: str) -> str:
    values = [r[table.column_index(column)] for r in table.rows
              if r[table.column_index(column)] is not None]
    return str(_pick(rng, values))


def _sql_templates() -> list[_SqlTemplate]:
    def select_all(t, rng):
        return "show me all the data", f"SELECT * FROM {t.name}"

    def select_col(t, rng):
        c = _pick(rng, [c.name for c in t.columns])
        return f"list all values of {c}", f"SELECT {c} FROM {t.name}"

    def select_two(t, rng):
        c1, c2 = rng.choice([c.name for c in t.columns], size=2, replace=False)
        return f"show {c1} and {c2} of every row", f"SELECT {c1}, {c2} FROM {t.name}"

    def _filter_numeric(op_word, op):
        def build(t, rng):
            c1 = _pick(rng, _text_columns(t))
            c2 = _pick(rng, _numeric_columns(t))
            v = _literal(_numeric_value(t, rng, c2))
            return (f"show the {c1} of rows where {c2} is {op_word} {v}",
                    f"SELECT {c1} FROM {t.name} WHERE {c2} {op} {v}")
        return build

    def filter_eq_text(t, rng):
        c1 = _pick(rng, _numeric_columns(t))
        c2 = _pick(rng, _text_columns(t))
        v = _text_value(t, rng, c2)
        return (f"show the {c1} of rows where {c2} is '{v}'",
                f"SELECT {c1} FROM {t.name} WHERE {c2} = '{v}'")

    def filter_ne_text(t, rng):
        c1 = _pick(rng, _numeric_columns(t))
        c2 = _pick(rng, _text_columns(t))
        v = _text_value(t, rng, c2)
        return (f"show the {c1} of rows where {c2} is not '{v}'",
                f"SELECT {c1} FROM {t.name} WHERE {c2} != '{v}'")

    def filter_between(t, rng):
        c1 = _pick(rng, _text_columns(t))
        c2 = _pick(rng, _numeric_columns(t))
        a = _numeric_value(t, rng, c2)
        b = _numeric_value(t, rng, c2)
        lo, hi = (a, b) if a <= b else (b, a)
        return (f"show the {c1} of rows where {c2} is between {_literal(lo)} and {_literal(hi)}",
                f"SELECT {c1} FROM {t.name} WHERE {c2} BETWEEN {_literal(lo)} AND {_literal(hi)}")

    def filter_like(t, rng):
        c1 = _pick(rng, [c.name for c in t.columns])
        c2 = _pick(rng, _text_columns(t))
        s = _text_value(t, rng, c2)[:2]
        return (f"show the {c1} of rows where {c2} contains '{s}'",
                f"SELECT {c1} FROM {t.name} WHERE {c2} LIKE '%{s}%'")

    def filter_not_like(t, rng):
        c1 = _pick(rng, [c.name for c in t.columns])
        c2 = _pick(rng, _text_columns(t))
        s = _text_value(t, rng, c2)[:2]
        return (f"show the {c1} of rows where {c2} does not contain '{s}'",
                f"SELECT {c1} FROM {t.name} WHERE {c2} NOT LIKE '%{s}%'")

    def _aggregate(agg, word):
        def build(t, rng):
            c = _pick(rng, _numeric_columns(t))
            return (f"what is the {word} {c}", f"SELECT {agg}({c}) FROM {t.name}")
        return build

    def count_all(t, rng):
        return ("run a count over all rows", f"SELECT COUNT(*) FROM {t.name}")

    def group_avg(t, rng):
        txt = _pick(rng, _text_columns(t))
        num = _pick(rng, _numeric_columns(t))
        return (f"what are the different {txt} and the average {num} for each of them",
                f"SELECT {txt}, AVG({num}) FROM {t.name} GROUP BY {txt}")

    def group_count(t, rng):
        txt = _pick(rng, _text_columns(t))
        return (f"how many rows are there for each {txt}",
                f"SELECT {txt}, COUNT(*) FROM {t.name} GROUP BY {txt}")

    def group_sum(t, rng):
        txt = _pick(rng, _text_columns(t))
        num = _pick(rng, _numeric_columns(t))
        return (f"what is the total {num} for each {txt}",
                f"SELECT {txt}, SUM({num}) FROM {t.name} GROUP BY {txt}")

    def superlative_most(t, rng):
        txt = _pick(rng, _text_columns(t))
        num = _pick(rng, _numeric_columns(t))
        return (f"which {txt} has the highest {num}",
                f"SELECT {txt} FROM {t.name} ORDER BY {num} DESC LIMIT 1")

    def superlative_least(t, rng):
        txt = _pick(rng, _text_columns(t))
        num = _pick(rng, _numeric_columns(t))
        return (f"which {txt} has the lowest {num}",
                f"SELECT {txt} FROM {t.name} ORDER BY {num} ASC LIMIT 1")

    def order_asc(t, rng):
        txt = _pick(rng, _text_columns(t))
        num = _pick(rng, _numeric_columns(t))
        return (f"list {txt} and {num} ordered by {num} ascending",
                f"SELECT {txt}, {num} FROM {t.name} ORDER BY {num} ASC")

    def order_desc(t, rng):
        txt = _pick(rng, _text_columns(t))
        num = _pick(rng, _numeric_columns(t))
        return (f"list {txt} and {num} ordered by {num} descending",
                f"SELECT {txt}, {num} FROM {t.name} ORDER BY {num} DESC")

    def nested_above_avg(t, rng):
        txt = _pick(rng, _text_columns(t))
        num = _pick(rng, _numeric_columns(t))
        return (f"which {txt} have {num} above the average",
                f"SELECT {txt} FROM {t.name} WHERE {num} > (SELECT AVG({num}) FROM {t.name})")

    def nested_below_avg(t, rng):
        txt = _pick(rng, _text_columns(t))
        num = _pick(rng, _numeric_columns(t))
        return (f"which {txt} have {num} below the average",
                f"SELECT {txt} FROM {t.name} WHERE {num} < (SELECT AVG({num}) FROM {t.name})")

    def eq_max_subquery(t, rng):
        txt = _pick(rng, _text_columns(t))
        num = _pick(rng, _numeric_columns(t))
        return (f"which {txt} have {num} equal to the maximum",
                f"SELECT {txt} FROM {t.name} WHERE {num} = (SELECT MAX({num}) FROM {t.name})")

    def in_subquery(t, rng):
        txt = _pick(rng, _text_columns(t))
        num = _pick(rng, _numeric_columns(t))
        v = _literal(_numeric_value(t, rng, num))
        return (f"show the {txt} that appear among rows with {num} greater than {v}",
                f"SELECT {txt} FROM {t.name} WHERE {txt} IN "
                f"(SELECT {txt} FROM {t.name} WHERE {num} > {v})")

    def not_in_subquery(t, rng):
        txt = _pick(rng, _text_columns(t))
        num = _pick(rng, _numeric_columns(t))
        v = _literal(_numeric_value(t, rng, num))
        return (f"show the {txt} that never appear among rows with {num} greater than {v}",
                f"SELECT {txt} FROM {t.name} WHERE {txt} NOT IN "
                f"(SELECT {txt} FROM {t.name} WHERE {num} > {v})")

    def filter_and(t, rng):
        txt = _pick(rng, _text_columns(t))
        n1, n2 = rng.choice(_numeric_columns(t), size=2, replace=False)
        v1 = _literal(_numeric_value(t, rng, str(n1)))
        v2 = _literal(_numeric_value(t, rng, str(n2)))
        return (f"show the {txt} where {n1} is greater than {v1} and {n2} is less than {v2}",
                f"SELECT {txt} FROM {t.name} WHERE {n1} > {v1} AND {n2} < {v2}")

    def filter_or(t, rng):
        txt = _pick(rng, _text_columns(t))
        n1, n2 = rng.choice(_numeric_columns(t), size=2, replace=False)
        v1 = _literal(_numeric_value(t, rng, str(n1)))
        v2 = _literal(_numeric_value(t, rng, str(n2)))
        return (f"show the {txt} where {n1} is greater than {v1} or {n2} is less than {v2}",
                f"SELECT {txt} FROM {t.name} WHERE {n1} > {v1} OR {n2} < {v2}")

    def union_query(t, rng):
        txt = _pick(rng, _text_columns(t))
        n1, n2 = rng.choice(_numeric_columns(t), size=2, replace=False)
        v1 = _literal(_numeric_value(t, rng, str(n1)))
        v2 = _literal(_numeric_value(t, rng, str(n2)))
        return (f"combine the {txt} with {n1} greater than {v1} union the {txt} with {n2} less than {v2}",
                f"SELECT {txt} FROM {t.name} WHERE {n1} > {v1} UNION "
                f"SELECT {txt} FROM {t.name} WHERE {n2} < {v2}")

    def intersect_query(t, rng):
        txt = _pick(rng, _text_columns(t))
        n1, n2 = rng.choice(_numeric_columns(t), size=2, replace=False)
        v1 = _literal(_numeric_value(t, rng, str(n1)))
        v2 = _literal(_numeric_value(t, rng, str(n2)))
        return (f"intersect the {txt} with {n1} greater than {v1} with the {txt} with {n2} less than {v2}",
                f"SELECT {txt} FROM {t.name} WHERE {n1} > {v1} INTERSECT "
                f"SELECT {txt} FROM {t.name} WHERE {n2} < {v2}")

    def except_query(t, rng):
        txt = _pick(rng, _text_columns(t))
        n1, n2 = rng.choice(_numeric_columns(t), size=2, replace=False)
        v1 = _literal(_numeric_value(t, rng, str(n1)))
        v2 = _literal(_numeric_value(t, rng, str(n2)))
        return (f"take the {txt} with {n1} greater than {v1} except the {txt} with {n2} less than {v2}",
                f"SELECT {txt} FROM {t.name} WHERE {n1} > {v1} EXCEPT "
                f"SELECT {txt} FROM {t.name} WHERE {n2} < {v2}")

    return [
        _SqlTemplate("select_all", select_all),
        _SqlTemplate("select_col", select_col),
        _SqlTemplate("select_two", select_two),
        _SqlTemplate("filter_gt", _filter_numeric("greater than", ">")),
        _SqlTemplate("filter_lt", _filter_numeric("less than", "<")),
        _SqlTemplate("filter_ge", _filter_numeric("at least", ">=")),
        _SqlTemplate("filter_le", _filter_numeric("at most", "<=")),
        _SqlTemplate("filter_eq_text", filter_eq_text),
        _SqlTemplate("filter_ne_text", filter_ne_text),
        _SqlTemplate("filter_between", filter_between),
        _SqlTemplate("filter_like", filter_like),
        _SqlTemplate("filter_not_like", filter_not_like),
        _SqlTemplate("agg_avg", _aggregate("AVG", "average")),
        _SqlTemplate("agg_min", _aggregate("MIN", "minimum")),
        _SqlTemplate("agg_max", _aggregate("MAX", "maximum")),
        _SqlTemplate("agg_sum", _aggregate("SUM", "total")),
        _SqlTemplate("count_all", count_all),
        _SqlTemplate("group_avg", group_avg),
        _SqlTemplate("group_count", group_count),
        _SqlTemplate("group_sum", group_sum),
        _SqlTemplate("superlative_most", superlative_most),
        _SqlTemplate("superlative_least", superlative_least),
        _SqlTemplate("order_asc", order_asc),
        _SqlTemplate("order_desc", order_desc),
        _SqlTemplate("nested_above_avg", nested_above_avg),
        _SqlTemplate("nested_below_avg", nested_below_avg),
        _SqlTemplate("eq_max_subquery", eq_max_subquery),
        _SqlTemplate("in_subquery", in_subquery),
        _SqlTemplate("not_in_subquery", not_in_subquery),
        _SqlTemplate("filter_and", filter_and),
        _SqlTemplate("filter_or", filter_or),
        _SqlTemplate("union_query", union_query),
        _SqlTemplate("intersect_query", intersect_query),
        _SqlTemplate("except_query", except_query),
    ]


SEED_PAIRS: tuple[tuple[str, str], ...] = (
    ("show me a bar chart of the number of products in each category",
     "VISUALIZE BAR SELECT category, COUNT(*) FROM products GROUP BY category"),
    ("draw a bar chart of the average price per category",
     "VISUALIZE BAR SELECT category, AVG(price) FROM products GROUP BY category"),
    ("bar chart of total quantity for each category",
     "VISUALIZE BAR SELECT category, SUM(quantity) FROM products GROUP BY category"),
    ("show a bar of the maximum price per category",
     "VISUALIZE BAR SELECT category, MAX(price) FROM products GROUP BY category"),
    ("plot a bar chart of price for each product name",
     "VISUALIZE BAR SELECT name, price FROM products"),
    ("bar chart of quantity by product name",
     "VISUALIZE BAR SELECT name, quantity FROM products"),
    ("show me a bar of names and prices for products with price above 20",
     "VISUALIZE BAR SELECT name, price FROM products WHERE price > 20"),
    ("bar chart of the average rating per category",
     "VISUALIZE BAR SELECT category, AVG(rating) FROM products GROUP BY category"),
    ("show me a pie chart of the number of products per category",
     "VISUALIZE PIE SELECT category, COUNT(*) FROM products GROUP BY category"),
    ("pie chart of total quantity by category",
     "VISUALIZE PIE SELECT category, SUM(quantity) FROM products GROUP BY category"),
    ("draw a pie of the average price by category",
     "VISUALIZE PIE SELECT category, AVG(price) FROM products GROUP BY category"),
    ("pie chart of total price by category",
     "VISUALIZE PIE SELECT category, SUM(price) FROM products GROUP BY category"),
    ("pie of product counts per category for prices above 15",
     "VISUALIZE PIE SELECT category, COUNT(*) FROM products WHERE price > 15 GROUP BY category"),
    ("pie chart of quantity by product name",
     "VISUALIZE PIE SELECT name, quantity FROM products"),
    ("line chart of price by product name",
     "VISUALIZE LINE SELECT name, price FROM products"),
    ("draw a line of rating by product name",
     "VISUALIZE LINE SELECT name, rating FROM products"),
    ("line chart of the average price per category",
     "VISUALIZE LINE SELECT category, AVG(price) FROM products GROUP BY category"),
    ("line chart of quantity by name in alphabetical order",
     "VISUALIZE LINE SELECT name, quantity FROM products ORDER BY name ASC"),
    ("line of price by name ordered by price",
     "VISUALIZE LINE SELECT name, price FROM products ORDER BY price ASC"),
    ("scatter plot of price against rating",
     "VISUALIZE SCATTER SELECT price, rating FROM products"),
    ("scatter of price versus quantity",
     "VISUALIZE SCATTER SELECT price, quantity FROM products"),
    ("scatter plot of quantity against rating",
     "VISUALIZE SCATTER SELECT quantity, rating FROM products"),
    ("scatter of rating versus price for quantity over 5",
     "VISUALIZE SCATTER SELECT rating, price FROM products WHERE quantity > 5"),
    ("scatter plot of price and quantity for the toys category",
     "VISUALIZE SCATTER SELECT price, quantity FROM products WHERE category = 'toys'"),
    ("stacked bar of total quantity by category split by name",
     "VISUALIZE STACKED_BAR SELECT category, SUM(quantity), name FROM products GROUP BY category, name"),
    ("stacked bar chart of counts per category split by name",
     "VISUALIZE STACKED_BAR SELECT category, COUNT(*), name FROM products GROUP BY category, name"),
    ("stacked bar of total price per category by name",
     "VISUALIZE STACKED_BAR SELECT category, SUM(price), name FROM products GROUP BY category, name"),
    ("stacked bar of average rating per category split by name",
     "VISUALIZE STACKED_BAR SELECT category, AVG(rating), name FROM products GROUP BY category, name"),
    ("stacked bar of maximum quantity per category by name",
     "VISUALIZE STACKED_BAR SELECT category, MAX(quantity), name FROM products GROUP BY category, name"),
    ("grouping line of price by name colored by category",
     "VISUALIZE GROUPING_LINE SELECT name, price, category FROM products"),
    ("grouping line chart of rating by name per category",
     "VISUALIZE GROUPING_LINE SELECT name, rating, category FROM products"),
    ("grouping line of quantity by name for each category",
     "VISUALIZE GROUPING_LINE SELECT name, quantity, category FROM products"),
    ("grouping line of price by name for expensive products",
     "VISUALIZE GROUPING_LINE SELECT name, price, category FROM products WHERE price > 10"),
    ("grouping scatter of price against rating by category",
     "VISUALIZE GROUPING_SCATTER SELECT price, rating, category FROM products"),
    ("grouping scatter of quantity versus rating per category",
     "VISUALIZE GROUPING_SCATTER SELECT quantity, rating, category FROM products"),
    ("grouping scatter of price and quantity by category",
     "VISUALIZE GROUPING_SCATTER SELECT price, quantity, category FROM products"),
    ("grouping scatter of rating against quantity per category",
     "VISUALIZE GROUPING_SCATTER SELECT rating, quantity, category FROM products"),
    ("bar chart of the cheapest product and its price",
     "VISUALIZE BAR SELECT name, price FROM products ORDER BY price ASC LIMIT 1"),
    ("bar of the product with the highest rating",
     "VISUALIZE BAR SELECT name, rating FROM products ORDER BY rating DESC LIMIT 1"),
    ("pie of counts by category for cheap products",
     "VISUALIZE PIE SELECT category, COUNT(*) FROM products WHERE price < 20 GROUP BY category"),
)


def synthesize_session(seed_pair: tuple[str, str], table: Table,
                       rng: np.random.Generator,
                       session_id: str = "s0") -> DialogueSession:
    """One session: 3-7 rounds of general and data turns, closed by the seed
    chart turn. Every gold data/chart query is validated to execute."""
    rounds = int(rng.integers(3, 8))
    g_low = max(1, rounds - 1 - 3)
    g_high = min(3, rounds - 2)
    n_general = int(rng.integers(g_low, g_high + 1))
    n_sql = rounds - 1 - n_general

    general = _general_templates(table)
    general_picks = rng.choice(len(general), size=n_general, replace=False)
    sql_templates = _sql_templates()
    sql_picks = rng.choice(len(sql_templates), size=n_sql, replace=False)

    turns: list[tuple[Query, Response]] = []
    for pick in general_picks:
        q_text, answer = general[int(pick)]
        turns.append((Query(q_text, len(turns)),
                      Response(modality=Modality.TEXT, text_body=answer)))
    for pick in sql_picks:
        q_text, sql_text = sql_templates[int(pick)].build(table, rng)
        ast = parse_sql(sql_text)
        execute(ast, table)          # gold must run
        sql_to_semql(ast, table)     # and be expressible for the decoder
        turns.append((Query(q_text, len(turns)),
                      Response(modality=Modality.SQL, sql_body=ast)))

    dv_text, dv_surface = seed_pair
    dv_query = parse_dv_query(dv_surface)
    execute(dv_query.data_part, table)
    turns.append((Query(dv_text, len(turns)),
                  Response(modality=Modality.DV, dv_body=dv_query)))

    session = DialogueSession(id=session_id, dataset_ref=table.name,
                              turns=tuple(turns))
    session.validate_gold()
    return session


def make_corpus(n_sessions: int, seed: int = 0,
                table: Optional[Table] = None) -> list[DialogueSession]:
    """Cycle through the bundled seed pairs to build ``n_sessions`` sessions."""
    table = table or catalog_table()
    rng = np.random.default_rng(seed)
    sessions = []
    for i in range(n_sessions):
        pair = SEED_PAIRS[i % len(SEED_PAIRS)]
        sessions.append(synthesize_session(pair, table, rng, session_id=f"s{i:05d}"))
    return sessions


def split_corpus(sessions: Sequence[DialogueSession],
                 ratios: tuple[float, float, float] = (0.69, 0.11, 0.20),
                 seed: int = 0):
    """Disjoint seeded train/validation/test split."""
    if not sessions:
        raise ChatvizError("cannot split an empty corpus")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(sessions))
    n = len(sessions)
    cut1 = round(ratios[0] * n)
    cut2 = round((ratios[0] + ratios[1]) * n)
    shuffled = [sessions[i] for i in order]
    return shuffled[:cut1], shuffled[cut1:cut2], shuffled[cut2:]


def corpus_stats(sessions: Sequence[DialogueSession]) -> dict:
    """Corpus report: session/turn counts and the per-modality breakdown."""
    n_sessions = len(sessions)
    n_qrs = sum(len(s.turns) for s in sessions)
    by_modality = {m: 0 for m in Modality}
    for session in sessions:
        for _, response in session.turns:
            by_modality[response.modality] += 1
    return {
        "sessions": n_sessions,
        "qrs": n_qrs,
        "avg_qrs_per_session": (n_qrs / n_sessions) if n_sessions else 0.0,
        "datasets": len({s.dataset_ref for s in sessions}),
        "general_queries": by_modality[Modality.TEXT],
        "data_queries": by_modality[Modality.SQL],
        "dv_queries": by_modality[Modality.DV],
    }
