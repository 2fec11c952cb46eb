"""Turn-level orchestration: (dataset, history, query) -> response.

Works with any model exposing the decoding protocol (``encode``,
``classify``, ``decode_text``, ``decode_semql``, ``decode_dv``); besides the
trained network there is a gold-replay stub (teacher upper bound and
deterministic pipeline tests) and a keyword rule classifier.
"""
from __future__ import annotations

from typing import Sequence

from .data import Modality, Query, Response, Table
from .dv import DvQuery, chart_pipeline
from .encoding import tokenize
from .errors import ChatvizError
from .metrics import last_sql_response
from .semql import attach_literals, parse_actions, semql_to_sql
from .sql.executor import execute

_DV_WORDS = frozenset(
    "bar pie line scatter chart plot visualize draw graph stacked".split()
)
_SQL_WORDS = frozenset(
    ("average minimum maximum total count sum list show which rows ordered "
     "between greater less union intersect except values data").split()
)


def rule_classify(query_text: str) -> Modality:
    """Deterministic keyword routing for pipeline tests."""
    tokens = set(tokenize(query_text))
    if tokens & _DV_WORDS:
        return Modality.DV
    if tokens & _SQL_WORDS:
        return Modality.SQL
    return Modality.TEXT


class GoldStubModel:
    """Replays gold responses looked up by query text: the teacher-forced
    upper bound for metrics and golden pipeline fixtures."""

    def __init__(self, sessions):
        self.by_query: dict[str, Response] = {}
        for session in sessions:
            for query, response in session.turns:
                self.by_query[query.text] = response

    class _Context:
        def __init__(self, query_text, history, table):
            self.query_text = query_text
            self.history = history
            self.table = table

    def _gold(self, ctx) -> Response:
        if ctx.query_text not in self.by_query:
            raise ChatvizError(f"no gold response for query {ctx.query_text!r}")
        return self.by_query[ctx.query_text]

    def encode(self, query_text: str, history, table: Table):
        return self._Context(query_text, history, table)

    def classify(self, ctx) -> Modality:
        return self._gold(ctx).modality

    def decode_text(self, ctx) -> list[str]:
        return tokenize(self._gold(ctx).text_body)

    def decode_semql(self, ctx, table: Table):
        from .semql import actions_of, sql_to_semql

        return actions_of(sql_to_semql(self._gold(ctx).sql_body, table))

    def decode_dv(self, ctx, r_sql=None) -> DvQuery:
        return self._gold(ctx).dv_body

    def dv_query(self, query: Query, history, table: Table, r_sql) -> DvQuery:
        return self.decode_dv(self.encode(query.text, history, table), r_sql)


def _model_dv_query(model, query: Query, history, table: Table, r_sql) -> DvQuery:
    if hasattr(model, "dv_query"):
        return model.dv_query(query, history, table, r_sql)
    enc = model.encode(query.text, history, table)
    return model.decode_dv(enc, r_sql)


class _DvAdapter:
    """Presents the chart-decoding face the chart pipeline expects."""

    def __init__(self, model):
        self.model = model

    def dv_query(self, query, history, table, r_sql):
        return _model_dv_query(self.model, query, history, table, r_sql)


def respond(model, table: Table, history: Sequence[tuple[Query, Response]],
            query: Query, use_rule_classifier: bool = False) -> Response:
    """One full turn: classify the query, decode with the matching decoder,
    execute data parts, and attach rendered results."""
    enc = model.encode(query.text, history, table)
    if use_rule_classifier:
        modality = rule_classify(query.text)
    else:
        modality = model.classify(enc)

    if modality is Modality.TEXT:
        tokens = model.decode_text(enc)
        return Response(modality=Modality.TEXT, text_body=" ".join(tokens))

    if modality is Modality.SQL:
        actions = model.decode_semql(enc, table)
        tree = attach_literals(parse_actions(actions), query.text, table)
        ast = semql_to_sql(tree, table)
        result = execute(ast, table)
        return Response(modality=Modality.SQL, sql_body=ast, rendered=result)

    r_sql = last_sql_response(history)
    dv_query, spec = chart_pipeline(query, history, _DvAdapter(model), r_sql, table)
    return Response(modality=Modality.DV, dv_body=dv_query, rendered=spec)
