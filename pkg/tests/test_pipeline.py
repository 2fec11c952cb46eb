import pytest

from chatviz.data import Modality, Query
from chatviz.datagen import case_study_session, case_study_table
from chatviz.errors import NoDataSource
from chatviz.pipeline import GoldStubModel, respond, rule_classify


def test_rule_classifier():
    assert rule_classify("show me a bar for the above result") is Modality.DV
    assert rule_classify("what is the average price") is Modality.SQL
    assert rule_classify("hello there") is Modality.TEXT


def test_respond_replays_case_study():
    session = case_study_session()
    table = case_study_table()
    stub = GoldStubModel([session])
    history = []
    outputs = []
    for query, _ in session.turns:
        response = respond(stub, table, tuple(history), query)
        history.append((query, response))
        outputs.append(response)

    assert outputs[0].modality is Modality.TEXT
    assert outputs[1].modality is Modality.SQL
    assert outputs[1].rendered.rows == (("a", 2.0), ("b", 2.0))
    assert outputs[2].rendered.rows == ((1,),)
    spec = outputs[3].rendered
    assert spec.mark == "bar"
    assert spec.x.field == "name" and spec.y.field == "avg(price)"


def test_respond_dv_without_data_source_raises():
    session = case_study_session()
    table = case_study_table()
    stub = GoldStubModel([session])
    # craft a stub whose dv response has no data part, with empty history
    from chatviz.dv import DvQuery

    class BareDv(GoldStubModel):
        def decode_dv(self, ctx, r_sql=None):
            return DvQuery(chart_type="BAR")

        def dv_query(self, query, history, table, r_sql):
            return DvQuery(chart_type="BAR")

    bare = BareDv([session])
    query = Query("show me a bar for the above result", 0)
    with pytest.raises(NoDataSource):
        respond(bare, table, (), query)
