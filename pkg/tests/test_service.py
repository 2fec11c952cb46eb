import concurrent.futures

import pytest
from fastapi.testclient import TestClient

from chatviz.datagen import bundled_tables, case_study_session
from chatviz.pipeline import GoldStubModel
from chatviz.service import create_app


@pytest.fixture
def client(tmp_path):
    session = case_study_session()
    app = create_app(GoldStubModel([session]), bundled_tables(),
                     state_path=str(tmp_path / "wal.jsonl"))
    return TestClient(app)


def _create(client, table="product"):
    response = client.post("/sessions", json={"table": table})
    assert response.status_code == 201
    return response.json()["id"]


def test_create_and_list_sessions(client):
    assert client.get("/sessions").json() == {"sessions": []}
    sid = _create(client)
    listed = client.get("/sessions").json()["sessions"]
    assert listed[0]["id"] == sid


def test_unknown_table_404(client):
    response = client.post("/sessions", json={"table": "nope"})
    assert response.status_code == 404
    assert response.json()["detail"]["code"] == "UNKNOWN_TABLE"


def test_unknown_session_404(client):
    response = client.post("/sessions/ghost/messages", json={"text": "hi"})
    assert response.status_code == 404


def test_empty_query_422(client):
    sid = _create(client)
    response = client.post(f"/sessions/{sid}/messages", json={"text": "   "})
    assert response.status_code == 422
    assert response.json()["detail"]["code"] == "EMPTY_QUERY"


def test_case_study_over_http(client):
    sid = _create(client)
    turns = [q.text for q, _ in case_study_session().turns]

    first = client.post(f"/sessions/{sid}/messages", json={"text": turns[0]}).json()
    assert first["modality"] == "text"
    assert "vegalite" not in first and "table" not in first

    second = client.post(f"/sessions/{sid}/messages", json={"text": turns[1]}).json()
    assert second["modality"] == "sql"
    assert second["table"]["rows"] == [["a", 2.0], ["b", 2.0]]

    third = client.post(f"/sessions/{sid}/messages", json={"text": turns[2]}).json()
    assert third["table"]["rows"] == [[1]]

    final = client.post(f"/sessions/{sid}/messages", json={"text": turns[3]}).json()
    assert final["modality"] == "dv"
    assert final["vegalite"]["mark"] == "bar"
    fields = final["vegalite"]["encoding"]
    assert fields["x"]["field"] == "name"
    assert fields["y"]["field"] == "avg(price)"

    transcript = client.get(f"/sessions/{sid}").json()
    assert len(transcript["turns"]) == 4


def test_no_data_source_error_code(tmp_path):
    session = case_study_session()
    from chatviz.dv import DvQuery
    from chatviz.pipeline import GoldStubModel

    class BareDv(GoldStubModel):
        def dv_query(self, query, history, table, r_sql):
            return DvQuery(chart_type="BAR")

    app = create_app(BareDv([session]), bundled_tables())
    client = TestClient(app, raise_server_exceptions=False)
    sid = _create(client)
    response = client.post(f"/sessions/{sid}/messages",
                           json={"text": "show me a bar for the above result"})
    assert response.status_code == 500
    assert response.json()["detail"]["code"] == "NO_DATA_SOURCE"


def test_persistence_across_restart(tmp_path):
    wal = str(tmp_path / "wal.jsonl")
    session = case_study_session()
    model = GoldStubModel([session])
    app = create_app(model, bundled_tables(), state_path=wal)
    client = TestClient(app)
    sid = _create(client)
    turns = [q.text for q, _ in session.turns]
    client.post(f"/sessions/{sid}/messages", json={"text": turns[0]})
    client.post(f"/sessions/{sid}/messages", json={"text": turns[1]})

    reborn = TestClient(create_app(model, bundled_tables(), state_path=wal))
    transcript = reborn.get(f"/sessions/{sid}").json()
    assert [t["query"] for t in transcript["turns"]] == turns[:2]
    assert transcript["turns"][1]["table"]["rows"] == [["a", 2.0], ["b", 2.0]]


def test_corrupted_trailing_line_dropped(tmp_path):
    wal = str(tmp_path / "wal.jsonl")
    session = case_study_session()
    model = GoldStubModel([session])
    client = TestClient(create_app(model, bundled_tables(), state_path=wal))
    sid = _create(client)
    client.post(f"/sessions/{sid}/messages",
                json={"text": session.turns[0][0].text})
    with open(wal, "a", encoding="utf-8") as handle:
        handle.write('{"type": "turn", "id": "' + sid + '", "query": "x"')  # truncated

    reborn = TestClient(create_app(model, bundled_tables(), state_path=wal))
    transcript = reborn.get(f"/sessions/{sid}").json()
    assert len(transcript["turns"]) == 1  # partial trailing turn dropped


def test_concurrent_sessions_no_crosstalk(client):
    session = case_study_session()
    turns = [q.text for q, _ in session.turns]
    sids = [_create(client) for _ in range(10)]

    def drive(sid):
        for text in turns:
            response = client.post(f"/sessions/{sid}/messages", json={"text": text})
            assert response.status_code == 200
        return client.get(f"/sessions/{sid}").json()

    with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
        transcripts = list(pool.map(drive, sids))
    for sid, transcript in zip(sids, transcripts):
        assert transcript["id"] == sid
        assert [t["query"] for t in transcript["turns"]] == turns


def test_restart_restores_rendered_chart(tmp_path):
    wal = str(tmp_path / "wal.jsonl")
    session = case_study_session()
    model = GoldStubModel([session])
    client = TestClient(create_app(model, bundled_tables(), state_path=wal))
    sid = _create(client)
    for query, _ in session.turns:
        client.post(f"/sessions/{sid}/messages", json={"text": query.text})
    before = client.get(f"/sessions/{sid}").json()

    reborn = TestClient(create_app(model, bundled_tables(), state_path=wal))
    after = reborn.get(f"/sessions/{sid}").json()
    assert after == before
    assert after["turns"][3]["vegalite"]["mark"] == "bar"
