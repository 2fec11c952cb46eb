"""HTTP chat service: per-session dialogue state over a frozen model.

The model snapshot is immutable and shared; sessions are the only mutable
state, serialized per session id by a lock, and made durable through a
JSON-lines write-ahead log appended per turn.
"""
from __future__ import annotations

import json
import logging
import os
import re
import threading
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .data import Modality, Query, Response, Table
from .dv import dv_to_string, parse_dv_query
from .errors import ChatvizError
from .pipeline import respond
from .sql.canonical import sql_to_string
from .sql.executor import ResultTable, execute
from .sql.parser import parse_sql

logger = logging.getLogger(__name__)


def error_code(exc: Exception) -> str:
    """Machine-readable code from the exception class name."""
    name = type(exc).__name__
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).upper()


def _result_payload(result: ResultTable) -> dict:
    return {"columns": list(result.columns), "rows": [list(r) for r in result.rows]}


def turn_payload(response: Response) -> dict:
    payload: dict = {"modality": response.modality.value}
    if response.modality is Modality.TEXT:
        payload["text"] = response.text_body
    elif response.modality is Modality.SQL:
        payload["sql"] = sql_to_string(response.sql_body)
        if response.rendered is not None:
            payload["table"] = _result_payload(response.rendered)
    else:
        payload["dv_query"] = dv_to_string(response.dv_body)
        if response.rendered is not None:
            payload["vegalite"] = response.rendered.to_dict()
    return payload


class SessionState:
    def __init__(self, session_id: str, dataset_ref: str):
        self.id = session_id
        self.dataset_ref = dataset_ref
        self.turns: list[tuple[Query, Response]] = []
        self.lock = threading.Lock()


class SessionStore:
    """In-memory sessions plus an append-only JSON-lines log."""

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self.sessions: dict[str, SessionState] = {}
        self._registry_lock = threading.Lock()
        self._io_lock = threading.Lock()
        self._counter = 0

    def _append(self, record: dict) -> None:
        if self.path is None:
            return
        with self._io_lock:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(record, sort_keys=True))
                handle.write("\n")

    def create(self, dataset_ref: str, session_id: Optional[str] = None) -> SessionState:
        with self._registry_lock:
            if session_id is None:
                self._counter += 1
                session_id = f"session-{self._counter:06d}"
            state = SessionState(session_id, dataset_ref)
            self.sessions[session_id] = state
        self._append({"type": "create", "id": state.id, "dataset_ref": dataset_ref})
        return state

    def get(self, session_id: str) -> SessionState:
        state = self.sessions.get(session_id)
        if state is None:
            raise KeyError(session_id)
        return state

    def append_turn(self, state: SessionState, query: Query, response: Response) -> None:
        state.turns.append((query, response))
        self._append({
            "type": "turn",
            "id": state.id,
            "query": query.text,
            "modality": response.modality.value,
            "response": _response_surface(response),
        })

    def load(self, tables: dict[str, Table]) -> None:
        """Replay the log; a corrupted trailing line is dropped with a warning."""
        if self.path is None or not os.path.exists(self.path):
            return
        with open(self.path, encoding="utf-8") as handle:
            lines = handle.readlines()
        for line_no, line in enumerate(lines, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                self._replay(record, tables)
            except (ValueError, KeyError, ChatvizError) as exc:
                if line_no == len(lines):
                    logger.warning("dropping corrupted trailing log line %d: %s",
                                   line_no, exc)
                    continue
                raise ChatvizError(f"corrupted session log at line {line_no}: {exc}")
        with self._registry_lock:
            self._counter = len(self.sessions)

    def _replay(self, record: dict, tables: dict[str, Table]) -> None:
        if record["type"] == "create":
            state = SessionState(record["id"], record["dataset_ref"])
            self.sessions[state.id] = state
            return
        state = self.sessions[record["id"]]
        modality = Modality(record["modality"])
        table = tables[state.dataset_ref]
        query = Query(text=record["query"], turn_index=len(state.turns))
        if modality is Modality.TEXT:
            response = Response(modality=modality, text_body=record["response"])
        elif modality is Modality.SQL:
            ast = parse_sql(record["response"])
            response = Response(modality=modality, sql_body=ast,
                                rendered=execute(ast, table))
        else:
            # recompute the chart spec so the replayed transcript is intact
            from .dv import compile_vegalite, resolve_data_part
            from .metrics import last_sql_response

            dv = parse_dv_query(record["response"])
            data_sql = resolve_data_part(dv, last_sql_response(state.turns))
            spec = compile_vegalite(dv, execute(data_sql, table))
            response = Response(modality=modality, dv_body=dv, rendered=spec)
        state.turns.append((query, response))


def _response_surface(response: Response) -> str:
    if response.modality is Modality.TEXT:
        return response.text_body
    if response.modality is Modality.SQL:
        return sql_to_string(response.sql_body)
    return dv_to_string(response.dv_body)


class CreateSessionRequest(BaseModel):
    table: str


class MessageRequest(BaseModel):
    text: str


def create_app(model, tables: dict[str, Table],
               state_path: Optional[str] = None,
               use_rule_classifier: bool = False) -> FastAPI:
    app = FastAPI(title="chatviz", version="0.1.0")
    store = SessionStore(state_path)
    store.load(tables)
    app.state.store = store

    def _state_or_404(session_id: str) -> SessionState:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail={
                "code": "UNKNOWN_SESSION", "message": f"no session {session_id!r}",
            })

    def _transcript(state: SessionState) -> dict:
        return {
            "id": state.id,
            "dataset_ref": state.dataset_ref,
            "turns": [
                {"query": q.text, **turn_payload(r)} for q, r in state.turns
            ],
        }

    @app.post("/sessions", status_code=201)
    def create_session(request: CreateSessionRequest):
        if request.table not in tables:
            raise HTTPException(status_code=404, detail={
                "code": "UNKNOWN_TABLE", "message": f"no table {request.table!r}",
            })
        state = store.create(request.table)
        return {"id": state.id, "dataset_ref": state.dataset_ref}

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": [
            {"id": s.id, "dataset_ref": s.dataset_ref, "turns": len(s.turns)}
            for s in store.sessions.values()
        ]}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _transcript(_state_or_404(session_id))

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, request: MessageRequest):
        if not request.text.strip():
            raise HTTPException(status_code=422, detail={
                "code": "EMPTY_QUERY", "message": "query text must be non-empty",
            })
        state = _state_or_404(session_id)
        table = tables[state.dataset_ref]
        with state.lock:
            query = Query(text=request.text, turn_index=len(state.turns))
            try:
                response = respond(model, table, tuple(state.turns), query,
                                   use_rule_classifier=use_rule_classifier)
            except ChatvizError as exc:
                raise HTTPException(status_code=500, detail={
                    "code": error_code(exc), "message": str(exc),
                })
            store.append_turn(state, query, response)
            return turn_payload(response)

    return app
