"""Session corpus files: JSON-lines, one dialogue session per line.

Each line is ``{"dataset_ref": ..., "id": ..., "turns": [...]}`` with turns
``{"modality": ..., "query": ..., "response": ...}``; the response is always
a string (plain text, a SQL query, or a chart query). ``save_sessions``
writes the canonical form (sorted keys, compact separators), which loads
back byte-identically.
"""
from __future__ import annotations

import json
from typing import Iterable

from .data import DialogueSession, Modality, Query, Response
from .dv import dv_to_string, parse_dv_query
from .errors import ChatvizError, CorpusError
from .sql.canonical import sql_to_string
from .sql.parser import parse_sql


def _response_to_string(response: Response) -> str:
    if response.modality is Modality.TEXT:
        return response.text_body
    if response.modality is Modality.SQL:
        return sql_to_string(response.sql_body)
    return dv_to_string(response.dv_body)


def _response_from_string(modality: Modality, text: str) -> Response:
    if modality is Modality.TEXT:
        return Response(modality=modality, text_body=text)
    if modality is Modality.SQL:
        return Response(modality=modality, sql_body=parse_sql(text))
    return Response(modality=modality, dv_body=parse_dv_query(text))


def session_to_dict(session: DialogueSession) -> dict:
    return {
        "dataset_ref": session.dataset_ref,
        "id": session.id,
        "turns": [
            {
                "modality": response.modality.value,
                "query": query.text,
                "response": _response_to_string(response),
            }
            for query, response in session.turns
        ],
    }


def session_from_dict(obj: dict) -> DialogueSession:
    session_id = obj.get("id", "?")
    turns = []
    for i, turn in enumerate(obj["turns"]):
        try:
            modality = Modality(turn["modality"])
            query = Query(text=turn["query"], turn_index=i)
            response = _response_from_string(modality, turn["response"])
        except (ChatvizError, KeyError, ValueError) as exc:
            raise CorpusError(str(exc), session_id=session_id, turn=i)
        turns.append((query, response))
    session = DialogueSession(
        id=session_id, dataset_ref=obj["dataset_ref"], turns=tuple(turns)
    )
    session.validate_gold()
    return session


def load_sessions(path: str) -> list[DialogueSession]:
    sessions = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"bad JSON on line {line_no}: {exc}")
            sessions.append(session_from_dict(obj))
    return sessions


def save_sessions(sessions: Iterable[DialogueSession], path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for session in sessions:
            handle.write(json.dumps(session_to_dict(session), sort_keys=True,
                                    separators=(",", ":")))
            handle.write("\n")
