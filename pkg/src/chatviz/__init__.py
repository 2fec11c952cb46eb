"""chatviz: answer multi-turn data-analysis dialogues with text, SQL-backed
tables, and Vega-Lite charts."""

__version__ = "0.1.0"

from .data import (
    Column,
    DialogueSession,
    Modality,
    Query,
    Response,
    Table,
    TrainingSample,
    load_table,
    samples_from_session,
    samples_from_sessions,
)

__all__ = [
    "Column", "DialogueSession", "Modality", "Query", "Response", "Table",
    "TrainingSample", "load_table", "samples_from_session",
    "samples_from_sessions", "__version__",
]
