"""Model input construction: tokenization, vocabulary, and the linearized
(query + history + dataset snapshot) sequence fed to the session encoder.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .data import Modality, Query, Response, Table
from .dv import dv_to_string
from .sql.canonical import canonical_sql

PAD = "<pad>"
UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"
ITEM_SEP = "|"
ROW_SEP = "&"

SPECIALS = (PAD, UNK, BOS, EOS, ITEM_SEP, ROW_SEP)

# lowercase; quoted strings and numbers stay whole; identifiers keep
# underscores and digits; anything else is a single-character token
_TOKEN_RE = re.compile(r"'[^']*'|\d+\.\d+|\d+|[a-z_][a-z0-9_]*|\S")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class Vocab:
    """Token <-> id table; id 0 is <pad> (the zero embedding row)."""

    def __init__(self, tokens: Sequence[str]):
        self.tokens = list(tokens)
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    @classmethod
    def build(cls, token_iter: Iterable[str], extra: Sequence[str] = ()) -> "Vocab":
        seen = set(SPECIALS) | set(extra)
        collected = sorted({t for t in token_iter if t not in seen})
        return cls(list(SPECIALS) + sorted(set(extra)) + collected)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @property
    def pad_id(self) -> int:
        return self.index[PAD]

    @property
    def unk_id(self) -> int:
        return self.index[UNK]

    @property
    def bos_id(self) -> int:
        return self.index[BOS]

    @property
    def eos_id(self) -> int:
        return self.index[EOS]

    def id(self, token: str) -> int:
        return self.index.get(token, self.index[UNK])

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    def token(self, idx: int) -> str:
        return self.tokens[idx]


def response_surface(response: Response) -> str:
    """Utterance text a response contributes to the dialogue history."""
    if response.modality is Modality.TEXT:
        return response.text_body
    if response.modality is Modality.SQL:
        return canonical_sql(response.sql_body)
    return dv_to_string(response.dv_body, canonical=True)


def linearize_history(history: Sequence[tuple[Query, Response]]) -> str:
    """Join prior utterances, oldest first, with the item separator."""
    utterances: list[str] = []
    for query, response in history:
        utterances.append(query.text)
        utterances.append(response_surface(response))
    return f" {ITEM_SEP} ".join(utterances)


def linearize_dataset(table: Table, row_budget: int, token_budget: int,
                      seed: int) -> str:
    """Schema-plus-snapshot sequence: per column, the column name then its
    values from randomly sampled rows, items separated by ``|`` and column
    groups by ``&``. All column names are always retained; values are added
    token by token until the budget is reached."""
    rng = np.random.default_rng(seed)
    n_rows = len(table.rows)
    take = min(row_budget, n_rows)
    sampled_idx = rng.choice(n_rows, size=take, replace=False) if take else []
    sampled = [table.rows[i] for i in sampled_idx]

    name_tokens = [tokenize(col.name) for col in table.columns]
    used = sum(len(t) for t in name_tokens) + max(0, len(table.columns) - 1)
    groups: list[list[str]] = [list(t) for t in name_tokens]

    budget_hit = False
    for col_no in range(len(table.columns)):
        if budget_hit:
            break
        for row in sampled:
            value = row[col_no]
            piece = [ITEM_SEP] + tokenize("null" if value is None else str(value))
            if used + len(piece) > token_budget:
                budget_hit = True
                break
            groups[col_no].extend(piece)
            used += len(piece)

    return f" {ROW_SEP} ".join(" ".join(g) for g in groups)


@dataclass(frozen=True)
class EncoderInput:
    tokens: tuple[str, ...]
    ids: tuple[int, ...]
    segments: tuple[str, ...]  # "query" | "history" | "dataset" per token


def build_encoder_input(query_text: str,
                        history: Sequence[tuple[Query, Response]],
                        table: Table,
                        vocab: Vocab,
                        q_budget: int = 32,
                        hist_budget: int = 64,
                        data_budget: int = 128,
                        row_budget: int = 8,
                        snapshot_seed: int = 0,
                        snapshot: Optional[str] = None) -> EncoderInput:
    """Assemble the encoder token sequence: query, then history (tail kept
    when over budget), then the dataset snapshot."""
    q_tokens = tokenize(query_text)[:q_budget]
    h_tokens = tokenize(linearize_history(history))
    if len(h_tokens) > hist_budget:
        h_tokens = h_tokens[-hist_budget:]
    if snapshot is None:
        snapshot = linearize_dataset(table, row_budget, data_budget, snapshot_seed)
    d_tokens = tokenize(snapshot)

    tokens = q_tokens + [ITEM_SEP] + h_tokens + [ITEM_SEP] + d_tokens
    segments = (
        ["query"] * (len(q_tokens) + 1)
        + ["history"] * (len(h_tokens) + 1)
        + ["dataset"] * len(d_tokens)
    )
    return EncoderInput(
        tokens=tuple(tokens),
        ids=tuple(vocab.encode(tokens)),
        segments=tuple(segments),
    )
