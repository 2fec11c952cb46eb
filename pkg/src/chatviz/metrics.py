"""Evaluation measures for the three response modalities.

Text quality uses sentence-level n-gram overlap (BLEU), longest common
subsequence F1 (ROUGE-L), and a resource-free unigram aligner
(``meteor_lite``: exact + suffix-stem matching, no synonym tables).
Structured outputs are scored by sketch / canonical-string equality and by
chart-type, axis-name and executed-data agreement.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .data import Modality, Table
from .dv import DvQuery
from .encoding import tokenize
from .errors import ChatvizError
from .semql import (
    ActionSequence,
    actions_of,
    attach_literals,
    parse_actions,
    semql_to_sql,
    sketch_of,
    sql_to_semql,
)
from .sql.ast import SqlAst
from .sql.canonical import canonical_sql
from .sql.executor import execute

_EPS = 1e-9


def bleu(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """Sentence BLEU: orders 1-4 with uniform weights over the orders the
    candidate is long enough for, brevity penalty, and epsilon smoothing for
    zero match counts."""
    if not candidate:
        return 0.0
    log_precisions = []
    for n in range(1, 5):
        total = len(candidate) - n + 1
        if total <= 0:
            continue
        cand_grams = Counter(
            tuple(candidate[i:i + n]) for i in range(total)
        )
        ref_grams = Counter(
            tuple(reference[i:i + n]) for i in range(len(reference) - n + 1)
        )
        matches = sum(min(count, ref_grams[gram]) for gram, count in cand_grams.items())
        log_precisions.append(math.log(matches / total if matches > 0 else _EPS))
    if len(candidate) >= len(reference):
        brevity = 1.0
    else:
        brevity = math.exp(1.0 - len(reference) / len(candidate))
    return brevity * math.exp(sum(log_precisions) / len(log_precisions))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    rows = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                rows[i][j] = rows[i - 1][j - 1] + 1
            else:
                rows[i][j] = max(rows[i - 1][j], rows[i][j - 1])
    return rows[-1][-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """LCS-based F1 (beta = 1)."""
    if not candidate or not reference:
        return 0.0
    lcs = _lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return 2.0 * precision * recall / (precision + recall)


_STEM_SUFFIXES = ("ing", "ed", "es", "ly", "s")
_VOWELS = set("aeiou")


def _stem(token: str) -> str:
    for suffix in _STEM_SUFFIXES:
        if token.endswith(suffix) and len(token) - len(suffix) >= 3:
            token = token[: -len(suffix)]
            # reduce a trailing doubled consonant (running -> runn -> run)
            if len(token) >= 4 and token[-1] == token[-2] and token[-1] not in _VOWELS:
                token = token[:-1]
            break
    return token


def meteor_lite(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """Unigram alignment score: exact matches first, then suffix-stem
    matches; recall-weighted harmonic mean with a fragmentation penalty.
    A single contiguous alignment chunk carries no penalty, so identical
    sentences score exactly 1."""
    if not candidate or not reference:
        return 0.0
    matched_ref: set[int] = set()
    alignment: list[tuple[int, int]] = []

    def align(key) -> None:
        ref_keys = [key(t) for t in reference]
        aligned_cand = {c for c, _ in alignment}
        for ci, token in enumerate(candidate):
            if ci in aligned_cand:
                continue
            want = key(token)
            for ri, ref_key in enumerate(ref_keys):
                if ri in matched_ref:
                    continue
                if ref_key == want:
                    alignment.append((ci, ri))
                    matched_ref.add(ri)
                    aligned_cand.add(ci)
                    break

    align(lambda t: t)
    align(_stem)

    matches = len(alignment)
    if matches == 0:
        return 0.0
    alignment.sort()
    chunks = 1
    for (c_prev, r_prev), (c_cur, r_cur) in zip(alignment, alignment[1:]):
        if c_cur != c_prev + 1 or r_cur != r_prev + 1:
            chunks += 1
    precision = matches / len(candidate)
    recall = matches / len(reference)
    f_mean = precision * recall / (0.9 * precision + 0.1 * recall)
    penalty = 0.0 if chunks <= 1 else 0.5 * (chunks / matches) ** 3
    return f_mean * (1.0 - penalty)


# -- structured accuracies ---------------------------------------------------------


def sketch_accuracy(pred: ActionSequence, gold: ActionSequence) -> int:
    return int(sketch_of(pred) == sketch_of(gold))


def sql_accuracy(pred: SqlAst, gold: SqlAst) -> int:
    return int(canonical_sql(pred) == canonical_sql(gold))


def _rows_close(a, b) -> bool:
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if x is None or y is None:
            if x is not y:
                return False
        elif isinstance(x, str) or isinstance(y, str):
            if x != y:
                return False
        elif abs(float(x) - float(y)) > _EPS:
            return False
    return True


def _result_key(row):
    return tuple(
        (0, "", 0.0) if v is None
        else (1, v, 0.0) if isinstance(v, str)
        else (2, "", float(v))
        for v in row
    )


def results_match(a, b) -> bool:
    """Executed tables equal as row multisets, numeric tolerance 1e-9."""
    if len(a.rows) != len(b.rows) or len(a.columns) != len(b.columns):
        return False
    left = sorted(a.rows, key=_result_key)
    right = sorted(b.rows, key=_result_key)
    return all(_rows_close(x, y) for x, y in zip(left, right))


def dv_accuracy(pred: DvQuery, gold: DvQuery, table: Table,
                r_sql: Optional[SqlAst] = None) -> tuple[int, int, int, int]:
    """(vis, axis, data, dv): chart type match, x/y output-name match,
    executed-data multiset match, and their conjunction. A missing data part
    on either side resolves to ``r_sql``."""
    vis = int(pred.chart_type == gold.chart_type)
    axis = data = 0
    try:
        pred_sql = pred.data_part or r_sql
        gold_sql = gold.data_part or r_sql
        if pred_sql is not None and gold_sql is not None:
            pred_result = execute(pred_sql, table)
            gold_result = execute(gold_sql, table)
            axis = int(pred_result.columns[:2] == gold_result.columns[:2])
            data = int(results_match(pred_result, gold_result))
    except ChatvizError:
        axis = data = 0
    dv = vis * axis * data
    return vis, axis, data, dv


# -- corpus-level evaluation --------------------------------------------------------


REPORT_COLUMNS = (
    "BLEU", "ROUGH", "METEOR",
    "Sketch Acc.", "SQL Acc.",
    "Vis. Acc.", "Axis Acc.", "Data Acc.", "DV Acc.",
)


@dataclass
class EvaluationReport:
    bleu: float
    rouge: float
    meteor: float
    sketch_acc: float
    sql_acc: float
    vis_acc: float
    axis_acc: float
    data_acc: float
    dv_acc: float
    classifier_acc: float
    turns: int

    def as_dict(self) -> dict:
        return {
            "bleu": self.bleu, "rouge": self.rouge, "meteor": self.meteor,
            "sketch_acc": self.sketch_acc, "sql_acc": self.sql_acc,
            "vis_acc": self.vis_acc, "axis_acc": self.axis_acc,
            "data_acc": self.data_acc, "dv_acc": self.dv_acc,
            "classifier_acc": self.classifier_acc, "turns": self.turns,
        }

    def table(self) -> str:
        """Human-readable report row under the standard column headers."""
        values = (
            f"{self.bleu:.4f}", f"{self.rouge:.4f}", f"{self.meteor:.4f}",
            f"{self.sketch_acc:.2%}", f"{self.sql_acc:.2%}",
            f"{self.vis_acc:.2%}", f"{self.axis_acc:.2%}",
            f"{self.data_acc:.2%}", f"{self.dv_acc:.2%}",
        )
        widths = [max(len(h), len(v)) for h, v in zip(REPORT_COLUMNS, values)]
        head = " | ".join(h.ljust(w) for h, w in zip(REPORT_COLUMNS, widths))
        line = " | ".join(v.ljust(w) for v, w in zip(values, widths))
        return head + "\n" + line + f"\nClassifier Acc. {self.classifier_acc:.2%}"


def _mean(values: list) -> float:
    return sum(values) / len(values) if values else 0.0


def last_sql_response(history) -> Optional[SqlAst]:
    for _, response in reversed(list(history)):
        if response.modality is Modality.SQL:
            return response.sql_body
    return None


def evaluate_corpus(model, sessions, tables: dict[str, Table]) -> EvaluationReport:
    """Greedy decoding over every turn, routed by the gold modality so each
    decoder is measured independently of classifier mistakes; classifier
    accuracy is reported separately."""
    text_scores = {"bleu": [], "rouge": [], "meteor": []}
    sql_scores = {"sketch": [], "sql": []}
    dv_scores = {"vis": [], "axis": [], "data": [], "dv": []}
    cls_hits = []

    for session in sessions:
        table = tables[session.dataset_ref]
        for i, (query, gold) in enumerate(session.turns):
            history = session.turns[:i]
            enc = model.encode(query.text, history, table)
            cls_hits.append(int(model.classify(enc) is gold.modality))

            if gold.modality is Modality.TEXT:
                pred_tokens = model.decode_text(enc)
                gold_tokens = tokenize(gold.text_body)
                text_scores["bleu"].append(bleu(pred_tokens, gold_tokens))
                text_scores["rouge"].append(rouge_l(pred_tokens, gold_tokens))
                text_scores["meteor"].append(meteor_lite(pred_tokens, gold_tokens))
            elif gold.modality is Modality.SQL:
                gold_actions = actions_of(sql_to_semql(gold.sql_body, table))
                try:
                    pred_actions = model.decode_semql(enc, table)
                    tree = attach_literals(parse_actions(pred_actions), query.text, table)
                    pred_ast = semql_to_sql(tree, table)
                except ChatvizError:
                    sql_scores["sketch"].append(0)
                    sql_scores["sql"].append(0)
                else:
                    sql_scores["sketch"].append(sketch_accuracy(pred_actions, gold_actions))
                    sql_scores["sql"].append(sql_accuracy(pred_ast, gold.sql_body))
            else:
                r_sql = last_sql_response(history)
                try:
                    pred_dv = model.decode_dv(enc, r_sql)
                    vis, axis, data, dv = dv_accuracy(pred_dv, gold.dv_body, table, r_sql)
                except ChatvizError:
                    vis = axis = data = dv = 0
                dv_scores["vis"].append(vis)
                dv_scores["axis"].append(axis)
                dv_scores["data"].append(data)
                dv_scores["dv"].append(dv)

    return EvaluationReport(
        bleu=_mean(text_scores["bleu"]),
        rouge=_mean(text_scores["rouge"]),
        meteor=_mean(text_scores["meteor"]),
        sketch_acc=_mean(sql_scores["sketch"]),
        sql_acc=_mean(sql_scores["sql"]),
        vis_acc=_mean(dv_scores["vis"]),
        axis_acc=_mean(dv_scores["axis"]),
        data_acc=_mean(dv_scores["data"]),
        dv_acc=_mean(dv_scores["dv"]),
        classifier_acc=_mean(cls_hits),
        turns=len(cls_hits),
    )
