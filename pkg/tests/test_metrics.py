import math

import pytest

from chatviz.datagen import bundled_tables, case_study_session, case_study_table
from chatviz.dv import parse_dv_query
from chatviz.metrics import (
    REPORT_COLUMNS,
    bleu,
    dv_accuracy,
    evaluate_corpus,
    meteor_lite,
    rouge_l,
    sketch_accuracy,
    sql_accuracy,
)
from chatviz.pipeline import GoldStubModel
from chatviz.semql import actions_of, sql_to_semql
from chatviz.sql import parse_sql


def _bleu_oracle(candidate, reference):
    """Independent n-gram tally under the same conventions: orders the
    candidate supports, uniform weights, epsilon for zero matches."""
    if not candidate:
        return 0.0
    logs = []
    for n in range(1, 5):
        cand = [tuple(candidate[i:i + n]) for i in range(len(candidate) - n + 1)]
        if not cand:
            continue
        ref = [tuple(reference[i:i + n]) for i in range(len(reference) - n + 1)]
        clipped = 0
        remaining = list(ref)
        for gram in cand:
            if gram in remaining:
                remaining.remove(gram)
                clipped += 1
        logs.append(math.log(clipped / len(cand)) if clipped else math.log(1e-9))
    bp = 1.0 if len(candidate) >= len(reference) else \
        math.exp(1.0 - len(reference) / len(candidate))
    return bp * math.exp(sum(logs) / len(logs))


def test_bleu_identity():
    assert bleu("the cat sat".split(), "the cat sat".split()) == pytest.approx(1.0)


def test_bleu_disjoint_near_zero():
    assert bleu("a b c".split(), "x y z".split()) < 1e-6


def test_bleu_empty_candidate():
    assert bleu([], "a b".split()) == 0.0


def test_bleu_matches_counting_oracle():
    cases = [
        ("the cat sat", "the cat sat down"),
        ("a b a b", "a b b a"),
        ("one two three four five", "one two three four five six"),
        ("x", "x y"),
    ]
    for cand, ref in cases:
        assert bleu(cand.split(), ref.split()) == pytest.approx(
            _bleu_oracle(cand.split(), ref.split()), abs=1e-12)


def test_rouge_identity_and_empty():
    assert rouge_l("a b".split(), "a b".split()) == pytest.approx(1.0)
    assert rouge_l([], "a".split()) == 0.0


def test_rouge_hand_lcs():
    # LCS("a b c", "a x c") = 2 -> P = R = 2/3 -> F1 = 2/3
    assert rouge_l("a b c".split(), "a x c".split()) == pytest.approx(2.0 / 3.0)


def test_meteor_identity():
    assert meteor_lite("a b c".split(), "a b c".split()) == pytest.approx(1.0)


def test_meteor_no_overlap():
    assert meteor_lite("a b".split(), "x y".split()) == 0.0


def test_meteor_swapped_formula():
    # two matches in two chunks: F = 1, penalty = 0.5 * (2/2)^3
    assert meteor_lite("the cat".split(), "cat the".split()) == pytest.approx(0.5)


def test_meteor_stem_match():
    # "running" aligns with "run" through the suffix stemmer
    score = meteor_lite("he was running".split(), "he was run".split())
    assert score > 0.9


def test_sketch_and_sql_accuracy():
    table = case_study_table()
    gold_sql = parse_sql("SELECT name, AVG(price) FROM product GROUP BY name")
    gold = actions_of(sql_to_semql(gold_sql, table))
    assert sketch_accuracy(gold, gold) == 1
    assert sql_accuracy(gold_sql, gold_sql) == 1

    other_sql = parse_sql("SELECT name, AVG(name) FROM product GROUP BY name")
    other = actions_of(sql_to_semql(other_sql, table))
    assert sketch_accuracy(other, gold) == 1  # same shape, different column
    assert sql_accuracy(other_sql, gold_sql) == 0

    reordered = parse_sql("SELECT a FROM t WHERE x > 1 AND y < 2")
    flipped = parse_sql("SELECT a FROM t WHERE y < 2 AND x > 1")
    assert sql_accuracy(reordered, flipped) == 1


def test_dv_accuracy_truth_table():
    table = case_study_table()
    gold = parse_dv_query("VISUALIZE BAR SELECT name, AVG(price) FROM product GROUP BY name")
    assert dv_accuracy(gold, gold, table) == (1, 1, 1, 1)

    pie = parse_dv_query("VISUALIZE PIE SELECT name, AVG(price) FROM product GROUP BY name")
    assert dv_accuracy(pie, gold, table) == (0, 1, 1, 0)

    filtered = parse_dv_query(
        "VISUALIZE BAR SELECT name, AVG(price) FROM product WHERE price > 1 GROUP BY name")
    vis, axis, data, dv = dv_accuracy(filtered, gold, table)
    assert (vis, axis, data, dv) == (1, 1, 0, 0)


def test_dv_accuracy_is_conjunction():
    table = case_study_table()
    gold = parse_dv_query("VISUALIZE BAR SELECT name, AVG(price) FROM product GROUP BY name")
    pie_filtered = parse_dv_query(
        "VISUALIZE PIE SELECT name, AVG(price) FROM product WHERE price > 1 GROUP BY name")
    vis, axis, data, dv = dv_accuracy(pie_filtered, gold, table)
    assert dv == vis * axis * data == 0


def test_evaluate_corpus_gold_stub_upper_bound():
    session = case_study_session()
    tables = bundled_tables()
    stub = GoldStubModel([session])
    report = evaluate_corpus(stub, [session], tables)
    assert report.bleu == pytest.approx(1.0)
    assert report.rouge == pytest.approx(1.0)
    assert report.meteor == pytest.approx(1.0)
    assert report.sketch_acc == 1.0
    assert report.sql_acc == 1.0
    assert report.dv_acc == 1.0
    assert report.classifier_acc == 1.0
    assert report.turns == 4


def test_report_table_mirrors_reference_columns():
    session = case_study_session()
    tables = bundled_tables()
    report = evaluate_corpus(GoldStubModel([session]), [session], tables)
    text = report.table()
    for column in REPORT_COLUMNS:
        assert column in text


def test_text_metrics_stay_in_unit_interval():
    import numpy as np

    rng = np.random.default_rng(33)
    words = ["a", "b", "c", "d", "the", "cat", "ran"]
    for _ in range(200):
        cand = [words[i] for i in rng.integers(0, len(words), rng.integers(0, 7))]
        ref = [words[i] for i in rng.integers(0, len(words), rng.integers(1, 7))]
        for metric in (bleu, rouge_l, meteor_lite):
            score = metric(cand, ref)
            assert 0.0 <= score <= 1.0, (metric.__name__, cand, ref, score)
