import json

import pytest

from chatviz.cli import main
from chatviz.corpus import save_sessions
from chatviz.datagen import case_study_session


def test_synth_deterministic(tmp_path, capsys):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    assert main(["synth", "--out", str(a), "--sessions", "20", "--seed", "7"]) == 0
    assert main(["synth", "--out", str(b), "--sessions", "20", "--seed", "7"]) == 0
    assert a.read_bytes() == b.read_bytes()
    stats = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert stats["sessions"] == 20


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["synth", "--nonsense"])
    assert err.value.code == 2


def test_missing_subcommand_exits_2():
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2


def test_eval_with_gold_stub(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    save_sessions([case_study_session()], str(corpus))
    out_json = tmp_path / "report.json"
    code = main(["eval", "--corpus", str(corpus), "--gold-corpus", str(corpus),
                 "--json-out", str(out_json)])
    assert code == 0
    report = json.loads(out_json.read_text())
    assert report["dv_acc"] == 1.0
    assert "DV Acc." in capsys.readouterr().out


def test_pipeline_one_shot(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    save_sessions([case_study_session()], str(corpus))
    code = main([
        "pipeline",
        "--query", "give me a short description about the table",
        "--table", "product",
        "--gold-corpus", str(corpus),
    ])
    assert code == 0
    payload = json.loads(capsys.readouterr().out.strip())
    assert payload["modality"] == "text"


def test_pipeline_unknown_table_errors(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    save_sessions([case_study_session()], str(corpus))
    code = main(["pipeline", "--query", "hi", "--table", "nope",
                 "--gold-corpus", str(corpus)])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_train_and_eval_with_config(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    assert main(["synth", "--out", str(corpus), "--sessions", "3", "--seed", "3"]) == 0
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "model": {"d_m": 16, "g": 2, "d_e": 12, "d_a": 8, "d_t": 8, "d_ff": 24,
                  "q_budget": 12, "hist_budget": 16, "data_budget": 12,
                  "row_budget": 2, "lr": 0.003},
    }), encoding="utf-8")
    checkpoint = tmp_path / "model.npz"
    code = main(["train", "--corpus", str(corpus), "--out", str(checkpoint),
                 "--epochs", "2", "--seed", "5", "--config", str(config),
                 "--log-every", "1"])
    assert code == 0
    assert checkpoint.exists()
    code = main(["eval", "--corpus", str(corpus), "--checkpoint", str(checkpoint)])
    assert code == 0
    out = capsys.readouterr().out
    assert "BLEU" in out
