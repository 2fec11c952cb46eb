"""Command-line entry points: corpus synthesis, training, evaluation, the
HTTP service, and a one-shot scripting pipeline."""
from __future__ import annotations

import argparse
import glob
import json
import os
import sys
from typing import Optional

from .corpus import load_sessions, save_sessions
from .data import Query, Table, samples_from_sessions
from .datagen import bundled_tables, corpus_stats, make_corpus
from .errors import ChatvizError
from .metrics import evaluate_corpus
from .model import ModelConfig, NeuralModel, Trainer, build_vocabs
from .pipeline import GoldStubModel, respond
from .service import create_app, turn_payload


def _load_tables(tables_dir: Optional[str]) -> dict[str, Table]:
    if tables_dir is None:
        return bundled_tables()
    from .data import load_table

    tables = {}
    for path in sorted(glob.glob(os.path.join(tables_dir, "*.csv"))):
        table = load_table(path)
        tables[table.name] = table
    if not tables:
        raise ChatvizError(f"no CSV tables found in {tables_dir!r}")
    return tables


def _load_config(path: Optional[str], seed: Optional[int]) -> tuple[ModelConfig, dict]:
    """Read a JSON config: model fields under "model" (or at the top level)
    plus path extras such as "tables_dir"."""
    fields: dict = {}
    extras: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
        if "model" in raw:
            fields = raw["model"]
            extras = {k: v for k, v in raw.items() if k != "model"}
        else:
            fields = raw
    config = ModelConfig(**fields)
    if seed is not None:
        config.seed = seed
    return config, extras


def _build_model(args) -> tuple[object, dict[str, Table]]:
    tables = _load_tables(getattr(args, "tables", None))
    if getattr(args, "gold_corpus", None):
        return GoldStubModel(load_sessions(args.gold_corpus)), tables
    if getattr(args, "checkpoint", None):
        return NeuralModel.load(args.checkpoint), tables
    raise ChatvizError("provide --checkpoint or --gold-corpus")


def cmd_synth(args) -> int:
    sessions = make_corpus(args.sessions, seed=args.seed)
    save_sessions(sessions, args.out)
    stats = corpus_stats(sessions)
    print(json.dumps(stats, sort_keys=True))
    return 0


def cmd_train(args) -> int:
    config, extras = _load_config(args.config, args.seed)
    tables = _load_tables(args.tables or extras.get("tables_dir"))
    sessions = load_sessions(args.corpus)
    samples = samples_from_sessions(sessions)
    vocab, dv_vocab = build_vocabs(sessions, tables)
    model = NeuralModel(config, vocab, dv_vocab)
    trainer = Trainer(model, tables)
    for epoch in range(1, args.epochs + 1):
        metrics = trainer.train_epoch(samples)
        if epoch % args.log_every == 0 or epoch == args.epochs:
            print(json.dumps({"epoch": epoch, **metrics}, sort_keys=True))
    model.save(args.out)
    print(f"saved checkpoint to {args.out}")
    return 0


def cmd_eval(args) -> int:
    model, tables = _build_model(args)
    sessions = load_sessions(args.corpus)
    report = evaluate_corpus(model, sessions, tables)
    print(report.table())
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as handle:
            json.dump(report.as_dict(), handle, sort_keys=True, indent=2)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    model, tables = _build_model(args)
    app = create_app(model, tables, state_path=args.state,
                     use_rule_classifier=args.rule_classifier)
    bind = os.environ.get("CHATVIZ_BIND", "127.0.0.1:8000")
    host, _, port = bind.partition(":")
    uvicorn.run(app, host=host, port=int(port or 8000))
    return 0


def cmd_pipeline(args) -> int:
    model, tables = _build_model(args)
    history = ()
    dataset_ref = args.table
    if args.session_file:
        sessions = load_sessions(args.session_file)
        if sessions:
            history = sessions[0].turns
            dataset_ref = sessions[0].dataset_ref
    if dataset_ref is None or dataset_ref not in tables:
        raise ChatvizError(f"unknown table {dataset_ref!r}")
    table = tables[dataset_ref]
    query = Query(text=args.query, turn_index=len(history))
    response = respond(model, table, history, query,
                       use_rule_classifier=args.rule_classifier)
    print(json.dumps(turn_payload(response), sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chatviz",
        description="conversational text-to-visualization engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a dialogue corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--sessions", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--tables", default=None)
    p.add_argument("--log-every", type=int, default=10)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--gold-corpus", default=None)
    p.add_argument("--tables", default=None)
    p.add_argument("--json-out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP chat service")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--gold-corpus", default=None)
    p.add_argument("--tables", default=None)
    p.add_argument("--state", default=None)
    p.add_argument("--rule-classifier", action="store_true")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("pipeline", help="answer one query (scripting)")
    p.add_argument("--query", required=True)
    p.add_argument("--session-file", default=None)
    p.add_argument("--table", default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--gold-corpus", default=None)
    p.add_argument("--tables", default=None)
    p.add_argument("--rule-classifier", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ChatvizError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
