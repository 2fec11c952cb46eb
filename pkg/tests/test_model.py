import numpy as np
import pytest

from chatviz.data import Modality, samples_from_sessions
from chatviz.datagen import bundled_tables, case_study_table, make_corpus
from chatviz.encoding import tokenize
from chatviz.errors import NoDataSource
from chatviz.model import ModelConfig, NeuralModel, Trainer, build_vocabs
from chatviz.nn import Tensor, grad_check
from chatviz.semql import actions_of, parse_actions, sql_to_semql
from chatviz.sql import parse_sql


def tiny_config(**overrides):
    base = dict(d_m=16, g=2, k_blocks=1, d_e=12, d_a=8, d_t=8, d_ff=24,
                seed=0, lr=3e-3, batch_size=8,
                q_budget=16, hist_budget=24, data_budget=24, row_budget=3)
    base.update(overrides)
    return ModelConfig(**base)


@pytest.fixture(scope="module")
def setup():
    sessions = make_corpus(3, seed=2)
    tables = bundled_tables()
    vocab, dv_vocab = build_vocabs(sessions, tables)
    model = NeuralModel(tiny_config(), vocab, dv_vocab)
    return sessions, tables, model


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(d_m=10, g=4)
    with pytest.raises(ValueError):
        ModelConfig(d_m=9, g=3)


def test_encode_shapes_and_pooled_mean(setup):
    sessions, tables, model = setup
    table = tables["products"]
    enc = model.encode("how many rows does the table have", (), table)
    l = len(enc.input.ids)
    assert enc.states.shape == (l, model.config.d_m)
    assert enc.embeddings.shape == (l, model.config.d_e)
    assert np.allclose(enc.pooled.data, enc.states.data.mean(axis=0), atol=1e-12)


def test_encode_single_token_pools_to_itself(setup):
    _, tables, model = setup
    enc = model.encode_input(
        type(model.prepare_input("x", (), tables["products"]))(
            tokens=("x",), ids=(model.vocab.id("x"),), segments=("query",))
    )
    assert np.allclose(enc.pooled.data, enc.states.data[0])


def test_encode_order_sensitivity(setup):
    _, tables, model = setup
    table = tables["products"]
    one = model.encode("price of toys", (), table)
    two = model.encode("toys of price", (), table)
    assert not np.allclose(one.states.data, two.states.data)


def test_encode_deterministic(setup):
    _, tables, model = setup
    table = tables["products"]
    one = model.encode("list all values of name", (), table)
    two = model.encode("list all values of name", (), table)
    assert np.array_equal(one.states.data, two.states.data)


def test_classifier_tie_breaks_to_text(setup):
    _, tables, model = setup
    enc = model.encode("hello", (), tables["products"])

    class TiedHead:
        def __call__(self, pooled):
            return Tensor(np.zeros(3))

    original = model.cls_head
    model.cls_head = TiedHead()
    try:
        assert model.classify(enc) is Modality.TEXT
    finally:
        model.cls_head = original


def test_decode_text_zero_budget(setup):
    _, tables, model = setup
    enc = model.encode("hello", (), tables["products"])
    assert model.decode_text(enc, max_len=0) == []


def test_decode_semql_is_grammatical(setup):
    _, tables, model = setup
    table = tables["products"]
    enc = model.encode("what is the average price", (), table)
    actions = model.decode_semql(enc, table)
    parse_actions(actions)  # raises if the derivation is invalid
    assert len(actions) <= model.config.max_actions


def test_rule_masking_zeroes_illegal(setup):
    _, tables, model = setup
    from chatviz.nn import masked_softmax

    logits = Tensor(np.random.default_rng(0).normal(size=5), requires_grad=True)
    mask = np.array([True, False, True, False, True])
    probs = masked_softmax(logits, mask)
    assert probs.data[1] == 0.0 and probs.data[3] == 0.0
    assert abs(probs.data.sum() - 1.0) < 1e-12


def test_pointer_single_column_probability_one(setup):
    _, tables, model = setup
    table = case_study_table()
    single = type(table)(name="t", columns=table.columns[:1], rows=(("a",), ("b",)))
    enc = model.encode("name", (), single)
    col_embs = model.column_embeddings(single)
    assert col_embs.shape[0] == 2  # '*' plus the single column
    u = Tensor(np.random.default_rng(1).normal(size=model.config.d_m))
    logits = model.pointer_logits(u, col_embs, enc).data
    exps = np.exp(logits - logits.max())
    assert exps.sum() > 0


def test_pointer_permutation_equivariance(setup):
    _, tables, model = setup
    table = tables["products"]
    enc = model.encode("price and rating please", (), table)
    u = Tensor(np.random.default_rng(2).normal(size=model.config.d_m))
    base = model.pointer_logits(u, model.column_embeddings(table), enc).data

    permuted_cols = (table.columns[2], table.columns[0], table.columns[1],
                     table.columns[3], table.columns[4])
    permuted_rows = tuple((r[2], r[0], r[1], r[3], r[4]) for r in table.rows)
    permuted = type(table)(name=table.name, columns=permuted_cols, rows=permuted_rows)
    after = model.pointer_logits(u, model.column_embeddings(permuted), enc).data
    # pointer index 0 is '*'; schema permutation permutes the rest identically
    assert np.allclose(after[0], base[0])
    assert np.allclose(after[1:], base[[3, 1, 2, 4, 5]])


def test_pointer_gradcheck():
    sessions = make_corpus(2, seed=4)
    tables = bundled_tables()
    vocab, dv_vocab = build_vocabs(sessions, tables)
    model = NeuralModel(tiny_config(d_m=8, g=2, d_e=8, d_ff=16), vocab, dv_vocab)
    table = case_study_table()
    enc = model.encode("average price per name", (), table)
    col_embs = model.column_embeddings(table)
    params = {
        "state_to_emb": model.state_to_emb,
        "ptr_w": model.ptr_w,
        "word_emb": model.word_emb.table,
    }
    u = Tensor(np.random.default_rng(3).normal(size=8))

    from chatviz.nn import masked_nll

    def loss():
        enc_fresh = model.encode("average price per name", (), table)
        logits = model.pointer_logits(u, model.column_embeddings(table), enc_fresh)
        return masked_nll(logits, np.ones(logits.shape[0], dtype=bool), 2)

    report = grad_check(loss, params)
    assert report.passed(1e-4), (report.worst_param, report.max_rel_error)


def test_loss_actions_matches_hand_sum(setup):
    sessions, tables, model = setup
    table = tables["products"]
    sql = parse_sql("SELECT name FROM products")
    gold = actions_of(sql_to_semql(sql, table))
    enc = model.encode("list all values of name", (), table)
    loss = model.loss_actions(enc, gold, table)
    assert loss.item() > 0.0
    assert np.isfinite(loss.item())


def test_loss_text_uniform_analytic(setup):
    _, tables, model = setup
    # with an untrained head the loss is finite and positive
    enc = model.encode("hello", (), tables["products"])
    ids = model.vocab.encode(tokenize("hello there")) + [model.vocab.eos_id]
    loss = model.loss_text(enc, ids)
    assert np.isfinite(loss.item()) and loss.item() > 0.0


def test_decode_dv_fallback_and_no_source(setup):
    _, tables, model = setup
    table = tables["products"]
    enc = model.encode("draw something", (), table)

    class BrokenDv:
        eos_id = model.dv_vocab.eos_id
        def token(self, idx):
            return "garbage"
    # force unparseable output by decoding with max_len=1 over a fresh model:
    # the untrained decoder emits arbitrary tokens, so parse may fail; instead
    # drive the fallback contract directly
    r_sql = parse_sql("SELECT name, price FROM products")
    original = model._greedy_tokens
    model._greedy_tokens = lambda *a, **k: ["not", "a", "chart"]
    try:
        dv = model.decode_dv(enc, r_sql)
        assert dv.chart_type == "BAR" and dv.data_part is None
        with pytest.raises(NoDataSource):
            model.decode_dv(enc, None)
    finally:
        model._greedy_tokens = original


def test_trainer_skips_empty_partition(setup):
    sessions, tables, _ = setup
    vocab, dv_vocab = build_vocabs(sessions, tables)
    model = NeuralModel(tiny_config(seed=5), vocab, dv_vocab)
    trainer = Trainer(model, tables)
    samples = [s for s in samples_from_sessions(sessions)
               if s.gold.modality is Modality.TEXT][:4]
    metrics = trainer.train_epoch(samples)
    assert metrics["loss_sql"] == 0.0  # no data-turn batch ran
    assert metrics["loss_text"] > 0.0


def test_training_loss_decreases_first_epochs(setup):
    sessions, tables, _ = setup
    vocab, dv_vocab = build_vocabs(sessions, tables)
    model = NeuralModel(tiny_config(seed=6), vocab, dv_vocab)
    trainer = Trainer(model, tables)
    samples = samples_from_sessions(sessions)
    losses = []
    for _ in range(10):
        metrics = trainer.train_epoch(samples)
        losses.append(metrics["loss_text"] + metrics["loss_sql"] + metrics["loss_dv"])
    assert losses[-1] < losses[0]


def test_training_deterministic_under_seed(setup):
    sessions, tables, _ = setup
    samples = samples_from_sessions(sessions)

    def run():
        vocab, dv_vocab = build_vocabs(sessions, tables)
        model = NeuralModel(tiny_config(seed=7), vocab, dv_vocab)
        trainer = Trainer(model, tables)
        out = [trainer.train_epoch(samples) for _ in range(3)]
        return out[-1]

    assert run() == run()


def test_checkpoint_roundtrip(tmp_path, setup):
    sessions, tables, model = setup
    path = str(tmp_path / "model.npz")
    model.save(path)
    loaded = NeuralModel.load(path)
    assert loaded.config == model.config
    table = tables["products"]
    one = model.encode("hello there", (), table)
    two = loaded.encode("hello there", (), table)
    assert np.allclose(one.states.data, two.states.data)
    for name, tensor in model.ps.params.items():
        assert np.array_equal(tensor.data, loaded.ps.params[name].data)


def test_pretrained_embeddings_loaded(tmp_path):
    sessions = make_corpus(2, seed=8)
    tables = bundled_tables()
    vocab, dv_vocab = build_vocabs(sessions, tables)
    path = tmp_path / "vectors.txt"
    target = "price"
    assert target in vocab.index
    row = " ".join(["7.5"] * 12)
    path.write_text(f"{target} {row}\n", encoding="utf-8")
    model = NeuralModel(tiny_config(embeddings_path=str(path)), vocab, dv_vocab)
    assert np.allclose(model.word_emb.table.data[vocab.id(target)], 7.5)
    assert np.all(model.word_emb.table.data[vocab.pad_id] == 0.0)
    other = model.word_emb.table.data[vocab.id("name")]
    assert np.all(np.abs(other) <= 0.1)  # absent words keep the seeded fallback


def test_decoder_order_permutation_still_trains(setup):
    sessions, tables, _ = setup
    samples = samples_from_sessions(sessions)
    from chatviz.model import MODALITY_ORDER

    def run(order):
        vocab, dv_vocab = build_vocabs(sessions, tables)
        model = NeuralModel(tiny_config(seed=13), vocab, dv_vocab)
        trainer = Trainer(model, tables, modality_order=order)
        return [trainer.train_epoch(samples) for _ in range(5)]

    default = run(MODALITY_ORDER)
    permuted = run((Modality.DV, Modality.SQL, Modality.TEXT))
    # decoder parameter sets are disjoint and the shared encoder steps once
    # at the end of the batch, so phase order only permutes the encoder's
    # gradient-accumulation order: trajectories agree to float rounding
    for before, after in zip(default, permuted):
        for key in ("loss_text", "loss_sql", "loss_dv"):
            assert before[key] == pytest.approx(after[key], rel=1e-9)
    total = lambda m: m["loss_text"] + m["loss_sql"] + m["loss_dv"]
    assert total(default[-1]) < total(default[0])


def test_text_decoder_overfits_single_pair():
    sessions = make_corpus(2, seed=14)
    tables = bundled_tables()
    vocab, dv_vocab = build_vocabs(sessions, tables)
    model = NeuralModel(tiny_config(d_m=32, d_e=24, d_ff=48, seed=15, lr=1e-2),
                        vocab, dv_vocab)
    table = tables["products"]
    gold_text = "the columns are name and price"
    assert all(t in model.vocab for t in tokenize(gold_text))
    target = model.vocab.encode(tokenize(gold_text)) + [model.vocab.eos_id]

    from chatviz.nn import Adam

    opt = Adam({**model.ps.subset("text."), **model.ps.subset("encoder.")}, lr=1e-2)
    for _ in range(80):
        for tensor in model.ps.params.values():
            tensor.zero_grad()
        enc = model.encode("what is this table about", (), table)
        loss = model.loss_text(enc, target)
        loss.backward()
        opt.step()

    enc = model.encode("what is this table about", (), table)
    assert model.decode_text(enc) == tokenize(gold_text)


def test_checkpoint_load_ignores_missing_vector_file(tmp_path):
    sessions = make_corpus(2, seed=16)
    tables = bundled_tables()
    vocab, dv_vocab = build_vocabs(sessions, tables)
    vectors = tmp_path / "vectors.txt"
    vectors.write_text("price " + " ".join(["1.0"] * 12) + "\n", encoding="utf-8")
    model = NeuralModel(tiny_config(embeddings_path=str(vectors)), vocab, dv_vocab)
    path = str(tmp_path / "model.npz")
    model.save(path)
    vectors.unlink()  # the checkpoint must stand on its own
    loaded = NeuralModel.load(path)
    assert np.array_equal(loaded.word_emb.table.data, model.word_emb.table.data)
