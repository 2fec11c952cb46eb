"""The conversational model: a shared dialogue-session encoder feeding a
response-type classifier and three decoders (free text, grammar-constrained
SQL actions with a column pointer, and chart-query surface tokens).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .data import Modality, Table, TrainingSample
from .dv import DvQuery, dv_to_string, parse_dv_query
from .encoding import (
    EncoderInput,
    Vocab,
    build_encoder_input,
    linearize_dataset,
    tokenize,
)
from .errors import ChatvizError, DerivationOverflow, NoDataSource
from .nn import (
    Adam,
    BiLSTM,
    DecoderBlock,
    Embedding,
    LSTMCell,
    Linear,
    ParamSet,
    Tensor,
    concat,
    cross_entropy,
    masked_nll,
    matmul,
    no_grad,
    positional_encoding,
    power,
    softmax,
    sqrt,
    stack,
    tanh,
    tmean,
    transpose,
    tsum,
)
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.optim import clip_gradients
from .semql import (
    Action,
    ActionSequence,
    Derivation,
    actions_of,
    apply_rule,
    define_grammar,
    select_column,
    sql_to_semql,
)

MODALITY_ORDER = (Modality.TEXT, Modality.SQL, Modality.DV)
_TYPE_APPLY, _TYPE_COLUMN = 0, 1


@dataclass
class ModelConfig:
    """Sizes and knobs; defaults follow the reference setting (hidden 512,
    4 heads, 1 block, 300-d word embeddings, 128-d action/type embeddings,
    Adam at 1e-4 with dialogue batches of 32)."""

    d_m: int = 512
    g: int = 4
    k_blocks: int = 1
    d_e: int = 300
    d_a: int = 128
    d_t: int = 128
    d_ff: Optional[int] = None
    vocab_size: int = 0
    seed: int = 0
    lr: float = 1e-4
    batch_size: int = 32
    embeddings_path: Optional[str] = None  # pretrained word vectors (text format)
    q_budget: int = 32
    hist_budget: int = 64
    data_budget: int = 128
    row_budget: int = 8
    max_len: int = 48
    max_actions: int = 64

    def __post_init__(self):
        if self.d_ff is None:
            self.d_ff = 4 * self.d_m
        if self.d_m % self.g != 0:
            raise ValueError("hidden size must be divisible by the head count")
        if self.d_m % 2 != 0:
            raise ValueError("hidden size must be even (two recurrent directions)")
        for name in ("d_m", "g", "d_e", "d_a", "d_t", "batch_size", "max_len"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class EncoderOutput:
    states: Tensor      # [l, d_m] per-token hidden vectors
    pooled: Tensor      # [d_m] mean over positions
    embeddings: Tensor  # [l, d_e] input word embeddings
    input: EncoderInput


def build_vocabs(sessions, tables: dict[str, Table]) -> tuple[Vocab, Vocab]:
    """Word vocabulary over queries, responses and table content, plus the
    restricted output vocabulary of the chart decoder."""
    tokens: list[str] = []
    dv_tokens: list[str] = []
    for session in sessions:
        for query, response in session.turns:
            tokens.extend(tokenize(query.text))
            if response.modality is Modality.TEXT:
                tokens.extend(tokenize(response.text_body))
            elif response.modality is Modality.SQL:
                from .sql.canonical import sql_to_string

                tokens.extend(tokenize(sql_to_string(response.sql_body)))
            else:
                surface_tokens = tokenize(dv_to_string(response.dv_body))
                tokens.extend(surface_tokens)
                dv_tokens.extend(surface_tokens)
    for table in tables.values():
        for col in table.columns:
            tokens.extend(tokenize(col.name))
        for row in table.rows:
            for value in row:
                tokens.extend(tokenize("null" if value is None else str(value)))
    vocab = Vocab.build(tokens, extra=("*", "null"))
    dv_vocab = Vocab.build(dv_tokens, extra=("*",))
    return vocab, dv_vocab


class NeuralModel:
    """All trainable parameters plus the decoding procedures."""

    def __init__(self, config: ModelConfig, vocab: Vocab, dv_vocab: Vocab):
        self.config = config
        self.vocab = vocab
        self.dv_vocab = dv_vocab
        self.grammar = define_grammar()
        config.vocab_size = len(vocab)
        rng = np.random.default_rng(config.seed)
        ps = ParamSet(rng)
        self.ps = ps
        d_m, d_e = config.d_m, config.d_e

        self.word_emb = Embedding(ps, "encoder.word_emb", len(vocab), d_e,
                                  scale=0.1, zero_row=vocab.pad_id)
        if config.embeddings_path:
            from .nn.layers import load_word_vectors

            table = load_word_vectors(config.embeddings_path, vocab.tokens, d_e, rng)
            table[vocab.pad_id] = 0.0
            self.word_emb.table.data = table
        self.bilstm = BiLSTM(ps, "encoder.bilstm", d_e, d_m)
        self.cls_head = Linear(ps, "classifier.head", d_m, 3)

        self.text_in = Linear(ps, "text.in_proj", d_e, d_m)
        self.text_blocks = [
            DecoderBlock(ps, f"text.block{i}", d_m, config.g, config.d_ff)
            for i in range(config.k_blocks)
        ]
        self.text_out = Linear(ps, "text.out_proj", d_m, len(vocab))

        self.dv_in = Linear(ps, "dv.in_proj", d_e, d_m)
        self.dv_blocks = [
            DecoderBlock(ps, f"dv.block{i}", d_m, config.g, config.d_ff)
            for i in range(config.k_blocks)
        ]
        self.dv_out = Linear(ps, "dv.out_proj", d_m, len(dv_vocab))

        n_a = self.grammar.n_a
        # +1 row: a shared embedding standing for "previous action picked a column"
        self.action_emb = Embedding(ps, "sql.action_emb", n_a + 1, config.d_a,
                                    scale=1.0 / np.sqrt(config.d_a))
        self.type_emb = Embedding(ps, "sql.type_emb", 2, config.d_t,
                                  scale=1.0 / np.sqrt(config.d_t))
        self.cell = LSTMCell(ps, "sql.cell", config.d_a + config.d_t + d_m, d_m)
        self.attn_w = ps.add("sql.attn_w", (d_m, d_m), fan_in=d_m)
        self.mix = Linear(ps, "sql.mix", 2 * d_m, d_m)
        self.rule_out = Linear(ps, "sql.rule_out", d_m, n_a)
        self.state_to_emb = ps.add("sql.state_to_emb", (d_m, d_e), fan_in=d_m)
        self.ptr_w = ps.add("sql.ptr_w", (d_e, d_m), fan_in=d_e)

        self._pe = positional_encoding(config.max_len + 1, d_m)
        self._snapshots: dict[tuple[int, int], str] = {}

    # -- encoding -----------------------------------------------------------

    def snapshot(self, table: Table) -> str:
        key = (id(table), self.config.seed)
        if key not in self._snapshots:
            self._snapshots[key] = linearize_dataset(
                table, self.config.row_budget, self.config.data_budget,
                self.config.seed,
            )
        return self._snapshots[key]

    def prepare_input(self, query_text: str, history, table: Table) -> EncoderInput:
        return build_encoder_input(
            query_text, history, table, self.vocab,
            q_budget=self.config.q_budget,
            hist_budget=self.config.hist_budget,
            data_budget=self.config.data_budget,
            row_budget=self.config.row_budget,
            snapshot=self.snapshot(table),
        )

    def encode_input(self, enc_input: EncoderInput) -> EncoderOutput:
        if not enc_input.ids:
            raise ValueError("cannot encode an empty input")
        emb = self.word_emb(list(enc_input.ids))
        states = self.bilstm(emb)
        pooled = tmean(states, axis=0)
        return EncoderOutput(states=states, pooled=pooled, embeddings=emb,
                             input=enc_input)

    def encode(self, query_text: str, history, table: Table) -> EncoderOutput:
        return self.encode_input(self.prepare_input(query_text, history, table))

    # -- classifier -----------------------------------------------------------

    def classify_logits(self, enc: EncoderOutput) -> Tensor:
        return self.cls_head(enc.pooled)

    def classify(self, enc: EncoderOutput) -> Modality:
        with no_grad():
            logits = self.classify_logits(enc).data
        return MODALITY_ORDER[int(np.argmax(logits))]

    # -- token decoders (text / chart surface) ----------------------------------

    def _block_logits(self, ids: Sequence[int], enc: EncoderOutput,
                      in_proj: Linear, blocks, out_proj: Linear) -> Tensor:
        emb = self.word_emb(list(ids))
        x = in_proj(emb) + Tensor(self._pe[: len(ids)])
        for block in blocks:
            x = block(x, enc.states)
        return out_proj(x)

    def loss_text(self, enc: EncoderOutput, target_ids: Sequence[int]) -> Tensor:
        inputs = [self.vocab.bos_id] + list(target_ids[:-1])
        logits = self._block_logits(inputs, enc, self.text_in, self.text_blocks,
                                    self.text_out)
        return cross_entropy(logits, target_ids)

    def loss_dv(self, enc: EncoderOutput, dv_target_ids: Sequence[int]) -> Tensor:
        global_ids = [self._dv_to_global(i) for i in dv_target_ids]
        inputs = [self.vocab.bos_id] + global_ids[:-1]
        logits = self._block_logits(inputs, enc, self.dv_in, self.dv_blocks,
                                    self.dv_out)
        return cross_entropy(logits, dv_target_ids)

    def _dv_to_global(self, dv_id: int) -> int:
        return self.vocab.id(self.dv_vocab.token(dv_id))

    def _greedy_tokens(self, enc: EncoderOutput, in_proj, blocks, out_proj,
                       out_vocab: Vocab, max_len: int) -> list[str]:
        tokens: list[str] = []
        ids = [self.vocab.bos_id]
        with no_grad():
            for _ in range(max_len):
                logits = self._block_logits(ids, enc, in_proj, blocks, out_proj)
                next_id = int(np.argmax(logits.data[-1]))
                if next_id == out_vocab.eos_id:
                    break
                token = out_vocab.token(next_id)
                tokens.append(token)
                ids.append(self.vocab.id(token))
        return tokens

    def decode_text(self, enc: EncoderOutput, max_len: Optional[int] = None) -> list[str]:
        limit = self.config.max_len if max_len is None else max_len
        return self._greedy_tokens(enc, self.text_in, self.text_blocks,
                                   self.text_out, self.vocab, limit)

    def decode_dv(self, enc: EncoderOutput, r_sql=None,
                  max_len: Optional[int] = None) -> DvQuery:
        """Greedy chart-query surface decoding; unparseable output falls back
        to a bare BAR chart over the last SQL response."""
        limit = self.config.max_len if max_len is None else max_len
        tokens = self._greedy_tokens(enc, self.dv_in, self.dv_blocks,
                                     self.dv_out, self.dv_vocab, limit)
        surface = " ".join(tokens)
        try:
            return parse_dv_query(surface)
        except ChatvizError:
            if r_sql is None:
                raise NoDataSource(
                    "chart decoding failed and there is no prior SQL response"
                )
            return DvQuery(chart_type="BAR")

    # -- structured SQL decoder ---------------------------------------------------

    def column_embeddings(self, table: Table) -> Tensor:
        """One vector per pointer column ('*' then schema columns): the mean
        of the column-name token embeddings."""
        rows = []
        for name in ("*",) + table.column_names:
            ids = self.vocab.encode(tokenize(name) or [name])
            rows.append(tmean(self.word_emb(ids), axis=0))
        return stack(rows, axis=0)

    def pointer_logits(self, u: Tensor, col_embs: Tensor, enc: EncoderOutput) -> Tensor:
        """Score every column against the decoder state: cosine-align columns
        with the query tokens, enrich with encoder states, then a bilinear
        match against the state."""
        col_norm = sqrt(tsum(power(col_embs, 2.0), axis=1, keepdims=True) + 1e-24)
        tok_norm = sqrt(tsum(power(enc.embeddings, 2.0), axis=1, keepdims=True) + 1e-24)
        cos = matmul(col_embs / col_norm, transpose(enc.embeddings / tok_norm))
        enriched = col_embs + matmul(cos, matmul(enc.states, self.state_to_emb))
        return matmul(matmul(enriched, self.ptr_w), u)

    def pointer_select(self, u: Tensor, col_embs: Tensor, enc: EncoderOutput) -> int:
        with no_grad():
            logits = self.pointer_logits(u, col_embs, enc).data
        return int(np.argmax(logits))

    def _sql_step(self, prev, enc: EncoderOutput):
        """One step of the action decoder: recurrent cell, attention over the
        encoder states, and the combined representation."""
        a_prev, e_prev, v_prev, state = prev
        x = concat([a_prev, e_prev, v_prev])
        h, c = self.cell(x, state)
        scores = matmul(matmul(h, self.attn_w), transpose(enc.states))
        weights = softmax(scores, axis=-1)
        v_new = matmul(weights, enc.states)
        u = tanh(self.mix(concat([h, v_new])))
        return (h, c), v_new, u

    def _sql_initial(self, enc: EncoderOutput):
        zeros_a = Tensor(np.zeros(self.config.d_a))
        zeros_e = Tensor(np.zeros(self.config.d_t))
        zeros_v = Tensor(np.zeros(self.config.d_m))
        state = (enc.pooled, Tensor(np.zeros(self.config.d_m)))
        return zeros_a, zeros_e, zeros_v, state

    def _embed_action(self, action: Action):
        if action.kind == "ApplyRule":
            a = self.action_emb([action.rule_id])[0]
            e = self.type_emb([_TYPE_APPLY])[0]
        else:
            a = self.action_emb([self.grammar.n_a])[0]
            e = self.type_emb([_TYPE_COLUMN])[0]
        return a, e

    def loss_actions(self, enc: EncoderOutput, gold_actions: ActionSequence,
                     table: Table) -> Tensor:
        """Teacher-forced negative log-likelihood, summed over the rule and
        column action families; decoding masks both to the grammar frontier."""
        col_embs = self.column_embeddings(table)
        n_cols = col_embs.shape[0]
        a_prev, e_prev, v_prev, state = self._sql_initial(enc)
        derivation = Derivation(self.grammar)
        losses = []
        for action in gold_actions:
            state, v_new, u = self._sql_step((a_prev, e_prev, v_prev, state), enc)
            if derivation.expects_column():
                logits = self.pointer_logits(u, col_embs, enc)
                mask = np.ones(n_cols, dtype=bool)
                losses.append(masked_nll(logits, mask, action.column_index))
            else:
                # unbounded rule logits: u is already tanh-bounded, and a
                # second squashing saturates the softmax and stalls training
                raw = self.rule_out(u)
                mask = np.zeros(self.grammar.n_a, dtype=bool)
                mask[list(derivation.legal_rule_ids())] = True
                losses.append(masked_nll(raw, mask, action.rule_id))
            a_prev, e_prev = self._embed_action(action)
            v_prev = v_new
            derivation.apply(action)
        total = losses[0]
        for piece in losses[1:]:
            total = total + piece
        return total

    def decode_semql(self, enc: EncoderOutput, table: Table,
                     max_actions: Optional[int] = None) -> ActionSequence:
        """Greedy grammar-masked decoding; every emitted sequence is a valid
        derivation by construction."""
        limit = self.config.max_actions if max_actions is None else max_actions
        with no_grad():
            col_embs = self.column_embeddings(table)
            a_prev, e_prev, v_prev, state = self._sql_initial(enc)
            derivation = Derivation(self.grammar)
            actions: list[Action] = []
            while not derivation.complete:
                if len(actions) >= limit:
                    raise DerivationOverflow(
                        f"derivation incomplete after {limit} actions"
                    )
                state, v_new, u = self._sql_step((a_prev, e_prev, v_prev, state), enc)
                if derivation.expects_column():
                    logits = self.pointer_logits(u, col_embs, enc).data
                    action = select_column(int(np.argmax(logits)))
                else:
                    raw = self.rule_out(u).data
                    legal = np.zeros(self.grammar.n_a, dtype=bool)
                    legal[list(derivation.legal_rule_ids())] = True
                    masked = np.where(legal, raw, -np.inf)
                    action = apply_rule(int(np.argmax(masked)))
                actions.append(action)
                derivation.apply(action)
                a_prev, e_prev = self._embed_action(action)
                v_prev = v_new
        return tuple(actions)

    # -- persistence ------------------------------------------------------------

    def save(self, path: str) -> None:
        meta = {
            "config": asdict(self.config),
            "vocab": self.vocab.tokens,
            "dv_vocab": self.dv_vocab.tokens,
        }
        save_checkpoint(path, self.ps.arrays(), meta)

    @classmethod
    def load(cls, path: str) -> "NeuralModel":
        arrays, meta = load_checkpoint(path)
        config = ModelConfig(**meta["config"])
        # weights come from the checkpoint; never re-read the vector file
        config.embeddings_path = None
        model = cls(config, Vocab(meta["vocab"]), Vocab(meta["dv_vocab"]))
        model.ps.load_arrays(arrays)
        return model


# -- gold targets ------------------------------------------------------------------


@dataclass
class PreparedSample:
    sample: TrainingSample
    table: Table
    enc_input: EncoderInput
    modality_index: int
    text_ids: Optional[list[int]] = None
    dv_ids: Optional[list[int]] = None
    gold_actions: Optional[ActionSequence] = None


def prepare_sample(model: NeuralModel, sample: TrainingSample, table: Table) -> PreparedSample:
    enc_input = model.prepare_input(sample.query.text, sample.history, table)
    prepared = PreparedSample(
        sample=sample,
        table=table,
        enc_input=enc_input,
        modality_index=MODALITY_ORDER.index(sample.gold.modality),
    )
    gold = sample.gold
    if gold.modality is Modality.TEXT:
        prepared.text_ids = model.vocab.encode(tokenize(gold.text_body)) + [model.vocab.eos_id]
    elif gold.modality is Modality.SQL:
        prepared.gold_actions = actions_of(sql_to_semql(gold.sql_body, table))
    else:
        surface = dv_to_string(gold.dv_body)
        prepared.dv_ids = model.dv_vocab.encode(tokenize(surface)) + [model.dv_vocab.eos_id]
    return prepared


class Trainer:
    """Batch scheduler for the shared-encoder / multi-decoder update rule:
    per batch, the three decoders are updated sequentially on their gold
    mini-batches (text, data, chart), the classifier head jointly, and the
    encoder exactly once, from the gradients accumulated across all phases.
    """

    GROUPS = {
        "text": "text.", "sql": "sql.", "dv": "dv.",
        "classifier": "classifier.", "encoder": "encoder.",
    }

    def __init__(self, model: NeuralModel, tables: dict[str, Table],
                 lr: Optional[float] = None, seed: Optional[int] = None,
                 clip_norm: float = 5.0,
                 modality_order: tuple[Modality, ...] = MODALITY_ORDER):
        self.model = model
        self.tables = tables
        self.clip_norm = clip_norm
        self.modality_order = modality_order
        rate = model.config.lr if lr is None else lr
        self.optimizers = {
            name: Adam(model.ps.subset(prefix), lr=rate)
            for name, prefix in self.GROUPS.items()
        }
        self.rng = np.random.default_rng(model.config.seed if seed is None else seed)
        self._prepared: dict[tuple, PreparedSample] = {}

    def _step(self, group: str) -> None:
        if self.clip_norm:
            clip_gradients(self.optimizers[group].params, self.clip_norm)
        self.optimizers[group].step()

    def prepare(self, sample: TrainingSample) -> PreparedSample:
        key = (sample.session_id, sample.query.turn_index, sample.query.text)
        if key not in self._prepared:
            table = self.tables[sample.dataset_ref]
            self._prepared[key] = prepare_sample(self.model, sample, table)
        return self._prepared[key]

    def _zero_all(self) -> None:
        for tensor in self.model.ps.params.values():
            tensor.zero_grad()

    def _sample_loss(self, prepared: PreparedSample, enc: EncoderOutput) -> Tensor:
        if prepared.text_ids is not None:
            return self.model.loss_text(enc, prepared.text_ids)
        if prepared.gold_actions is not None:
            return self.model.loss_actions(enc, prepared.gold_actions, prepared.table)
        return self.model.loss_dv(enc, prepared.dv_ids)

    def train_epoch(self, samples: Sequence[TrainingSample]) -> dict:
        order = self.rng.permutation(len(samples))
        batch_size = self.model.config.batch_size
        sums = {m: 0.0 for m in MODALITY_ORDER}
        counts = {m: 0 for m in MODALITY_ORDER}
        cls_hits = 0

        for start in range(0, len(order), batch_size):
            chunk = [self.prepare(samples[i]) for i in order[start:start + batch_size]]
            self._zero_all()
            encodings = {id(p): self.model.encode_input(p.enc_input) for p in chunk}

            for modality in self.modality_order:
                part = [p for p in chunk if MODALITY_ORDER[p.modality_index] is modality]
                if not part:
                    continue
                losses = [self._sample_loss(p, encodings[id(p)]) for p in part]
                total = losses[0]
                for piece in losses[1:]:
                    total = total + piece
                loss = total * (1.0 / len(losses))
                loss.backward()
                group = {Modality.TEXT: "text", Modality.SQL: "sql", Modality.DV: "dv"}[modality]
                self._step(group)
                sums[modality] += loss.item() * len(part)
                counts[modality] += len(part)

            logits = stack([self.model.classify_logits(encodings[id(p)]) for p in chunk])
            gold_idx = [p.modality_index for p in chunk]
            cls_loss = cross_entropy(logits, gold_idx)
            cls_loss.backward()
            cls_hits += int((np.argmax(logits.data, axis=1) == np.asarray(gold_idx)).sum())
            self._step("classifier")
            self._step("encoder")

        n = len(samples)
        return {
            "loss_text": sums[Modality.TEXT] / max(counts[Modality.TEXT], 1),
            "loss_sql": sums[Modality.SQL] / max(counts[Modality.SQL], 1),
            "loss_dv": sums[Modality.DV] / max(counts[Modality.DV], 1),
            "classifier_accuracy": cls_hits / max(n, 1),
            "samples": n,
        }
