"""Parameterized building blocks: embeddings, recurrent encoders, attention."""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .tensor import (
    Tensor,
    concat,
    embedding_rows,
    lstm_sequence,
    masked_softmax,
    matmul,
    relu,
    sigmoid,
    softmax,
    take,
    tanh,
    tmean,
)


class ParamSet:
    """Registry of named trainable tensors (checkpointing + optimizer groups)."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.params: dict[str, Tensor] = {}

    def add(self, name: str, shape: tuple[int, ...], fan_in: Optional[int] = None,
            scale: Optional[float] = None, zero: bool = False) -> Tensor:
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        if zero:
            data = np.zeros(shape)
        else:
            if scale is None:
                scale = 1.0 / math.sqrt(fan_in if fan_in else shape[0])
            data = self.rng.uniform(-scale, scale, size=shape)
        tensor = Tensor(data, requires_grad=True)
        self.params[name] = tensor
        return tensor

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, tensor in self.params.items():
            if name not in arrays:
                raise KeyError(f"checkpoint missing parameter {name!r}")
            if arrays[name].shape != tensor.data.shape:
                raise ValueError(f"shape mismatch for {name!r}")
            tensor.data = arrays[name].astype(np.float64).copy()

    def subset(self, prefix: str) -> dict[str, Tensor]:
        return {n: t for n, t in self.params.items() if n.startswith(prefix)}


class Embedding:
    """Word/id embedding table; row 0 is conventionally the zero <pad> row."""

    def __init__(self, ps: ParamSet, name: str, size: int, dim: int,
                 scale: float = 0.1, zero_row: Optional[int] = None):
        self.table = ps.add(name, (size, dim), scale=scale)
        if zero_row is not None:
            self.table.data[zero_row] = 0.0

    def __call__(self, ids: Sequence[int]) -> Tensor:
        return embedding_rows(self.table, ids)


class Linear:
    def __init__(self, ps: ParamSet, name: str, d_in: int, d_out: int, bias: bool = True):
        self.w = ps.add(f"{name}.w", (d_in, d_out), fan_in=d_in)
        self.b = ps.add(f"{name}.b", (d_out,), zero=True) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        out = matmul(x, self.w)
        if self.b is not None:
            out = out + self.b
        return out


class LSTMCell:
    """Single recurrent step; input and both state vectors are 1-D.

    Gate layout is (input, forget, cell, output); the forget bias starts at
    1.0 so early training carries state across long sequences."""

    def __init__(self, ps: ParamSet, name: str, d_in: int, hidden: int):
        self.hidden = hidden
        self.w_x = ps.add(f"{name}.w_x", (d_in, 4 * hidden), fan_in=d_in)
        self.w_h = ps.add(f"{name}.w_h", (hidden, 4 * hidden), fan_in=hidden)
        self.b = ps.add(f"{name}.b", (4 * hidden,), zero=True)
        self.b.data[hidden:2 * hidden] = 1.0

    def initial_state(self) -> tuple[Tensor, Tensor]:
        return Tensor(np.zeros(self.hidden)), Tensor(np.zeros(self.hidden))

    def __call__(self, x: Tensor, state: tuple[Tensor, Tensor]) -> tuple[Tensor, Tensor]:
        h_prev, c_prev = state
        z = matmul(x, self.w_x) + matmul(h_prev, self.w_h) + self.b
        n = self.hidden
        i = sigmoid(take(z, slice(0, n)))
        f = sigmoid(take(z, slice(n, 2 * n)))
        g = tanh(take(z, slice(2 * n, 3 * n)))
        o = sigmoid(take(z, slice(3 * n, 4 * n)))
        c = f * c_prev + i * g
        h = o * tanh(c)
        return h, c


class BiLSTM:
    """Bidirectional recurrent encoder; output width = 2 * direction width."""

    def __init__(self, ps: ParamSet, name: str, d_in: int, d_out: int):
        if d_out % 2 != 0:
            raise ValueError("bidirectional output width must be even")
        half = d_out // 2
        self.fwd = LSTMCell(ps, f"{name}.fwd", d_in, half)
        self.bwd = LSTMCell(ps, f"{name}.bwd", d_in, half)

    def __call__(self, x: Tensor) -> Tensor:
        forward = lstm_sequence(x, self.fwd.w_x, self.fwd.w_h, self.fwd.b)
        backward = lstm_sequence(x, self.bwd.w_x, self.bwd.w_h, self.bwd.b, reverse=True)
        return concat([forward, backward], axis=1)


class MultiHeadAttention:
    """Scaled dot-product attention with per-head projections."""

    def __init__(self, ps: ParamSet, name: str, d_m: int, heads: int):
        if d_m % heads != 0:
            raise ValueError(f"hidden size {d_m} not divisible by head count {heads}")
        self.heads = heads
        self.d_k = d_m // heads
        self.w_q = ps.add(f"{name}.w_q", (d_m, d_m), fan_in=d_m)
        self.w_k = ps.add(f"{name}.w_k", (d_m, d_m), fan_in=d_m)
        self.w_v = ps.add(f"{name}.w_v", (d_m, d_m), fan_in=d_m)
        self.w_o = ps.add(f"{name}.w_o", (d_m, d_m), fan_in=d_m)

    def __call__(self, query: Tensor, key: Tensor, value: Tensor,
                 causal: bool = False) -> Tensor:
        q = matmul(query, self.w_q)
        k = matmul(key, self.w_k)
        v = matmul(value, self.w_v)
        t_q, t_k = q.shape[0], k.shape[0]
        mask = None
        if causal:
            mask = np.tril(np.ones((t_q, t_k), dtype=bool))
        outputs = []
        for head in range(self.heads):
            cols = slice(head * self.d_k, (head + 1) * self.d_k)
            qh = take(q, (slice(None), cols))
            kh = take(k, (slice(None), cols))
            vh = take(v, (slice(None), cols))
            scores = matmul(qh, transpose2(kh)) * (1.0 / math.sqrt(self.d_k))
            if mask is not None:
                weights = masked_softmax(scores, mask, axis=-1)
            else:
                weights = softmax(scores, axis=-1)
            outputs.append(matmul(weights, vh))
        return matmul(concat(outputs, axis=1), self.w_o)


def transpose2(x: Tensor) -> Tensor:
    from .tensor import transpose

    return transpose(x)


class LayerNorm:
    def __init__(self, ps: ParamSet, name: str, dim: int, eps: float = 1e-5):
        self.gamma = ps.add(f"{name}.gamma", (dim,), scale=0.0)
        self.gamma.data[:] = 1.0
        self.beta = ps.add(f"{name}.beta", (dim,), zero=True)
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        from .tensor import power, sqrt

        mean = tmean(x, axis=-1, keepdims=True)
        centered = x - mean
        var = tmean(power(centered, 2.0), axis=-1, keepdims=True)
        normed = centered / sqrt(var + self.eps)
        return normed * self.gamma + self.beta


class DecoderBlock:
    """Causal self-attention, cross-attention over the encoder states, and a
    position-wise feed-forward, each with residual + layer norm."""

    def __init__(self, ps: ParamSet, name: str, d_m: int, heads: int, d_ff: int):
        self.self_attn = MultiHeadAttention(ps, f"{name}.self", d_m, heads)
        self.cross_attn = MultiHeadAttention(ps, f"{name}.cross", d_m, heads)
        self.ln1 = LayerNorm(ps, f"{name}.ln1", d_m)
        self.ln2 = LayerNorm(ps, f"{name}.ln2", d_m)
        self.ln3 = LayerNorm(ps, f"{name}.ln3", d_m)
        self.ff1 = Linear(ps, f"{name}.ff1", d_m, d_ff)
        self.ff2 = Linear(ps, f"{name}.ff2", d_ff, d_m)

    def __call__(self, z: Tensor, memory: Tensor) -> Tensor:
        z = self.ln1(z + self.self_attn(z, z, z, causal=True))
        z = self.ln2(z + self.cross_attn(z, memory, memory))
        return self.ln3(z + self.ff2(relu(self.ff1(z))))


def positional_encoding(length: int, dim: int) -> np.ndarray:
    """Sinusoidal position features (constant, not trained)."""
    positions = np.arange(length)[:, None]
    div = np.exp(np.arange(0, dim, 2) * (-math.log(10000.0) / dim))
    pe = np.zeros((length, dim))
    pe[:, 0::2] = np.sin(positions * div)
    pe[:, 1::2] = np.cos(positions * div[: dim // 2])
    return pe


def attention_pool(states: Tensor) -> Tensor:
    """Arithmetic mean over sequence positions."""
    return tmean(states, axis=0)


def load_word_vectors(path: str, words: Sequence[str], dim: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Read the whitespace text format (word + ``dim`` reals per line) and
    assemble a table over ``words``; missing words get seeded uniform rows."""
    table = rng.uniform(-0.1, 0.1, size=(len(words), dim))
    index = {w: i for i, w in enumerate(words)}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                continue
            word = parts[0]
            if word in index:
                table[index[word]] = np.asarray([float(x) for x in parts[1:]])
    return table
