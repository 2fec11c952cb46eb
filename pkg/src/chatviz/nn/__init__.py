"""From-scratch differentiable building blocks (float64, single-threaded)."""
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, grad_check
from .layers import (
    BiLSTM,
    DecoderBlock,
    Embedding,
    LSTMCell,
    LayerNorm,
    Linear,
    MultiHeadAttention,
    ParamSet,
    attention_pool,
    load_word_vectors,
    positional_encoding,
)
from .optim import Adam
from .tensor import (
    Tensor,
    as_tensor,
    concat,
    cross_entropy,
    embedding_rows,
    exp,
    log,
    lstm_sequence,
    masked_nll,
    masked_softmax,
    matmul,
    no_grad,
    power,
    relu,
    reshape,
    sigmoid,
    softmax,
    sqrt,
    stack,
    take,
    tanh,
    tmean,
    transpose,
    tsum,
)

__all__ = [
    "Adam", "BiLSTM", "DecoderBlock", "Embedding", "GradCheckReport",
    "LSTMCell", "LayerNorm", "Linear", "MultiHeadAttention", "ParamSet",
    "Tensor", "as_tensor", "attention_pool", "concat", "cross_entropy",
    "embedding_rows", "exp", "grad_check", "load_checkpoint",
    "load_word_vectors", "log", "lstm_sequence", "masked_nll",
    "masked_softmax", "matmul", "no_grad", "positional_encoding", "power",
    "relu", "reshape", "save_checkpoint", "sigmoid", "softmax", "sqrt",
    "stack", "take", "tanh", "tmean", "transpose", "tsum",
]
