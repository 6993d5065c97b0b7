"""Categorical-token embedding and text-query attention over sensor tokens."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from grassnet import init
from grassnet import tensor as tn
from grassnet.ops import linear, softmax_rows
from grassnet.tensor import DimensionError, Tensor, as_tensor


class VocabularyError(ValueError):
    pass


@dataclass
class EmbeddingTable:
    table: Tensor          # vocab_size x dim
    w_embd: Tensor         # (fields * dim) x d
    b_embd: Tensor         # d

    @property
    def vocab_size(self) -> int:
        return self.table.shape[0]

    @property
    def dim(self) -> int:
        return self.table.shape[1]

    @property
    def n_fields(self) -> int:
        return self.w_embd.shape[0] // self.dim

    @property
    def out_dim(self) -> int:
        return self.w_embd.shape[1]

    @classmethod
    def init(cls, rng, vocab_size: int, n_fields: int, dim: int = 16,
             out_dim: int = 64) -> "EmbeddingTable":
        return cls(
            init.small_normal(rng, (vocab_size, dim)),
            init.glorot(rng, (n_fields * dim, out_dim)),
            init.zeros((out_dim,)),
        )

    def tensors(self) -> dict[str, Tensor]:
        return {"table": self.table, "w_embd": self.w_embd, "b_embd": self.b_embd}


def embed_text(tokens, table: EmbeddingTable) -> Tensor:
    """Look up, concatenate in field order, then project to width d.

    ``tokens`` is an integer array of shape (..., F).
    """
    tokens = np.asarray(tokens)
    if tokens.shape[-1] != table.n_fields:
        raise DimensionError(
            f"expected {table.n_fields} categorical fields, got {tokens.shape[-1]}"
        )
    bad = (tokens < 0) | (tokens >= table.vocab_size)
    if bad.any():
        where = np.argwhere(bad)[0]
        field = int(where[-1])
        raise VocabularyError(
            f"token id {int(tokens[tuple(where)])} in field {field} is outside "
            f"vocabulary of size {table.vocab_size}"
        )
    rows = table.table[tokens.astype(np.int64)]                 # (..., F, dim)
    flat = rows.reshape(*tokens.shape[:-1], tokens.shape[-1] * table.dim)
    return linear(flat, table.w_embd, table.b_embd)


def attention_fuse(z_embd, z_snsr, return_weights: bool = False):
    """Weighted sum of sensor tokens (..., M, d) scored against a text query (..., d)."""
    z_embd, z_snsr = as_tensor(z_embd), as_tensor(z_snsr)
    d = z_embd.shape[-1]
    if z_snsr.shape[-1] != d:
        raise DimensionError(f"query width {d} does not match token width {z_snsr.shape[-1]}")
    if z_snsr.ndim < 2 or z_snsr.shape[-2] < 1:
        raise DimensionError("attention_fuse needs at least one sensor token")
    query = z_embd.reshape(*z_embd.shape[:-1], 1, d)
    scores = tn.matmul(query, tn.transpose(z_snsr)) * (1.0 / np.sqrt(d))   # (..., 1, M)
    weights = softmax_rows(scores)
    z_att = tn.matmul(weights, z_snsr).reshape(*z_embd.shape)
    if return_weights:
        return z_att, weights.reshape(*weights.shape[:-2], weights.shape[-1])
    return z_att
