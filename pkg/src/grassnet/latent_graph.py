"""GRU sensor encoder and attention-derived sensor adjacency."""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from grassnet import init
from grassnet import tensor as tn
from grassnet.ops import softmax_rows
from grassnet.tensor import DimensionError, Tensor, as_tensor


@dataclass
class GruParams:
    """Shared-weight GRU over scalar per-sensor inputs.

    ``w_*`` map the input (input_dim x hidden), ``u_*`` the previous state
    (hidden x hidden); ``b_*`` are biases for the update (z), reset (r)
    and candidate (h) gates.
    """

    w_z: Tensor
    u_z: Tensor
    b_z: Tensor
    w_r: Tensor
    u_r: Tensor
    b_r: Tensor
    w_h: Tensor
    u_h: Tensor
    b_h: Tensor

    @property
    def input_dim(self) -> int:
        return self.w_z.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.u_z.shape[0]

    @classmethod
    def init(cls, rng, input_dim: int = 1, hidden_dim: int = 64) -> "GruParams":
        kw = {}
        for gate in "zrh":
            kw[f"w_{gate}"] = init.glorot(rng, (input_dim, hidden_dim))
            kw[f"u_{gate}"] = init.glorot(rng, (hidden_dim, hidden_dim))
            kw[f"b_{gate}"] = init.zeros((hidden_dim,))
        return cls(**kw)

    @classmethod
    def zeros(cls, input_dim: int = 1, hidden_dim: int = 64) -> "GruParams":
        kw = {}
        for gate in "zrh":
            kw[f"w_{gate}"] = init.zeros((input_dim, hidden_dim))
            kw[f"u_{gate}"] = init.zeros((hidden_dim, hidden_dim))
            kw[f"b_{gate}"] = init.zeros((hidden_dim,))
        return cls(**kw)

    def tensors(self) -> dict[str, Tensor]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def gru_cell(x, h, p: GruParams) -> Tensor:
    z = tn.sigmoid(tn.matmul(x, p.w_z) + tn.matmul(h, p.u_z) + p.b_z)
    r = tn.sigmoid(tn.matmul(x, p.w_r) + tn.matmul(h, p.u_r) + p.b_r)
    cand = tn.tanh(tn.matmul(x, p.w_h) + tn.matmul(r * h, p.u_h) + p.b_h)
    return (1.0 - z) * h + z * cand


def gru_encode(series, params: GruParams) -> Tensor:
    """Run the GRU over each sensor's sequence and return final states.

    ``series`` has shape (..., N, T); every sensor is an independent
    stream of scalar inputs through the same weights.  Returns (..., N, H).
    """
    series = as_tensor(series)
    *lead, T = series.shape
    if T == 0:
        raise DimensionError("gru_encode got an empty sequence (T = 0)")
    rows = int(np.prod(lead)) if lead else 1
    flat = series.reshape(rows, T)
    h = Tensor(np.zeros((rows, params.hidden_dim)))
    for t in range(T):
        h = gru_cell(flat[:, t:t + 1], h, params)
    return h.reshape(*lead, params.hidden_dim)


@dataclass
class LatentGraphParams:
    w_query: Tensor
    w_key: Tensor

    def __post_init__(self):
        if self.w_query.shape != self.w_key.shape:
            raise DimensionError(
                f"query/key projections differ: {self.w_query.shape} vs {self.w_key.shape}"
            )

    @property
    def d_k(self) -> int:
        return self.w_key.shape[1]

    @classmethod
    def init(cls, rng, hidden_dim: int = 64, d_k: int | None = None) -> "LatentGraphParams":
        d_k = hidden_dim if d_k is None else d_k
        return cls(init.glorot(rng, (hidden_dim, d_k)), init.glorot(rng, (hidden_dim, d_k)))

    def tensors(self) -> dict[str, Tensor]:
        return {"w_query": self.w_query, "w_key": self.w_key}


def latent_adjacency(h, params: LatentGraphParams) -> Tensor:
    """Row-stochastic (..., N, N) adjacency from scaled query-key scores."""
    h = as_tensor(h)
    query = tn.matmul(h, params.w_query)
    key = tn.matmul(h, params.w_key)
    scores = tn.matmul(query, tn.transpose(key)) * (1.0 / np.sqrt(params.d_k))
    return softmax_rows(scores)
