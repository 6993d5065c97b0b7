"""Label co-occurrence graph and multi-head graph attention over labels."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from grassnet import init
from grassnet import tensor as tn
from grassnet.ops import linear, softmax_rows
from grassnet.tensor import DimensionError, Tensor, as_tensor

MASK_LOGIT = -1e9


@dataclass
class CoOccurrence:
    m: np.ndarray   # C x C pair counts
    n: np.ndarray   # C positive counts


@dataclass
class LabelCorrelation:
    p: np.ndarray
    a_label: np.ndarray
    tau: float

    @property
    def n_labels(self) -> int:
        return self.a_label.shape[0]

    def neighborhood_mask(self) -> np.ndarray:
        """Binary adjacency with a self-loop fallback for isolated labels."""
        mask = self.a_label.astype(np.float64).copy()
        empty = mask.sum(axis=1) == 0
        mask[empty, empty] = 1.0
        return mask

    def to_json(self) -> str:
        c = self.n_labels
        return json.dumps({
            "C": c,
            "tau": self.tau,
            "a_label": [int(v) for v in self.a_label.reshape(-1)],
        })

    @classmethod
    def from_json(cls, text: str) -> "LabelCorrelation":
        doc = json.loads(text)
        c = int(doc["C"])
        entries = np.asarray(doc["a_label"], dtype=np.int64)
        if entries.size != c * c or not np.isin(entries, (0, 1)).all():
            raise ValueError(f"a_label must hold {c * c} binary entries")
        a = entries.reshape(c, c)
        # conditional probabilities are not part of the exchange format
        return cls(p=a.astype(np.float64), a_label=a, tau=float(doc["tau"]))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "LabelCorrelation":
        return cls.from_json(Path(path).read_text())

    @classmethod
    def identity(cls, n_labels: int, tau: float = 1.0) -> "LabelCorrelation":
        eye = np.eye(n_labels, dtype=np.int64)
        return cls(eye.astype(np.float64), eye, tau)


def build_cooccurrence(labels, mask=None) -> CoOccurrence:
    """Count observed-positive labels and observed-positive label pairs.

    ``labels`` is (samples, C); entries where ``mask`` is 0 are ignored.
    """
    y = np.asarray(labels, dtype=np.float64)
    if y.ndim != 2:
        raise DimensionError(f"labels must be (samples, C), got {y.shape}")
    observed = np.ones_like(y, dtype=bool) if mask is None else np.asarray(mask) > 0
    pos = ((y == 1) & observed).astype(np.int64)
    m = pos.T @ pos
    return CoOccurrence(m=m, n=np.diag(m).copy())


def threshold_correlation(co: CoOccurrence, tau: float = 0.4) -> LabelCorrelation:
    """p_ij = m_ij / n_i (0 when n_i = 0); edge iff p_ij >= tau."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    n = co.n.astype(np.float64)
    safe = np.where(n > 0, n, 1.0)
    p = np.where(n[:, None] > 0, co.m / safe[:, None], 0.0)
    a = (p >= tau).astype(np.int64)
    return LabelCorrelation(p=p, a_label=a, tau=float(tau))


@dataclass
class LabelProjection:
    """Per-label linear maps from the fused feature to label node features."""

    weight: Tensor   # d x (C * d_label)
    bias: Tensor     # C * d_label
    n_labels: int

    @property
    def label_dim(self) -> int:
        return self.weight.shape[1] // self.n_labels

    @classmethod
    def init(cls, rng, in_dim: int, n_labels: int, label_dim: int = 16) -> "LabelProjection":
        # glorot limit per label block, not over the concatenated width
        limit = np.sqrt(6.0 / (in_dim + label_dim))
        w = Tensor(rng.uniform(-limit, limit, (in_dim, n_labels * label_dim)), requires_grad=True)
        return cls(w, init.zeros((n_labels * label_dim,)), n_labels)

    def tensors(self) -> dict[str, Tensor]:
        return {"weight": self.weight, "bias": self.bias}


def label_features(z_att, proj: LabelProjection) -> Tensor:
    z_att = as_tensor(z_att)
    out = linear(z_att, proj.weight, proj.bias)
    return out.reshape(*z_att.shape[:-1], proj.n_labels, proj.label_dim)


@dataclass
class GatParams:
    w: Tensor        # heads x d_label x d_label
    a_src: Tensor    # heads x d_label
    a_dst: Tensor    # heads x d_label
    out_w: Tensor    # d_label x 1
    out_b: Tensor    # C
    slope: float = 0.2

    @property
    def heads(self) -> int:
        return self.w.shape[0]

    @classmethod
    def init(cls, rng, n_labels: int, label_dim: int = 16, heads: int = 2,
             slope: float = 0.2) -> "GatParams":
        return cls(
            init.glorot(rng, (heads, label_dim, label_dim)),
            init.glorot(rng, (heads, label_dim)),
            init.glorot(rng, (heads, label_dim)),
            init.glorot(rng, (label_dim, 1)),
            init.zeros((n_labels,)),
            slope,
        )

    def tensors(self) -> dict[str, Tensor]:
        return {"w": self.w, "a_src": self.a_src, "a_dst": self.a_dst,
                "out_w": self.out_w, "out_b": self.out_b}


def gat_forward(label_feats, corr: LabelCorrelation, params: GatParams,
                return_attention: bool = False):
    """Masked multi-head attention over label nodes, heads averaged.

    ``label_feats`` is (..., C, d_label); returns per-label logits (..., C)
    and optionally the attention tensor (..., heads, C, C).
    """
    x = as_tensor(label_feats)
    *lead, c, dl = x.shape
    if c != corr.n_labels:
        raise DimensionError(f"{c} label nodes vs correlation over {corr.n_labels}")
    x = x.reshape(*lead, 1, c, dl)
    wx = tn.matmul(x, params.w)                                   # (..., K, C, dl)
    k = params.heads
    src = tn.matmul(wx, params.a_src.reshape(k, dl, 1))           # (..., K, C, 1)
    dst = tn.matmul(wx, params.a_dst.reshape(k, dl, 1))
    e = tn.leaky_relu(src + tn.transpose(dst), params.slope)      # (..., K, C, C)
    bias = np.where(corr.neighborhood_mask() > 0, 0.0, MASK_LOGIT)
    alpha = softmax_rows(e + bias)
    out = tn.matmul(alpha, wx).mean(axis=-3)                      # (..., C, dl)
    logits = tn.matmul(out, params.out_w).reshape(*lead, c) + params.out_b
    if return_attention:
        return logits, alpha
    return logits
