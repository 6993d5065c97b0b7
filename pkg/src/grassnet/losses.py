"""Mask-aware imbalanced supervised loss and the pseudo-label loss."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from grassnet import tensor as tn
from grassnet.tensor import Tensor, as_tensor

PROB_CLAMP = 1e-7

_MODE_DEFAULTS = {
    "bce": dict(gamma_pos=0.0, gamma_neg=0.0, margin=0.0),
    "focal": dict(gamma_pos=2.0, gamma_neg=2.0, margin=0.0),
    "asymmetric": dict(gamma_pos=0.0, gamma_neg=2.0, margin=0.05),
}


@dataclass
class LossConfig:
    mode: str = "focal"
    gamma_pos: float | None = None
    gamma_neg: float | None = None
    margin: float | None = None
    pseudo_threshold: float = 0.95
    symmetric_pseudo: bool = False

    def __post_init__(self):
        if self.mode not in _MODE_DEFAULTS:
            raise ValueError(f"unknown loss mode {self.mode!r}")
        for key, value in _MODE_DEFAULTS[self.mode].items():
            if getattr(self, key) is None:
                setattr(self, key, value)
        if self.gamma_pos < 0 or self.gamma_neg < 0:
            raise ValueError("focusing parameters must be non-negative")
        if not 0.0 <= self.margin < 1.0:
            raise ValueError(f"margin must be in [0, 1), got {self.margin}")
        if not 0.5 < self.pseudo_threshold <= 1.0:
            raise ValueError(f"pseudo_threshold must be in (0.5, 1], got {self.pseudo_threshold}")
        is_plain = self.gamma_pos == 0 and self.gamma_neg == 0 and self.margin == 0
        if (self.mode == "bce") != is_plain:
            raise ValueError("mode 'bce' requires gamma_pos = gamma_neg = margin = 0 and vice versa")
        if self.mode == "asymmetric" and self.margin <= 0:
            raise ValueError("asymmetric mode needs a positive margin")

    def to_dict(self) -> dict:
        return asdict(self)


def _focus(base: Tensor, gamma: float) -> Tensor | None:
    return None if gamma == 0 else tn.power(base, gamma)


def supervised_loss(p, y, mask, cfg: LossConfig) -> Tensor:
    """Mean over observed entries of the focal / asymmetric binary loss.

    ``p``, ``y``, ``mask`` are (B, C); unobserved entries contribute
    nothing to the value or the gradient.
    """
    p = tn.clip(as_tensor(p), PROB_CLAMP, 1.0 - PROB_CLAMP)
    mask = np.asarray(mask, dtype=np.float64)
    y = np.where(mask > 0, np.asarray(y, dtype=np.float64), 0.0)

    pos = -tn.log(p)
    w = _focus(1.0 - p, cfg.gamma_pos)
    if w is not None:
        pos = w * pos

    shifted = tn.relu(p - cfg.margin) if cfg.margin > 0 else p
    neg = -tn.log(1.0 - shifted)
    w = _focus(shifted, cfg.gamma_neg)
    if w is not None:
        neg = w * neg

    per_entry = pos * (y * mask) + neg * ((1.0 - y) * mask)
    return per_entry.sum() * (1.0 / max(mask.sum(), 1.0))


def unlabeled_loss(p_u, threshold: float = 0.95, candidates=None,
                   symmetric: bool = False) -> Tensor:
    """Cross-entropy against confident hard pseudo-labels.

    An entry is retained when p > threshold (pseudo-label 1); with
    ``symmetric`` also when 1 - p > threshold (pseudo-label 0).  Pseudo-labels
    are constants.  ``candidates`` (same shape, 0/1) restricts which entries
    may be pseudo-labelled.  Mean over retained entries; 0 if none.
    """
    p_u = tn.clip(as_tensor(p_u), PROB_CLAMP, 1.0 - PROB_CLAMP)
    pool = np.ones(p_u.shape) if candidates is None else np.asarray(candidates, dtype=np.float64)
    keep_pos = (p_u.data > threshold) * pool
    keep_neg = ((1.0 - p_u.data) > threshold) * pool if symmetric else np.zeros(p_u.shape)
    retained = keep_pos.sum() + keep_neg.sum()
    if retained == 0:
        return tn.mul(p_u, 0.0).sum()
    terms = -tn.log(p_u) * keep_pos
    if symmetric:
        terms = terms + (-tn.log(1.0 - p_u)) * keep_neg
    return terms.sum() * (1.0 / retained)


def total_loss(l_supervised, l_unlabeled) -> Tensor:
    return tn.add(l_supervised, l_unlabeled)
