"""Training configuration and its flat JSON form."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from grassnet.losses import LossConfig


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    rho: float = 0.9
    eps: float = 1e-8
    batch_size: int = 256
    eval_batch_size: int = 1024
    patience: int = 25
    max_epochs: int = 200
    seed: int = 0
    t_max: int = 2
    embedding_dim: int = 16
    feature_dim: int = 64
    hidden_dim: int = 64
    d_k: int | None = None
    label_dim: int = 16
    heads: int = 2
    spectral_channels: int = 8
    kernel_width: int = 3
    channel_reduce: str = "sum"
    use_cheb: bool = False
    dropout: float = 0.2
    leaky_slope: float = 0.2
    tau: float = 0.4
    use_label_graph: bool = True
    semi_supervised: bool = True
    loss: LossConfig = field(default_factory=LossConfig)

    def __post_init__(self):
        if isinstance(self.loss, dict):
            self.loss = LossConfig(**self.loss)
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValueError("learning_rate must be positive and weight_decay non-negative")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be positive")
        if self.channel_reduce not in ("sum", "concat"):
            raise ValueError(f"channel_reduce must be 'sum' or 'concat', got {self.channel_reduce!r}")

    @property
    def key_dim(self) -> int:
        return self.hidden_dim if self.d_k is None else self.d_k

    def to_flat(self) -> dict:
        doc = asdict(self)
        doc.update(doc.pop("loss"))
        return doc

    @classmethod
    def from_flat(cls, doc: dict) -> "TrainConfig":
        own = {f.name for f in fields(cls)} - {"loss"}
        loss_keys = {f.name for f in fields(LossConfig)}
        unknown = set(doc) - own - loss_keys
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        loss = LossConfig(**{k: v for k, v in doc.items() if k in loss_keys})
        return cls(loss=loss, **{k: v for k, v in doc.items() if k in own})

    @classmethod
    def load(cls, path) -> "TrainConfig":
        return cls.from_flat(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_flat(), indent=2))
