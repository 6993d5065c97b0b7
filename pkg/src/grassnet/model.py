"""The assembled classifier: latent graph -> spectral conv -> FC head ->
text attention -> label graph attention -> per-label logits."""
from __future__ import annotations

import numpy as np

from grassnet import tensor as tn
from grassnet.config import TrainConfig
from grassnet.data import SampleBatch
from grassnet.label_graph import (
    GatParams,
    LabelCorrelation,
    LabelProjection,
    gat_forward,
    label_features,
)
from grassnet.latent_graph import GruParams, LatentGraphParams, gru_encode, latent_adjacency
from grassnet.spectral import (
    ChebGcnParams,
    FcHeadParams,
    GraphSpectrum,
    SpectralConvParams,
    cheb_gcn_cell,
    fc_head,
    normalized_laplacian,
    spectral_conv,
)
from grassnet.tensor import Tensor
from grassnet.text_fusion import EmbeddingTable, attention_fuse, embed_text


class Normalizer:
    """Per-sensor standardization fitted on real (unpadded) steps."""

    def __init__(self, mean: np.ndarray, std: np.ndarray):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)

    @classmethod
    def fit(cls, batch: SampleBatch) -> "Normalizer":
        vals = np.where(batch.valid[:, None, :] > 0, batch.series, np.nan)
        mean = np.nanmean(vals, axis=(0, 2))
        std = np.nanstd(vals, axis=(0, 2))
        mean = np.nan_to_num(mean, nan=0.0)
        std = np.where(np.isfinite(std) & (std > 1e-12), std, 1.0)
        return cls(mean, std)

    @classmethod
    def identity(cls, n_sensors: int) -> "Normalizer":
        return cls(np.zeros(n_sensors), np.ones(n_sensors))

    def __call__(self, batch: SampleBatch) -> np.ndarray:
        z = (batch.series - self.mean[None, :, None]) / self.std[None, :, None]
        z = np.where(batch.valid[:, None, :] > 0, z, 0.0)
        return np.nan_to_num(z, nan=0.0)


class GraSSNet:
    def __init__(self, n_sensors: int, t_steps: int, vocab_size: int, n_fields: int,
                 n_labels: int, corr: LabelCorrelation, cfg: TrainConfig,
                 normalizer: Normalizer | None = None, rng: np.random.Generator | None = None):
        rng = np.random.default_rng(cfg.seed) if rng is None else rng
        self.cfg = cfg
        self.n_sensors, self.t_steps, self.n_labels = n_sensors, t_steps, n_labels
        self.corr = corr
        self.normalizer = normalizer or Normalizer.identity(n_sensors)

        self.gru = GruParams.init(rng, 1, cfg.hidden_dim)
        self.latent = LatentGraphParams.init(rng, cfg.hidden_dim, cfg.key_dim)
        self.spectral = SpectralConvParams.init(rng, cfg.spectral_channels, cfg.kernel_width)
        d_spec = cfg.spectral_channels * t_steps
        self.cheb = ChebGcnParams.init(rng, d_spec, d_spec) if cfg.use_cheb else None
        self.head = FcHeadParams.init(rng, d_spec, cfg.feature_dim, cfg.dropout, cfg.leaky_slope)
        self.embedding = EmbeddingTable.init(rng, vocab_size, n_fields, cfg.embedding_dim, cfg.feature_dim)
        self.projection = LabelProjection.init(rng, cfg.feature_dim, n_labels, cfg.label_dim)
        self.gat = GatParams.init(rng, n_labels, cfg.label_dim, cfg.heads, cfg.leaky_slope)

    def parameters(self) -> dict[str, Tensor]:
        groups = {
            "gru": self.gru, "latent": self.latent, "spectral": self.spectral,
            "head": self.head, "embedding": self.embedding,
            "projection": self.projection, "gat": self.gat,
        }
        if self.cheb is not None:
            groups["cheb"] = self.cheb
        return {f"{g}.{k}": t for g, obj in groups.items() for k, t in obj.tensors().items()}

    def load_parameters(self, arrays: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = set(params) - set(arrays)
        if missing:
            raise KeyError(f"missing parameters: {sorted(missing)}")
        for name, t in params.items():
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != t.shape:
                raise ValueError(f"{name}: shape {arr.shape} vs expected {t.shape}")
            t.data = arr.copy()

    def zero_grad(self) -> None:
        for t in self.parameters().values():
            t.grad = None

    # -- forward -----------------------------------------------------
    def adjacency(self, series) -> Tensor:
        return latent_adjacency(gru_encode(series, self.gru), self.latent)

    def spectrum(self, series) -> GraphSpectrum:
        return normalized_laplacian(self.adjacency(series))

    def forward(self, series, tokens, training: bool = False,
                rng: np.random.Generator | None = None,
                spectrum: GraphSpectrum | None = None) -> Tensor:
        """Per-label logits (B, C) for normalized series (B, N, T) and tokens (B, F).

        A precomputed ``spectrum`` freezes the graph basis, which matches
        the stop-gradient the eigendecomposition already imposes.
        """
        cfg = self.cfg
        series = Tensor(series)
        adj = self.adjacency(series)
        if spectrum is None:
            spectrum = normalized_laplacian(adj)
        h = spectral_conv(series, spectrum, self.spectral, cfg.channel_reduce)
        if self.cheb is not None:
            h = cheb_gcn_cell(h, adj, self.cheb)
        z_snsr = fc_head(h, self.head, training, rng)                    # (B, N, d)
        z_embd = embed_text(tokens, self.embedding)                       # (B, d)
        z_att = attention_fuse(z_embd, z_snsr)
        feats = label_features(z_att, self.projection)                    # (B, C, d_label)
        return gat_forward(feats, self.corr, self.gat)

    def logits(self, batch: SampleBatch, training: bool = False, rng=None) -> Tensor:
        return self.forward(self.normalizer(batch), batch.tokens, training, rng)

    def predict_proba(self, batch: SampleBatch, batch_size: int | None = None) -> np.ndarray:
        size = batch_size or self.cfg.eval_batch_size
        out = [tn.sigmoid(self.logits(b)).data for b in batch.batches(size)]
        return np.concatenate(out, axis=0) if out else np.zeros((0, self.n_labels))
