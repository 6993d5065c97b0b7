"""Mini-batch training with early stopping, plus checkpoint-backed inference."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from grassnet import tensor as tn
from grassnet.checkpoint import Checkpoint
from grassnet.config import TrainConfig
from grassnet.data import DatasetSchema, SampleBatch, SchemaMismatchError
from grassnet.label_graph import LabelCorrelation, build_cooccurrence, threshold_correlation
from grassnet.losses import supervised_loss, total_loss, unlabeled_loss
from grassnet.metrics import EvalReport, evaluate
from grassnet.model import GraSSNet, Normalizer
from grassnet.optim import RMSProp

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    supervised: float
    unlabeled: float
    valid_o_auc: float | None


@dataclass
class History:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    @property
    def losses(self) -> list[float]:
        return [e.train_loss for e in self.epochs]


def label_correlation(train_set: SampleBatch, cfg: TrainConfig) -> LabelCorrelation:
    if not cfg.use_label_graph:
        return LabelCorrelation.identity(train_set.y.shape[1], cfg.tau)
    return threshold_correlation(build_cooccurrence(train_set.y, train_set.mask), cfg.tau)


def batch_loss(model: GraSSNet, batch: SampleBatch, cfg: TrainConfig, training: bool = True,
               rng: np.random.Generator | None = None):
    p = tn.sigmoid(model.logits(batch, training, rng))
    l_sup = supervised_loss(p, batch.y, batch.mask, cfg.loss)
    if cfg.semi_supervised:
        l_u = unlabeled_loss(p, cfg.loss.pseudo_threshold, candidates=1.0 - batch.mask,
                             symmetric=cfg.loss.symmetric_pseudo)
    else:
        l_u = tn.Tensor(0.0)
    return total_loss(l_sup, l_u), l_sup, l_u


def _score(report: EvalReport) -> float:
    return -math.inf if report.overall_auc is None else report.overall_auc


def train(train_set: SampleBatch, valid_set: SampleBatch, cfg: TrainConfig,
          schema: DatasetSchema | None = None, max_epochs: int | None = None
          ) -> tuple[Checkpoint, History]:
    """Train until ``patience`` epochs pass without a better validation O-AUC.

    Returns the checkpoint of the best epoch and the per-epoch history.
    """
    if len(train_set) == 0:
        raise ValueError("empty training set")
    if valid_set.mask.sum() == 0:
        raise ValueError("validation set has no observed labels")
    rng = np.random.default_rng(cfg.seed)
    corr = label_correlation(train_set, cfg)
    vocab_size = schema.vocab_size if schema else int(max(train_set.tokens.max(), valid_set.tokens.max())) + 1
    model = GraSSNet(
        train_set.series.shape[1], train_set.series.shape[2], vocab_size,
        train_set.tokens.shape[1], train_set.y.shape[1], corr, cfg,
        Normalizer.fit(train_set), rng,
    )
    params = model.parameters()
    opt = RMSProp(params, cfg.learning_rate, cfg.rho, cfg.eps, cfg.weight_decay)

    history = History()
    best = -math.inf
    best_state = None
    since_best = 0
    limit = cfg.max_epochs if max_epochs is None else max_epochs
    for epoch in range(1, limit + 1):
        totals = np.zeros(3)
        n_batches = 0
        for batch in train_set.batches(cfg.batch_size, rng):
            loss, l_sup, l_u = batch_loss(model, batch, cfg, True, rng)
            if not np.isfinite(loss.data).all():
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}: supervised={l_sup.item()!r}, unlabeled={l_u.item()!r}"
                )
            opt.zero_grad()
            loss.backward()
            opt.step()
            totals += (loss.item(), l_sup.item(), l_u.item())
            n_batches += 1
        totals /= max(n_batches, 1)
        report = evaluate(model.predict_proba(valid_set), valid_set.y, valid_set.mask)
        score = _score(report)
        history.epochs.append(EpochRecord(epoch, *totals, report.overall_auc))
        log.info("epoch %d loss %.5f valid O-AUC %s", epoch, totals[0], report.overall_auc)
        if score > best:
            best, since_best = score, 0
            history.best_epoch = epoch
            best_state = (
                {k: t.data.copy() for k, t in params.items()},
                {k: v.copy() for k, v in opt.state.items()},
            )
        else:
            since_best += 1
            if since_best >= cfg.patience:
                history.stopped_early = True
                break

    weights, optim_state = best_state
    extras = {
        "norm.mean": model.normalizer.mean,
        "norm.std": model.normalizer.std,
        "label_graph.a_label": corr.a_label.astype(np.float64),
        "label_graph.p": corr.p,
    }
    meta = {
        "config": cfg.to_flat(),
        "schema": schema.to_dict() if schema else None,
        "tau": corr.tau,
        "dims": {
            "n_sensors": model.n_sensors, "t_steps": model.t_steps, "vocab_size": vocab_size,
            "n_fields": int(train_set.tokens.shape[1]), "n_labels": model.n_labels,
        },
    }
    ckpt = Checkpoint(
        params=weights, optimizer=optim_state, extras=extras, epoch=history.best_epoch,
        best_metric=None if best == -math.inf else best,
        schema_hash=schema.structural_hash() if schema else "", meta=meta,
    )
    return ckpt, history


def model_from_checkpoint(ckpt: Checkpoint) -> GraSSNet:
    cfg = TrainConfig.from_flat(ckpt.meta["config"])
    dims = ckpt.meta["dims"]
    a = ckpt.extras["label_graph.a_label"].astype(np.int64)
    corr = LabelCorrelation(ckpt.extras["label_graph.p"], a, ckpt.meta["tau"])
    norm = Normalizer(ckpt.extras["norm.mean"], ckpt.extras["norm.std"])
    model = GraSSNet(dims["n_sensors"], dims["t_steps"], dims["vocab_size"], dims["n_fields"],
                     dims["n_labels"], corr, cfg, norm)
    model.load_parameters(ckpt.params)
    return model


def checkpoint_schema(ckpt: Checkpoint) -> DatasetSchema | None:
    doc = ckpt.meta.get("schema")
    return DatasetSchema.from_dict(doc) if doc else None


def check_schema(ckpt: Checkpoint, schema: DatasetSchema) -> None:
    got = schema.structural_hash()
    if ckpt.schema_hash and got != ckpt.schema_hash:
        raise SchemaMismatchError(
            f"dataset schema hash {got} does not match checkpoint schema hash {ckpt.schema_hash}"
        )


def evaluate_checkpoint(ckpt: Checkpoint, dataset: SampleBatch) -> EvalReport:
    model = model_from_checkpoint(ckpt)
    schema = checkpoint_schema(ckpt)
    names = schema.label_names if schema else None
    return evaluate(model.predict_proba(dataset), dataset.y, dataset.mask, names)


def predict_checkpoint(ckpt: Checkpoint, dataset: SampleBatch) -> np.ndarray:
    return model_from_checkpoint(ckpt).predict_proba(dataset)
