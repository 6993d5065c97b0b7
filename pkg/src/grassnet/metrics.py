"""Per-label and pooled recall, false-alarm ratio and ROC AUC."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC with half credit for ties; NaN for single-class input."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    pos = scores[labels == 1]
    neg = np.sort(scores[labels != 1])
    if pos.size == 0 or neg.size == 0:
        return float("nan")
    below = np.searchsorted(neg, pos, side="left")
    ties = np.searchsorted(neg, pos, side="right") - below
    # below and ties are integers, so the half-credit sum is exact in float64
    u = below.sum() + 0.5 * ties.sum()
    return float(u / (pos.size * neg.size))


def confusion_rates(scores, labels, threshold: float = 0.5) -> tuple[float, float]:
    """(recall, false_alarm) for the rule score > threshold; 0/0 := 0."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    pred = scores > threshold
    actual = labels == 1
    tp = int(np.sum(pred & actual))
    fn = int(np.sum(~pred & actual))
    fp = int(np.sum(pred & ~actual))
    tn = int(np.sum(~pred & ~actual))
    recall = tp / (tp + fn) if tp + fn else 0.0
    false_alarm = fp / (fp + tn) if fp + tn else 0.0
    return recall, false_alarm


@dataclass
class LabelMetrics:
    name: str
    recall: float
    false_alarm: float
    auc: float | None
    positives: int
    negatives: int

    @property
    def zero_support(self) -> bool:
        return self.positives == 0


@dataclass
class EvalReport:
    per_label: list[LabelMetrics]
    overall_recall: float
    overall_false_alarm: float
    overall_auc: float | None
    macro_recall: float
    macro_false_alarm: float
    macro_auc: float | None
    observed: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def o_auc(self) -> float | None:
        return self.overall_auc

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        doc = dict(doc)
        doc["per_label"] = [LabelMetrics(**m) for m in doc["per_label"]]
        return cls(**doc)

    def render(self) -> str:
        def fmt(v):
            return "   n/a" if v is None else f"{v:6.3f}"

        width = max([5] + [len(m.name) for m in self.per_label])
        lines = [f"{'label':<{width}}  {'L-R':>6}  {'L-F':>6}  {'L-AUC':>6}  {'neg':>7}  {'pos':>7}"]
        for m in self.per_label:
            lines.append(
                f"{m.name:<{width}}  {fmt(m.recall)}  {fmt(m.false_alarm)}  {fmt(m.auc)}"
                f"  {m.negatives:>7d}  {m.positives:>7d}"
            )
        lines.append(
            f"{'macro':<{width}}  {fmt(self.macro_recall)}  {fmt(self.macro_false_alarm)}  {fmt(self.macro_auc)}"
        )
        lines.append(
            f"{'micro':<{width}}  {fmt(self.overall_recall)}  {fmt(self.overall_false_alarm)}  {fmt(self.overall_auc)}"
        )
        return "\n".join(lines)


def _defined(v: float) -> float | None:
    return None if math.isnan(v) else v


def evaluate(scores, y, mask=None, label_names=None, threshold: float = 0.5) -> EvalReport:
    """Per-label metrics over observed entries plus micro-pooled overall metrics."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    observed = np.ones(y.shape, dtype=bool) if mask is None else np.asarray(mask) > 0
    c = scores.shape[1]
    names = label_names or [f"label_{j}" for j in range(c)]
    per_label = []
    for j in range(c):
        obs = observed[:, j]
        s, t = scores[obs, j], y[obs, j]
        recall, fa = confusion_rates(s, t, threshold)
        per_label.append(LabelMetrics(
            name=names[j], recall=recall, false_alarm=fa, auc=_defined(roc_auc(s, t)),
            positives=int(np.sum(t == 1)), negatives=int(np.sum(t != 1)),
        ))
    pooled_s, pooled_y = scores[observed], y[observed]
    o_r, o_f = confusion_rates(pooled_s, pooled_y, threshold)
    aucs = [m.auc for m in per_label if m.auc is not None]
    recalls = [m.recall for m in per_label if not m.zero_support]
    return EvalReport(
        per_label=per_label,
        overall_recall=o_r,
        overall_false_alarm=o_f,
        overall_auc=_defined(roc_auc(pooled_s, pooled_y)),
        macro_recall=float(np.mean(recalls)) if recalls else 0.0,
        macro_false_alarm=float(np.mean([m.false_alarm for m in per_label])) if per_label else 0.0,
        macro_auc=float(np.mean(aucs)) if aucs else None,
        observed=int(observed.sum()),
    )
