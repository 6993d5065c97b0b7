"""Dataset schema, CSV ingestion with padding and masks, synthetic generator.

CSV layout: one row per (sample, timestep) with columns ``sample_id``,
``timestep``, the sensor columns, the categorical columns and the label
columns.  Label cells hold ``0``, ``1`` or the missing sentinel ``NA``.
"""
from __future__ import annotations

import csv
import hashlib
import json
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

UNK = "<unk>"
SCHEMA_FILE = "schema.json"


class DataFormatError(ValueError):
    pass


class SchemaMismatchError(ValueError):
    pass


@dataclass
class DatasetSchema:
    sensor_names: list[str]
    categorical_fields: list[str]
    label_names: list[str]
    t_max: int = 2
    missing_label: str = "NA"
    vocabularies: dict[str, list[str]] = field(default_factory=dict)

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_names)

    @property
    def n_labels(self) -> int:
        return len(self.label_names)

    @property
    def n_fields(self) -> int:
        return len(self.categorical_fields)

    def structural_hash(self) -> str:
        """Hash of the column roles; vocabularies and padding length excluded."""
        doc = {
            "sensors": self.sensor_names,
            "categorical": self.categorical_fields,
            "labels": self.label_names,
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]

    def token_table(self) -> dict[tuple[str, str], int]:
        """Global token ids: 0 is the shared unknown token, then each field's values."""
        ids = {}
        nxt = 1
        for name in self.categorical_fields:
            for value in self.vocabularies.get(name, []):
                ids[(name, value)] = nxt
                nxt += 1
        return ids

    @property
    def vocab_size(self) -> int:
        return 1 + sum(len(self.vocabularies.get(f, [])) for f in self.categorical_fields)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetSchema":
        return cls(**doc)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "DatasetSchema":
        return cls.from_dict(json.loads(Path(path).read_text()))


def infer_schema(path, t_max: int = 2) -> DatasetSchema:
    """Schema for a CSV: a sibling ``schema.json`` if present, else column prefixes.

    Prefix convention: ``sensor*`` / ``cat*`` / ``label*`` (or ``kqi*``).
    """
    path = Path(path)
    sibling = path.parent / SCHEMA_FILE
    if sibling.exists():
        return DatasetSchema.load(sibling)
    with path.open(newline="") as fh:
        header = next(csv.reader(fh))
    cols = [c.strip() for c in header[2:]]
    low = [c.lower() for c in cols]
    sensors = [c for c, lc in zip(cols, low) if lc.startswith("sensor")]
    cats = [c for c, lc in zip(cols, low) if lc.startswith("cat")]
    labels = [c for c, lc in zip(cols, low) if lc.startswith(("label", "kqi"))]
    if len(sensors) + len(cats) + len(labels) != len(cols):
        raise DataFormatError(f"{path}: cannot assign roles to all columns; provide {SCHEMA_FILE}")
    return DatasetSchema(sensors, cats, labels, t_max=t_max)


def build_vocabularies(path, schema: DatasetSchema) -> DatasetSchema:
    """Return a copy of ``schema`` with vocabularies collected from ``path`` (sorted)."""
    seen: dict[str, set] = {f: set() for f in schema.categorical_fields}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            for f in schema.categorical_fields:
                seen[f].add(row[f])
    vocab = {f: sorted(seen[f]) for f in schema.categorical_fields}
    return DatasetSchema(**{**schema.to_dict(), "vocabularies": vocab})


def zero_pad(series, t_max: int) -> np.ndarray:
    """Front-pad (N, L) to (N, t_max) with zeros, or keep the last t_max steps."""
    series = np.asarray(series, dtype=np.float64)
    if series.ndim == 1:
        series = series[None, :]
    length = series.shape[-1]
    if length < 1:
        raise DataFormatError("cannot pad an empty series")
    if length >= t_max:
        return series[:, length - t_max:].copy()
    out = np.zeros((series.shape[0], t_max))
    out[:, t_max - length:] = series
    return out


@dataclass
class SampleBatch:
    sample_ids: list[str]
    series: np.ndarray      # B x N x T, front zero-padded, raw units
    valid: np.ndarray       # B x T, 1 where a real step exists
    tokens: np.ndarray      # B x F global token ids
    y: np.ndarray           # B x C, 0 where unobserved
    mask: np.ndarray        # B x C, 1 = label observed

    def __len__(self) -> int:
        return len(self.sample_ids)

    def subset(self, idx) -> "SampleBatch":
        idx = np.asarray(idx, dtype=np.int64)
        return SampleBatch(
            [self.sample_ids[i] for i in idx], self.series[idx], self.valid[idx],
            self.tokens[idx], self.y[idx], self.mask[idx],
        )

    @property
    def unlabeled(self) -> np.ndarray:
        """Samples whose labels are all missing."""
        return self.mask.sum(axis=1) == 0

    def batches(self, size: int, rng: np.random.Generator | None = None):
        order = np.arange(len(self)) if rng is None else rng.permutation(len(self))
        for start in range(0, len(self), size):
            yield self.subset(order[start:start + size])


def _parse_float(text: str, line: int, col: str) -> float:
    text = text.strip()
    if text in ("", "NA", "NaN", "nan"):
        return float("nan")
    try:
        return float(text)
    except ValueError:
        raise DataFormatError(f"line {line}: column {col!r} is not numeric: {text!r}") from None


def load_dataset(path, schema: DatasetSchema, lenient: bool = False) -> SampleBatch:
    """Read a CSV into a padded :class:`SampleBatch`.

    Rows are grouped by ``sample_id`` and ordered by ``timestep``; the
    categorical values and labels are taken from a sample's last step.
    Missing sensor readings become NaN (zero after normalization).
    Unknown categories raise unless ``lenient``, which maps them to the
    unknown token.
    """
    path = Path(path)
    ids = schema.token_table()
    groups: "OrderedDict[str, list]" = OrderedDict()
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        expected = ["sample_id", "timestep", *schema.sensor_names,
                    *schema.categorical_fields, *schema.label_names]
        if header != expected:
            raise DataFormatError(f"{path}: header {header} does not match schema columns {expected}")
        n_s, n_f = schema.n_sensors, schema.n_fields
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(f"line {line}: expected {len(header)} fields, got {len(row)}")
            sid = row[0].strip()
            try:
                step = int(row[1])
            except ValueError:
                raise DataFormatError(f"line {line}: bad timestep {row[1]!r}") from None
            sensors = [_parse_float(v, line, c) for v, c in zip(row[2:2 + n_s], schema.sensor_names)]
            cats = []
            for f, v in zip(schema.categorical_fields, row[2 + n_s:2 + n_s + n_f]):
                tok = ids.get((f, v.strip()))
                if tok is None:
                    if not lenient:
                        raise DataFormatError(f"line {line}: unknown category {v!r} in field {f!r}")
                    tok = 0
                cats.append(tok)
            labels = []
            for c, v in zip(schema.label_names, row[2 + n_s + n_f:]):
                v = v.strip()
                if v == schema.missing_label:
                    labels.append(np.nan)
                elif v in ("0", "1", "0.0", "1.0"):
                    labels.append(float(v))
                else:
                    raise DataFormatError(f"line {line}: label {c!r} must be 0, 1 or {schema.missing_label}, got {v!r}")
            groups.setdefault(sid, []).append((step, sensors, cats, labels))

    b, n, t = len(groups), schema.n_sensors, schema.t_max
    series = np.zeros((b, n, t))
    valid = np.zeros((b, t))
    tokens = np.zeros((b, schema.n_fields), dtype=np.int64)
    y = np.zeros((b, schema.n_labels))
    mask = np.zeros((b, schema.n_labels))
    for i, rows in enumerate(groups.values()):
        rows.sort(key=lambda r: r[0])
        raw = np.array([r[1] for r in rows], dtype=np.float64).T      # N x L
        series[i] = zero_pad(raw, t)
        valid[i] = zero_pad(np.ones((1, raw.shape[1])), t)[0]
        tokens[i] = rows[-1][2]
        lab = np.array(rows[-1][3])
        mask[i] = ~np.isnan(lab)
        y[i] = np.nan_to_num(lab, nan=0.0)
    return SampleBatch(list(groups.keys()), series, valid, tokens, y, mask)


# -- synthetic data -------------------------------------------------------

@dataclass
class SyntheticSpec:
    sensors: int = 8
    steps: int = 2
    labels: int = 4
    samples: int = 256
    valid_samples: int = 64
    unlabeled_fraction: float = 0.0
    positive_rate: float = 0.2
    label_noise: float = 0.1
    categorical_fields: int = 2
    vocab_size: int = 4
    cooccurrence: list = field(default_factory=lambda: [[1, 2, 0.9]])
    min_steps: int | None = None
    seed: int = 0

    @classmethod
    def load(cls, path) -> "SyntheticSpec":
        return cls(**json.loads(Path(path).read_text()))


STAT_NAMES = ("mean_level", "mean_trend", "level_spread", "trend_spread")


def _sensor_statistics(x: np.ndarray) -> np.ndarray:
    last = x[:, :, -1]
    trend = x[:, :, -1] - x[:, :, -2] if x.shape[2] > 1 else np.zeros_like(last)
    return np.stack([last.mean(1), trend.mean(1), last.std(1), trend.std(1)], axis=1)


def synthesize(spec: SyntheticSpec) -> dict:
    """Draw series, tokens and labels from planted linear-threshold rules.

    Each label thresholds a noisy linear score over standardized
    cross-sensor statistics (label c leans on statistic c mod 4).  Each
    ``[i, j, q]`` in ``spec.cooccurrence`` then overrides label j on samples
    where label i is positive with Bernoulli(q).  Returns arrays for all
    train + valid samples, train first.
    """
    rng = np.random.default_rng(spec.seed)
    total = spec.samples + spec.valid_samples
    n, t, c = spec.sensors, spec.steps, spec.labels
    k = len(STAT_NAMES)

    level = rng.normal(0.0, 1.0, total)
    drift = rng.normal(0.0, 1.0, total)
    level_scale = np.exp(rng.normal(0.0, 0.5, total))
    drift_scale = np.exp(rng.normal(0.0, 0.5, total))
    x = np.empty((total, n, t))
    x[:, :, 0] = level[:, None] + level_scale[:, None] * rng.normal(size=(total, n))
    for s in range(1, t):
        x[:, :, s] = x[:, :, s - 1] + drift[:, None] + drift_scale[:, None] * rng.normal(size=(total, n))

    stats = _sensor_statistics(x)
    stats = (stats - stats.mean(0)) / stats.std(0)
    weights = 0.25 * rng.normal(size=(c, k))
    weights[np.arange(c), np.arange(c) % k] += 1.0
    score = stats @ weights.T + spec.label_noise * rng.normal(size=(total, c))
    cut = np.quantile(score, 1.0 - spec.positive_rate, axis=0)
    y = (score > cut).astype(np.float64)
    for src, dst, prob in spec.cooccurrence:
        hit = y[:, src] == 1
        y[hit, dst] = (rng.random(hit.sum()) < prob).astype(np.float64)

    tokens = rng.integers(0, spec.vocab_size, size=(total, spec.categorical_fields))
    mask = (rng.random((total, c)) >= spec.unlabeled_fraction).astype(np.float64)
    min_steps = t if spec.min_steps is None else spec.min_steps
    lengths = rng.integers(min_steps, t + 1, size=total)
    return dict(series=x, tokens=tokens, y=y, mask=mask, lengths=lengths)


def _write_csv(path: Path, schema: DatasetSchema, data: dict, rows, prefix: str) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "timestep", *schema.sensor_names,
                    *schema.categorical_fields, *schema.label_names])
        for i in rows:
            length = int(data["lengths"][i])
            cats = [schema.vocabularies[f][v] for f, v in zip(schema.categorical_fields, data["tokens"][i])]
            labels = [str(int(v)) if m else schema.missing_label
                      for v, m in zip(data["y"][i], data["mask"][i])]
            steps = data["series"].shape[2]
            for s in range(steps - length, steps):
                w.writerow([f"{prefix}{i:06d}", s - (steps - length),
                            *[repr(float(v)) for v in data["series"][i, :, s]], *cats, *labels])


def gen_synthetic(spec: SyntheticSpec, out_dir) -> DatasetSchema:
    """Write ``train.csv``, ``valid.csv`` and ``schema.json`` to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = synthesize(spec)
    fields_ = [f"cat_{f}" for f in range(spec.categorical_fields)]
    schema = DatasetSchema(
        sensor_names=[f"sensor_{j}" for j in range(spec.sensors)],
        categorical_fields=fields_,
        label_names=[f"label_{c}" for c in range(spec.labels)],
        t_max=spec.steps,
        vocabularies={f: [f"v{v}" for v in range(spec.vocab_size)] for f in fields_},
    )
    _write_csv(out / "train.csv", schema, data, range(spec.samples), "s")
    _write_csv(out / "valid.csv", schema, data, range(spec.samples, spec.samples + spec.valid_samples), "s")
    schema.save(out / SCHEMA_FILE)
    return schema
