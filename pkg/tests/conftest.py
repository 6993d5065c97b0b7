import numpy as np
import pytest

from grassnet.config import TrainConfig
from grassnet.data import SampleBatch
from grassnet.label_graph import build_cooccurrence, threshold_correlation
from grassnet.model import GraSSNet

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def tiny_batch(rng, b=6, n=4, t=2, c=3, vocab=5, fields=2, unlabeled=0.0) -> SampleBatch:
    return SampleBatch(
        sample_ids=[f"s{i}" for i in range(b)],
        series=rng.normal(size=(b, n, t)),
        valid=np.ones((b, t)),
        tokens=rng.integers(0, vocab, size=(b, fields)),
        y=(rng.random((b, c)) < 0.4).astype(float),
        mask=(rng.random((b, c)) >= unlabeled).astype(float),
    )


def tiny_model(batch: SampleBatch, vocab=5, seed=0, **cfg_kw) -> GraSSNet:
    kw = dict(hidden_dim=6, feature_dim=6, label_dim=4, embedding_dim=3,
              spectral_channels=2, seed=seed)
    kw.update(cfg_kw)
    cfg = TrainConfig(**kw)
    corr = threshold_correlation(build_cooccurrence(batch.y, batch.mask), 0.4)
    return GraSSNet(batch.series.shape[1], batch.series.shape[2], vocab,
                    batch.tokens.shape[1], batch.y.shape[1], corr, cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
