"""Command-line entry point: train, eval, predict, gen-synthetic, export-label-graph."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from grassnet.checkpoint import Checkpoint
from grassnet.config import TrainConfig
from grassnet.data import (
    SyntheticSpec,
    build_vocabularies,
    gen_synthetic,
    infer_schema,
    load_dataset,
)
from grassnet.label_graph import LabelCorrelation
from grassnet.training import (
    check_schema,
    checkpoint_schema,
    evaluate_checkpoint,
    predict_checkpoint,
    train,
)


def _dataset_for_checkpoint(ckpt: Checkpoint, path: str, strict: bool):
    stored = checkpoint_schema(ckpt)
    t_max = stored.t_max if stored else ckpt.meta["dims"]["t_steps"]
    check_schema(ckpt, infer_schema(path, t_max))
    return load_dataset(path, stored, lenient=not strict)


def cmd_train(args) -> int:
    cfg = TrainConfig.load(args.config) if args.config else TrainConfig()
    schema = infer_schema(args.train, cfg.t_max)
    if not schema.vocabularies:
        schema = build_vocabularies(args.train, schema)
    if schema.t_max != cfg.t_max:
        schema.t_max = cfg.t_max
    train_set = load_dataset(args.train, schema)
    valid_set = load_dataset(args.valid, schema, lenient=True)
    ckpt, history = train(train_set, valid_set, cfg, schema)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt.save(out / "model.gssn")
    (out / "history.json").write_text(json.dumps({
        "best_epoch": history.best_epoch,
        "stopped_early": history.stopped_early,
        "epochs": [e.__dict__ for e in history.epochs],
    }, indent=2))
    print(f"best epoch {history.best_epoch}, valid O-AUC {ckpt.best_metric}")
    print(f"checkpoint written to {out / 'model.gssn'}")
    return 0


def cmd_eval(args) -> int:
    ckpt = Checkpoint.load(args.checkpoint)
    report = evaluate_checkpoint(ckpt, _dataset_for_checkpoint(ckpt, args.data, args.strict))
    print(report.render())
    if args.json:
        Path(args.json).write_text(report.to_json(indent=2))
    return 0


def cmd_predict(args) -> int:
    ckpt = Checkpoint.load(args.checkpoint)
    dataset = _dataset_for_checkpoint(ckpt, args.data, args.strict)
    scores = predict_checkpoint(ckpt, dataset)
    schema = checkpoint_schema(ckpt)
    names = schema.label_names if schema else [f"label_{j}" for j in range(scores.shape[1])]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", *names])
        for sid, row in zip(dataset.sample_ids, scores):
            w.writerow([sid, *[repr(float(v)) for v in row]])
    return 0


def cmd_gen(args) -> int:
    spec = SyntheticSpec.load(args.spec) if args.spec else SyntheticSpec()
    gen_synthetic(spec, args.out)
    print(f"wrote train.csv, valid.csv, schema.json to {args.out}")
    return 0


def cmd_export(args) -> int:
    ckpt = Checkpoint.load(args.checkpoint)
    a = ckpt.extras["label_graph.a_label"].astype(int)
    LabelCorrelation(ckpt.extras["label_graph.p"], a, ckpt.meta["tau"]).save(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grassnet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config")
    p.add_argument("--train", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    for name, func, text in (("eval", cmd_eval, "score a labeled CSV"),
                             ("predict", cmd_predict, "write per-label probabilities")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--data", required=True)
        p.add_argument("--strict", action="store_true", help="reject unknown categories")
        if name == "eval":
            p.add_argument("--json", help="also write the report as JSON")
        else:
            p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("gen-synthetic", help="write a planted-rule dataset")
    p.add_argument("--spec")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("export-label-graph", help="dump the thresholded label graph")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
