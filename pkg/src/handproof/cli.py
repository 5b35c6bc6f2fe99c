"""Umbrella command line: synth, extract, train, eval, stats, serve, predict."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .affine import AffineParams, affine_synthesize
from .datasets import dataset_stats, load_gds_xml, read_jsonl, write_jsonl
from .errors import ExtractionFailed, HandproofError
from .experiments import load_dataset_files, run_experiment, write_report
from .gru import TrainConfig, load_model, predict, save_model, train
from .lognormal import extract_plan, kinematic_synthesize
from .service import resolve_model_path, serve


def _add_synth(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("synth", help="forge synthetic twins of human samples")
    p.add_argument("--in", dest="input", required=True, help="canonical JSONL input")
    p.add_argument("--out", required=True, help="canonical JSONL output")
    p.add_argument("--method", choices=("kinematic", "affine"), default="kinematic")
    p.add_argument("--seed", type=int, default=0)


def _add_extract(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("extract", help="fit lognormal action plans to samples")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="JSON report of plans and SNR")


def _add_train(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("train", help="train the GRU verifier")
    p.add_argument("--data", required=True, help="training JSONL")
    p.add_argument("--val", required=True, help="validation JSONL")
    p.add_argument("--repr", dest="representation",
                   choices=("delta", "velocity"), default="delta")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--hidden-dim", type=int, default=100)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)


def _add_eval(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("eval", help="run an experiment protocol")
    p.add_argument("--mode", choices=("detect", "fewshot", "ood", "combined"),
                   required=True)
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", required=True, help="report CSV path")


def _add_stats(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("stats", help="summarize a dataset")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--in", dest="input", help="canonical JSONL")
    group.add_argument("--gds-dir", help="$1-GDS XML corpus directory")


def _add_serve(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("serve", help="run the verification service")
    p.add_argument("--model", default=None,
                   help="model JSON (falls back to HANDPROOF_MODEL)")
    p.add_argument("--addr", default="127.0.0.1:8000")
    p.add_argument("--cors-origin", default=None)


def _add_predict(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("predict", help="score samples with a trained model")
    p.add_argument("--model", default=None,
                   help="model JSON (falls back to HANDPROOF_MODEL)")
    p.add_argument("--in", dest="input", required=True, help="canonical JSONL")
    p.add_argument("--id", dest="sample_id", default=None,
                   help="score only this sample id")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="handproof",
        description="Handwriting reverse Turing test toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for add in (_add_synth, _add_extract, _add_train, _add_eval, _add_stats,
                _add_serve, _add_predict):
        add(sub)
    return parser


def _cmd_synth(args: argparse.Namespace) -> int:
    samples = read_jsonl(args.input)
    out = []
    failures = 0
    for index, sample in enumerate(samples):
        rng = np.random.default_rng(args.seed ^ index)
        try:
            if args.method == "kinematic":
                synth = kinematic_synthesize(sample.trajectory, rng,
                                             sample_id=f"{sample.id}-kin")
            else:
                synth = affine_synthesize(sample.trajectory, AffineParams(),
                                          rng, sample_id=f"{sample.id}-aff")
        except HandproofError:
            failures += 1
            continue
        out.append(synth)
    write_jsonl(out, args.out)
    print(f"wrote {len(out)} synthetic samples to {args.out}"
          + (f" ({failures} failed)" if failures else ""))
    return 0


def _cmd_extract(args: argparse.Namespace) -> int:
    samples = read_jsonl(args.input)
    report = []
    for sample in samples:
        try:
            plan, snr_db = extract_plan(sample.trajectory)
        except ExtractionFailed as exc:
            report.append({"id": sample.id, "error": str(exc)})
            continue
        report.append({
            "id": sample.id,
            "snr_db": snr_db,
            "n_components": len(plan.components),
            "components": [dataclasses.asdict(c) for c in plan.components],
        })
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    ok = [r for r in report if "snr_db" in r]
    median = float(np.median([r["snr_db"] for r in ok])) if ok else float("nan")
    print(f"extracted {len(ok)}/{len(samples)} plans, median SNR {median:.1f} dB")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    overrides = {
        key: value
        for key, value in (("seed", args.seed),
                           ("max_epochs", args.max_epochs),
                           ("patience", args.patience),
                           ("batch_size", args.batch_size))
        if value is not None
    }
    config = dataclasses.replace(TrainConfig(), **overrides)
    model, log = train(read_jsonl(args.data), read_jsonl(args.val), config,
                       args.representation, args.hidden_dim)
    save_model(model, args.out)
    summary = log[-1]
    print(f"saved {args.out}: best epoch {summary['best_epoch']}, "
          f"val accuracy {summary['best_val_accuracy']:.4f}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    datasets = load_dataset_files(cfg["datasets"])
    config = dataclasses.replace(TrainConfig(), **cfg.get("train", {}))
    reports = run_experiment(
        args.mode,
        datasets,
        config,
        cfg.get("representation", "delta"),
        fraction=cfg.get("fraction", 0.10),
        source=cfg.get("source"),
        balanced=cfg.get("balanced", False),
        hidden_dim=cfg.get("hidden_dim", 100),
    )
    write_report(reports, args.out)
    for r in reports:
        print(f"{r.mode} {r.source}->{r.target}: auc={r.auc:.4f} eer={r.eer:.4f}")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    if args.input:
        dataset = read_jsonl(args.input)
    else:
        result = load_gds_xml(args.gds_dir)
        dataset = result.samples
        print(f"loaded {len(dataset)} samples, skipped {result.skipped}",
              file=sys.stderr)
    print(json.dumps(dataset_stats(dataset), indent=2))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    serve(resolve_model_path(args.model), args.addr, args.cors_origin)
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(resolve_model_path(args.model))
    samples = read_jsonl(args.input)
    if args.sample_id is not None:
        samples = [s for s in samples if s.id == args.sample_id]
        if not samples:
            print(f"no sample with id {args.sample_id!r}", file=sys.stderr)
            return 1
    for sample in samples:
        probability, verdict = predict(model, sample.trajectory)
        print(json.dumps({"id": sample.id, "probability": probability,
                          "verdict": verdict}))
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "extract": _cmd_extract,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "stats": _cmd_stats,
    "serve": _cmd_serve,
    "predict": _cmd_predict,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except HandproofError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
