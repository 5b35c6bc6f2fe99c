"""Experiment protocols: detect, few-shot, out-of-distribution, combined.

Each protocol trains the GRU verifier on a seeded stratified split and
reports AUC, EER, balanced accuracy and F-score on held-out data.  A report
is reproducible bit-exactly from its data, seed and config.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import MissingDataset
from .gru import GruModel, TrainConfig, _batch_arrays, forward, train
from .metrics import (
    MetricsReport,
    balanced_accuracy_fscore,
    eer,
    roc_auc,
    stratified_split,
    weighted_fscore,
)
from .trajectory import LabeledSample, SEQ_CAPACITY, SYNTHETIC
from .datasets import read_jsonl

MODES = ("detect", "fewshot", "ood", "combined")
_SCORE_CHUNK = 128

CSV_COLUMNS = ("mode", "source", "target", "representation", "synthesizer",
               "auc", "eer", "bal_acc", "f1", "n_pos", "n_neg", "seed")


def score_samples(model: GruModel, samples: list[LabeledSample]) -> np.ndarray:
    """Synthetic probability for each sample, dropout off, chunked.

    Sequences are padded to the standard capacity the model trained at.
    """
    xs, _ = _batch_arrays(samples, model.representation, model.stats,
                          SEQ_CAPACITY)
    out = np.empty(len(samples))
    for start in range(0, len(samples), _SCORE_CHUNK):
        p, _ = forward(model, xs[start:start + _SCORE_CHUNK])
        out[start:start + len(p)] = p
    return out


def _synthesizer_tag(samples: list[LabeledSample]) -> str:
    sources = sorted({s.source for s in samples if s.label == SYNTHETIC})
    return "+".join(sources)


def _evaluate(
    model: GruModel,
    test: list[LabeledSample],
    *,
    mode: str,
    source: str,
    target: str,
    representation: str,
    seed: int,
    weighted: bool = False,
    extra: dict | None = None,
) -> MetricsReport:
    scores = score_samples(model, test)
    labels = np.array([1 if s.label == SYNTHETIC else 0 for s in test])
    preds = (scores > model.threshold).astype(int)
    bal_acc, f1 = balanced_accuracy_fscore(preds, labels)
    if weighted:
        f1 = weighted_fscore(preds, labels)
    return MetricsReport(
        auc=roc_auc(scores, labels),
        eer=eer(scores, labels),
        balanced_accuracy=bal_acc,
        f_score=f1,
        n_pos=int(labels.sum()),
        n_neg=int(len(labels) - labels.sum()),
        mode=mode,
        representation=representation,
        source=source,
        target=target,
        synthesizer=_synthesizer_tag(test),
        seed=seed,
        extra=extra or {},
    )


def _balance(samples: list[LabeledSample], rng: np.random.Generator) -> list[LabeledSample]:
    """Downsample the majority class to the minority count, seeded."""
    pos = [s for s in samples if s.label == SYNTHETIC]
    neg = [s for s in samples if s.label != SYNTHETIC]
    n = min(len(pos), len(neg))
    out: list[LabeledSample] = []
    for group in (neg, pos):
        idx = rng.permutation(len(group))[:n]
        out.extend(group[i] for i in sorted(idx))
    return out


def run_experiment(
    mode: str,
    datasets: dict[str, list[LabeledSample]],
    config: TrainConfig,
    representation: str = "delta",
    *,
    fraction: float = 0.10,
    source: str | None = None,
    balanced: bool = False,
    hidden_dim: int = 100,
) -> list[MetricsReport]:
    """Run one protocol over named datasets and return one report per cell.

    detect: per dataset, 70/10/20 stratified split, test on the held-out 20%.
    fewshot: per dataset, ``fraction`` of the data for training (a fifth of
    that as validation), everything else as test.
    ood: train on ``source`` (70/10 of it), test on the union of seeded 30%
    subsets of every other dataset.
    combined: pool all datasets, optionally class-balance by downsampling,
    then 70/10/20; the imbalanced variant reports class-weighted F-score.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not datasets:
        raise MissingDataset("no datasets given")
    seed = config.seed

    if mode == "detect":
        reports = []
        for name in sorted(datasets):
            tr, va, te = stratified_split(datasets[name], seed=seed)
            model, _ = train(tr, va, config, representation, hidden_dim)
            reports.append(_evaluate(model, te, mode=mode, source=name,
                                     target=name, representation=representation,
                                     seed=seed))
        return reports

    if mode == "fewshot":
        if not 0.0 < fraction < 1.0:
            raise ValueError("fraction must be in (0, 1)")
        ratios = (0.8 * fraction, 0.2 * fraction, 1.0 - fraction)
        reports = []
        for name in sorted(datasets):
            tr, va, te = stratified_split(datasets[name], ratios, seed=seed)
            model, _ = train(tr, va, config, representation, hidden_dim)
            reports.append(_evaluate(model, te, mode=mode, source=name,
                                     target=name, representation=representation,
                                     seed=seed, extra={"fraction": fraction}))
        return reports

    if mode == "ood":
        if source is None or source not in datasets:
            raise MissingDataset(f"ood needs a source among {sorted(datasets)}")
        others = [name for name in sorted(datasets) if name != source]
        if not others:
            raise MissingDataset("ood needs at least one non-source dataset")
        tr, va, _ = stratified_split(datasets[source], seed=seed)
        model, _ = train(tr, va, config, representation, hidden_dim)
        pool: list[LabeledSample] = []
        for name in others:
            subset, _, _ = stratified_split(datasets[name], (0.30, 0.70, 0.0),
                                            seed=seed)
            pool.extend(subset)
        return [_evaluate(model, pool, mode=mode, source=source,
                          target="+".join(others),
                          representation=representation, seed=seed)]

    # combined
    pooled: list[LabeledSample] = []
    for name in sorted(datasets):
        pooled.extend(datasets[name])
    if balanced:
        pooled = _balance(pooled, np.random.default_rng(seed))
    tr, va, te = stratified_split(pooled, seed=seed)
    model, _ = train(tr, va, config, representation, hidden_dim)
    tag = "+".join(sorted(datasets))
    return [_evaluate(model, te, mode=mode, source=tag, target=tag,
                      representation=representation, seed=seed,
                      weighted=not balanced,
                      extra={"balanced": balanced})]


def load_dataset_files(paths: dict[str, str | Path]) -> dict[str, list[LabeledSample]]:
    """Read named canonical JSONL files; a missing file raises MissingDataset."""
    out: dict[str, list[LabeledSample]] = {}
    for name, path in paths.items():
        p = Path(path)
        if not p.is_file():
            raise MissingDataset(f"dataset {name!r}: no such file {p}")
        out[name] = read_jsonl(p)
    return out


def write_report(reports: list[MetricsReport], path: str | Path) -> None:
    """CSV with one row per report, fixed column order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in reports:
            writer.writerow([
                r.mode, r.source, r.target, r.representation, r.synthesizer,
                repr(r.auc), repr(r.eer), repr(r.balanced_accuracy),
                repr(r.f_score), r.n_pos, r.n_neg, r.seed,
            ])
