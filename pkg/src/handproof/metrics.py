"""Classification metrics and stratified splitting.

Scores follow the synthetic-is-positive convention: higher means more likely
synthetic.  EER is stated in the acceptance sense of a verifier that accepts
low-scoring samples as human, so FAR counts synthetic samples at or below the
threshold and FRR counts human samples above it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    SingleClassDataset,
    SingleClassLabels,
    SingleClassScores,
)
from .trajectory import LabeledSample

DEFAULT_RATIOS = (0.70, 0.10, 0.20)


@dataclass(frozen=True)
class MetricsReport:
    """One experiment cell: discrimination metrics plus provenance."""

    auc: float
    eer: float
    balanced_accuracy: float
    f_score: float
    n_pos: int
    n_neg: int
    mode: str = ""
    representation: str = ""
    source: str = ""
    target: str = ""
    synthesizer: str = ""
    seed: int = 0
    extra: dict = field(default_factory=dict)


def _largest_remainder(n: int, ratios: tuple[float, ...]) -> list[int]:
    """Integer allocation of n items proportional to ratios.

    Floors first, then hands the leftover items to the largest fractional
    remainders; remainder ties go to the earlier split.
    """
    exact = [n * r for r in ratios]
    counts = [int(np.floor(e + 1e-9)) for e in exact]
    leftover = n - sum(counts)
    remainders = sorted(
        range(len(ratios)),
        key=lambda i: (-(exact[i] - counts[i]), i),
    )
    for i in remainders[:leftover]:
        counts[i] += 1
    return counts


def stratified_split(
    dataset: list[LabeledSample],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> tuple[list[LabeledSample], list[LabeledSample], list[LabeledSample]]:
    """Seeded label-preserving partition into train/val/test.

    Each label's samples are shuffled and allocated to the splits with
    largest-remainder rounding, so class ratios are preserved within one
    sample.  Labels are processed in name order so the draw sequence is
    reproducible.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    if any(r < 0 for r in ratios):
        raise ValueError(f"ratios must be non-negative, got {ratios}")
    by_label: dict[str, list[LabeledSample]] = {}
    for sample in dataset:
        by_label.setdefault(sample.label, []).append(sample)
    if len(by_label) < 2:
        raise SingleClassDataset(
            f"need both labels, got {sorted(by_label)}"
        )

    rng = np.random.default_rng(seed)
    splits: tuple[list, list, list] = ([], [], [])
    for label in sorted(by_label):
        group = by_label[label]
        order = rng.permutation(len(group))
        shuffled = [group[i] for i in order]
        counts = _largest_remainder(len(group), ratios)
        start = 0
        for split, count in zip(splits, counts):
            split.extend(shuffled[start:start + count])
            start += count
    return splits


def _score_arrays(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if y.dtype.kind in "UO":
        y = (y == "synthetic")
    y = y.astype(bool)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError(f"scores {s.shape} and labels {y.shape} must be 1-D and equal")
    if y.all() or not y.any():
        raise SingleClassScores("both classes are required")
    return s, y


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the tie-corrected rank statistic.

    Equals the Mann-Whitney probability that a random synthetic score exceeds
    a random human score, counting ties as half.
    """
    s, y = _score_arrays(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos

    # midranks: average rank within each tie group
    order = np.argsort(s, kind="stable")
    ranks = np.empty(len(s), dtype=np.float64)
    sorted_s = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1

    rank_sum = ranks[y].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _eer_one_sided(s: np.ndarray, y: np.ndarray) -> float:
    thresholds = np.unique(s)
    far = np.array([(s[y] <= t).mean() for t in thresholds])
    frr = np.array([(s[~y] > t).mean() for t in thresholds])
    diff = far - frr

    exact = np.nonzero(diff == 0.0)[0]
    if exact.size:
        return float(far[exact[0]])
    sign_change = np.nonzero((diff[:-1] < 0) & (diff[1:] > 0))[0]
    if not sign_change.size:
        # no crossing inside the sweep: the boundary rates meet at an end
        return float(min(max(far[0], frr[0]), max(far[-1], frr[-1])))
    i = int(sign_change[0])
    lam = -diff[i] / (diff[i + 1] - diff[i])
    return float(far[i] + lam * (far[i + 1] - far[i]))


def eer(scores, labels) -> float:
    """Equal error rate from the threshold sweep, interpolated at the crossing.

    FAR is the fraction of synthetic samples accepted as human (score <= t);
    FRR is the fraction of human samples rejected (score > t).  The estimate
    is symmetrized over the mirrored problem (scores negated, labels flipped)
    so flipping is an exact identity.
    """
    s, y = _score_arrays(scores, labels)
    return 0.5 * (_eer_one_sided(s, y) + _eer_one_sided(-s, ~y))


def _prediction_arrays(predictions, labels) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions)
    y = np.asarray(labels)
    for arr_name, arr in (("predictions", p), ("labels", y)):
        if arr.dtype.kind in "UO":
            arr = arr == "synthetic"
        if arr_name == "predictions":
            p = arr
        else:
            y = arr
    p = p.astype(bool)
    y = y.astype(bool)
    if p.shape != y.shape or p.ndim != 1:
        raise ValueError("predictions and labels must be 1-D and equal length")
    if y.all() or not y.any():
        raise SingleClassLabels("both classes are required in labels")
    return p, y


def balanced_accuracy_fscore(predictions, labels) -> tuple[float, float]:
    """Balanced accuracy and F1 with synthetic as the positive class."""
    p, y = _prediction_arrays(predictions, labels)
    tp = int(np.sum(p & y))
    fn = int(np.sum(~p & y))
    tn = int(np.sum(~p & ~y))
    fp = int(np.sum(p & ~y))
    tpr = tp / (tp + fn)
    tnr = tn / (tn + fp)
    bal_acc = 0.5 * (tpr + tnr)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tpr
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return float(bal_acc), float(f1)


def weighted_fscore(predictions, labels) -> float:
    """F1 per class, averaged with class-proportion weights."""
    p, y = _prediction_arrays(predictions, labels)
    total = len(y)
    score = 0.0
    for positive in (True, False):
        yp = y == positive
        pp = p == positive
        tp = int(np.sum(pp & yp))
        fp = int(np.sum(pp & ~yp))
        fn = int(np.sum(~pp & yp))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (2.0 * precision * recall / (precision + recall)
              if precision + recall else 0.0)
        score += (yp.sum() / total) * f1
    return float(score)
