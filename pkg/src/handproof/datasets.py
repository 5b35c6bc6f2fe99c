"""Dataset ingestion: canonical JSONL, the $1-GDS XML corpus, statistics.

The canonical interchange format is JSON Lines with one labeled sample per
line: ``{"id": str, "label": "human"|"synthetic", "source": str,
"points": [[x, y, t_seconds], ...]}``.  Unknown keys are preserved on read
and dropped on write.  Only $1-GDS gets a dedicated loader; other corpora
are expected as canonical JSONL.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyDataset,
    HandproofError,
    IoError,
    MalformedXml,
    NotFound,
    ParseError,
)
from .trajectory import LABELS, LabeledSample, SEQ_CAPACITY, Trajectory, validate

GDS_SOURCE = "$1-GDS"
_REQUIRED_KEYS = ("id", "label", "source", "points")
_PERCENTILES = (5, 25, 50, 75, 95)


def read_jsonl(path: str | Path) -> list[LabeledSample]:
    """Read canonical JSONL; blank lines are ignored.

    Any malformed line raises ParseError carrying its 1-based line number:
    bad JSON, missing keys, an unknown label, or points that fail strict
    validation.  Unknown keys land in the sample's ``extra`` dict.
    """
    samples: list[LabeledSample] = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    with fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc}", line=line_no) from exc
            if not isinstance(record, dict):
                raise ParseError("expected a JSON object", line=line_no)
            missing = [k for k in _REQUIRED_KEYS if k not in record]
            if missing:
                raise ParseError(f"missing keys {missing}", line=line_no)
            if record["label"] not in LABELS:
                raise ParseError(
                    f"label must be one of {LABELS}, got {record['label']!r}",
                    line=line_no,
                )
            try:
                traj = validate(np.asarray(record["points"], dtype=np.float64))
            except (HandproofError, ValueError) as exc:
                raise ParseError(f"bad points: {exc}", line=line_no) from exc
            extra = {k: v for k, v in record.items() if k not in _REQUIRED_KEYS}
            samples.append(
                LabeledSample(
                    id=str(record["id"]),
                    trajectory=traj,
                    label=record["label"],
                    source=str(record["source"]),
                    extra=extra,
                )
            )
    return samples


def write_jsonl(samples: list[LabeledSample], path: str | Path) -> int:
    """Write canonical JSONL; returns how many samples had extra keys dropped.

    Floats serialize with Python's shortest round-trip repr, so a write/read
    cycle is value-identical.
    """
    dropped = 0
    try:
        fh = open(path, "w", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    with fh:
        for sample in samples:
            if sample.extra:
                dropped += 1
            record = {
                "id": sample.id,
                "label": sample.label,
                "source": sample.source,
                "points": sample.trajectory.points.tolist(),
            }
            fh.write(json.dumps(record) + "\n")
    return dropped


@dataclass(frozen=True)
class GdsLoadResult:
    """Samples that passed validation plus the count of skipped files."""

    samples: list[LabeledSample]
    skipped: int


def load_gds_xml(directory: str | Path) -> GdsLoadResult:
    """Load a $1-GDS corpus directory (recursive) into human-labeled samples.

    Each XML file holds one gesture: a ``<Gesture>`` element with ``<Point>``
    children carrying X, Y and integer-millisecond T attributes.  T converts
    to seconds.  Files whose points fail validation even with repair are
    skipped and counted; structurally broken XML raises MalformedXml.
    """
    root = Path(directory)
    if not root.is_dir():
        raise NotFound(f"no such directory: {root}")
    samples: list[LabeledSample] = []
    skipped = 0
    for path in sorted(root.rglob("*.xml")):
        try:
            tree = ET.parse(path)
        except ET.ParseError as exc:
            raise MalformedXml(f"{path.name}: {exc}") from exc
        gesture = tree.getroot()
        if gesture.tag != "Gesture":
            raise MalformedXml(f"{path.name}: root element is <{gesture.tag}>")
        try:
            points = [
                (float(pt.attrib["X"]), float(pt.attrib["Y"]),
                 float(pt.attrib["T"]) / 1000.0)
                for pt in gesture.iter("Point")
            ]
        except (KeyError, ValueError) as exc:
            raise MalformedXml(f"{path.name}: bad point attributes: {exc}") from exc
        sample_id = gesture.attrib.get("Name", path.stem)
        try:
            traj = validate(np.array(points, dtype=np.float64).reshape(-1, 3),
                            repair=True)
        except HandproofError:
            skipped += 1
            continue
        samples.append(
            LabeledSample(id=sample_id, trajectory=traj, label="human",
                          source=GDS_SOURCE, extra={"file": str(path.name)})
        )
    return GdsLoadResult(samples=samples, skipped=skipped)


def dataset_stats(dataset: list[LabeledSample]) -> dict:
    """Summary counts and percentiles for a labeled dataset.

    Includes the fraction of samples whose feature rows (points minus one)
    exceed the 400-row classifier capacity, i.e. truncation exposure.
    """
    if not dataset:
        raise EmptyDataset("dataset_stats needs at least one sample")
    sources: dict[str, int] = {}
    labels: dict[str, int] = {}
    for sample in dataset:
        sources[sample.source] = sources.get(sample.source, 0) + 1
        labels[sample.label] = labels.get(sample.label, 0) + 1
    lengths = np.array([s.trajectory.n_points for s in dataset], dtype=np.float64)
    durations = np.array([s.trajectory.duration for s in dataset])
    return {
        "n_samples": len(dataset),
        "sources": dict(sorted(sources.items())),
        "labels": dict(sorted(labels.items())),
        "length_percentiles": {
            f"p{q}": float(np.percentile(lengths, q)) for q in _PERCENTILES
        },
        "duration_percentiles": {
            f"p{q}": float(np.percentile(durations, q)) for q in _PERCENTILES
        },
        "truncation_fraction": float(np.mean(lengths - 1 > SEQ_CAPACITY)),
    }
