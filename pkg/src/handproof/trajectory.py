"""Canonical trajectory model, validation, resampling and classifier input features.

A trajectory is an ordered sequence of pen-tip samples (x, y, t) with time in
seconds and strictly increasing timestamps.  Everything downstream (synthesis,
feature extraction, the classifier) consumes this one representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    DegenerateDuration,
    EmptyTrainingSet,
    NonFiniteValue,
    NonMonotonicTime,
    TooFewPoints,
)

HUMAN = "human"
SYNTHETIC = "synthetic"
LABELS = (HUMAN, SYNTHETIC)

#: RNN input capacity in timesteps; longer feature sequences are truncated,
#: shorter ones zero-padded.
SEQ_CAPACITY = 400

#: Minimum allowed channel standard deviation when standardizing.
STD_FLOOR = 1e-8


class Point(NamedTuple):
    x: float
    y: float
    t: float


@dataclass(frozen=True)
class Trajectory:
    """Validated pen-tip sample sequence.

    ``points`` is an (N, 3) float64 array with columns x, y, t.  Instances are
    produced by :func:`validate` (or by synthesizers, which construct already
    valid data) and never mutated afterwards.
    """

    points: np.ndarray

    def __post_init__(self):
        self.points.setflags(write=False)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def t(self) -> np.ndarray:
        return self.points[:, 2]

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def duration(self) -> float:
        return float(self.points[-1, 2] - self.points[0, 2])

    @property
    def mean_rate(self) -> float:
        """Average sampling rate in Hz over the whole trajectory."""
        return (self.n_points - 1) / self.duration

    def translated(self, dx: float = 0.0, dy: float = 0.0, dt: float = 0.0) -> "Trajectory":
        shifted = self.points + np.array([dx, dy, dt], dtype=np.float64)
        return Trajectory(shifted)

    def __len__(self) -> int:
        return self.n_points


@dataclass(frozen=True)
class LabeledSample:
    """A trajectory with its classification target and provenance tag."""

    id: str
    trajectory: Trajectory
    label: str
    source: str
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if not self.source:
            raise ValueError("source must be non-empty")


@dataclass(frozen=True)
class FeatureSequence:
    """Classifier input rows plus a record of how many rows are real.

    ``representation`` is "velocity" (1 channel, non-negative speed) or
    "delta" (3 channels: dx, dy, dt).  ``mask_length`` counts non-padding rows.
    """

    representation: str
    rows: np.ndarray
    mask_length: int

    def __post_init__(self):
        self.rows.setflags(write=False)

    @property
    def width(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]


REPRESENTATION_WIDTHS = {"velocity": 1, "delta": 3}


def validate(points: Iterable[Sequence[float]] | np.ndarray, repair: bool = False) -> Trajectory:
    """Check a raw point sequence and return a Trajectory.

    With ``repair`` on, points whose timestamp does not strictly increase are
    dropped (keep-first policy); with it off any violation raises
    NonMonotonicTime.  All values must be finite and the result must keep at
    least two points.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise TooFewPoints(f"expected an (N, 3) point sequence, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("trajectory contains NaN or Inf")

    t = arr[:, 2]
    increasing = np.diff(t) > 0
    if not increasing.all():
        if not repair:
            bad = int(np.argmin(increasing)) + 1
            raise NonMonotonicTime(f"timestamp at index {bad} does not increase")
        keep = np.zeros(len(arr), dtype=bool)
        keep[0] = True
        last_t = t[0]
        for i in range(1, len(arr)):
            if t[i] > last_t:
                keep[i] = True
                last_t = t[i]
        arr = arr[keep]

    if arr.shape[0] < 2:
        raise TooFewPoints(f"need at least 2 points, got {arr.shape[0]}")
    return Trajectory(arr.copy())


def to_velocity(traj: Trajectory) -> FeatureSequence:
    """Pen-tip speed per step: Euclidean distance over time difference."""
    d = np.diff(traj.points, axis=0)
    speed = np.hypot(d[:, 0], d[:, 1]) / d[:, 2]
    rows = speed[:, np.newaxis]
    return FeatureSequence("velocity", rows, mask_length=rows.shape[0])


def to_deltas(traj: Trajectory) -> FeatureSequence:
    """Consecutive-point offsets (dx, dy, dt); translation invariant."""
    rows = np.diff(traj.points, axis=0)
    return FeatureSequence("delta", rows, mask_length=rows.shape[0])


def to_features(traj: Trajectory, representation: str) -> FeatureSequence:
    if representation == "velocity":
        return to_velocity(traj)
    if representation == "delta":
        return to_deltas(traj)
    raise ValueError(f"unknown representation {representation!r}")


def resample_uniform(
    traj: Trajectory, rate_hz: float, n_steps: int | None = None
) -> Trajectory:
    """Natural-cubic-spline resampling of x(t), y(t) on a uniform grid.

    The grid is t0 + k/rate for k = 0..floor(duration * rate); when the
    duration is an exact multiple of the sample period the original end point
    lands on the grid, otherwise the output ends within one sample period of
    it.  Timestamps are uniform by construction.  ``n_steps`` overrides the
    step count (the spline extrapolates if the grid overruns the input).
    """
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    duration = traj.duration
    if duration < 2.0 / rate_hz:
        raise DegenerateDuration(
            f"duration {duration:.6g} s too short to resample at {rate_hz} Hz"
        )
    if n_steps is None:
        n_steps = int(np.floor(duration * rate_hz + 1e-9))
    ts = traj.t[0] + np.arange(n_steps + 1) / rate_hz

    sx = CubicSpline(traj.t, traj.x, bc_type="natural")
    sy = CubicSpline(traj.t, traj.y, bc_type="natural")
    out = np.column_stack([sx(ts), sy(ts), ts])
    return Trajectory(out)


def pad_or_truncate(seq: FeatureSequence, capacity: int = SEQ_CAPACITY) -> FeatureSequence:
    """Force a feature sequence to exactly ``capacity`` rows.

    Longer sequences keep their first ``capacity`` rows; shorter ones are
    padded with all-zero rows at the end.
    """
    n = len(seq)
    if n >= capacity:
        rows = seq.rows[:capacity].copy()
        return FeatureSequence(seq.representation, rows,
                               mask_length=min(seq.mask_length, capacity))
    rows = np.zeros((capacity, seq.width), dtype=np.float64)
    rows[:n] = seq.rows
    return FeatureSequence(seq.representation, rows, mask_length=min(seq.mask_length, capacity))


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel mean/std fitted on training rows; identity() disables."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean.setflags(write=False)
        self.std.setflags(write=False)

    @classmethod
    def identity(cls, width: int) -> "ChannelStats":
        return cls(np.zeros(width), np.ones(width))

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.mean == 0.0) and np.all(self.std == 1.0))


def fit_standardizer(train_rows: Iterable[np.ndarray] | np.ndarray) -> ChannelStats:
    """Per-channel mean/std over the real (non-padding) rows of the training split.

    ``train_rows`` is either a stacked (M, C) array or an iterable of per-sample
    row arrays.  Stats are fitted on training data only; the std is floored at
    ``STD_FLOOR`` so constant channels map to zero.
    """
    if isinstance(train_rows, np.ndarray):
        stacked = train_rows
    else:
        parts = [np.asarray(r, dtype=np.float64) for r in train_rows]
        stacked = np.vstack(parts) if parts else np.empty((0, 1))
    if stacked.shape[0] < 2:
        raise EmptyTrainingSet("need at least 2 real rows to fit a standardizer")
    mean = stacked.mean(axis=0)
    std = np.maximum(stacked.std(axis=0), STD_FLOOR)
    return ChannelStats(mean, std)


def apply_standardizer(seq: FeatureSequence, stats: ChannelStats) -> FeatureSequence:
    """(v - mean) / std per channel; identity stats return the input unchanged."""
    if stats.is_identity:
        return seq
    rows = (seq.rows - stats.mean) / stats.std
    return FeatureSequence(seq.representation, rows, mask_length=seq.mask_length)
