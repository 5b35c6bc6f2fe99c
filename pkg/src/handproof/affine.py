"""Affine forgery baseline: geometric and temporal distortions of real input.

This synthesizer mimics a forger tracing a genuine trajectory: the path is
split into components at near-stops, each component is warped by a small
sinusoid normal to the path, the whole movement is stretched or compressed in
time and resampled on a perfectly regular clock, components are nudged apart,
and slant/skew shears finish the job.  The output looks plausible spatially
but carries the machine-regular timing a verifier can learn to spot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TooFewPoints
from .lognormal import smooth_speed
from .trajectory import LabeledSample, SYNTHETIC, Trajectory, resample_uniform, validate

#: Output sampling rate of the synthesizer (Hz).
RESAMPLE_RATE_HZ = 100.0

#: A speed minimum splits components when it falls below this fraction of the
#: mean speed.
SEGMENT_SPEED_FRACTION = 0.25


@dataclass(frozen=True)
class AffineParams:
    """Distortion magnitudes; every field is a maximum, drawn per sample.

    sin_amplitude and displacement_frac are fractions of the component
    bounding-box diagonal; duration_jitter is the maximum relative duration
    change; sin_periods is the number of warp cycles per component; the shear
    angles are maxima in degrees.
    """

    sin_amplitude: float = 0.02
    sin_periods: float = 1.0
    duration_jitter: float = 0.10
    displacement_frac: float = 0.10
    slant_deg: float = 6.0
    skew_deg: float = 3.0

    def __post_init__(self):
        for name in ("sin_amplitude", "duration_jitter", "displacement_frac"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 <= value <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if not (math.isfinite(self.sin_periods) and self.sin_periods >= 0.0):
            raise ValueError(f"sin_periods must be >= 0, got {self.sin_periods}")
        for name in ("slant_deg", "skew_deg"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 <= value <= 30.0):
                raise ValueError(f"{name} must be in [0, 30] degrees, got {value}")


def segment_components(
    traj: Trajectory,
    speed_fraction: float = SEGMENT_SPEED_FRACTION,
) -> list[tuple[int, int]]:
    """Split a trajectory at near-stops of the pen.

    Returns half-open index ranges that partition [0, n_points).  A split is
    placed at every interior local minimum of the smoothed speed profile that
    falls below ``speed_fraction`` of the mean speed; a trajectory without
    qualifying minima is one component.
    """
    n = traj.n_points
    if n < 4:
        return [(0, n)]
    d = np.diff(traj.points, axis=0)
    speed = np.hypot(d[:, 0], d[:, 1]) / d[:, 2]
    smoothed = smooth_speed(speed)
    threshold = speed_fraction * float(np.mean(smoothed))

    interior = np.arange(1, smoothed.size - 1)
    is_min = (smoothed[interior] < smoothed[interior - 1]) & \
             (smoothed[interior] <= smoothed[interior + 1]) & \
             (smoothed[interior] < threshold)
    boundaries = []
    for k in interior[is_min]:
        b = int(k) + 1                      # midpoint k sits between samples k, k+1
        # keep every piece at least 2 points long
        prev = boundaries[-1] if boundaries else 0
        if b - prev >= 2 and n - b >= 2:
            boundaries.append(b)
    edges = [0] + boundaries + [n]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def _bbox_diagonal(points: np.ndarray) -> float:
    spans = points[:, :2].max(axis=0) - points[:, :2].min(axis=0)
    return float(np.hypot(spans[0], spans[1]))


def sinusoidal_warp(
    points: np.ndarray,
    params: AffineParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Displace one component along its path normals by a random-phase sine.

    The offset at arc-length fraction s is A * diag * sin(2 pi * periods * s
    + psi) with psi ~ Uniform[0, 2 pi); endpoints are displaced like interior
    points and timestamps are untouched.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] < 2:
        raise TooFewPoints(f"component needs >= 2 points, got {points.shape[0]}")
    psi = rng.uniform(0.0, 2.0 * math.pi)

    seg = np.hypot(np.diff(points[:, 0]), np.diff(points[:, 1]))
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    s = arc / total if total > 0 else np.zeros_like(arc)

    tx = np.gradient(points[:, 0])
    ty = np.gradient(points[:, 1])
    norm = np.hypot(tx, ty)
    ok = norm > 0
    nx = np.where(ok, -ty / np.where(ok, norm, 1.0), 0.0)
    ny = np.where(ok, tx / np.where(ok, norm, 1.0), 0.0)

    magnitude = params.sin_amplitude * _bbox_diagonal(points) * \
        np.sin(2.0 * math.pi * params.sin_periods * s + psi)
    out = points.copy()
    out[:, 0] += magnitude * nx
    out[:, 1] += magnitude * ny
    return out


def slant_skew(traj: Trajectory, slant_rad: float, skew_rad: float) -> Trajectory:
    """Shear about the centroid: slant moves x by y, skew moves y by x."""
    x, y = traj.x, traj.y
    cx, cy = float(np.mean(x)), float(np.mean(y))
    new_x = x + math.tan(slant_rad) * (y - cy)
    new_y = y + math.tan(skew_rad) * (x - cx)
    return Trajectory(np.column_stack([new_x, new_y, traj.t]))


def affine_synthesize(
    traj: Trajectory,
    params: AffineParams | None = None,
    rng: np.random.Generator | None = None,
    sample_id: str = "",
) -> LabeledSample:
    """Full distortion pipeline; returns a synthetic sample tagged "affine".

    Steps, in order (and in rng draw order): segment at near-stops, warp each
    component sinusoidally, scale the duration by Uniform[1-j, 1+j] and
    resample at 100 Hz by cubic spline, displace each component by up to
    displacement_frac of its bounding-box diagonal (offsets accumulate so
    components stay attached to their neighbors), then shear with slant and
    skew drawn uniformly within their bounds.  Output timestamps are exactly
    uniform at 100 Hz starting at 0.
    """
    if params is None:
        params = AffineParams()
    if rng is None:
        rng = np.random.default_rng()

    checked = validate(traj.points)
    points = checked.points
    ranges = segment_components(checked)

    warped = points.copy()
    for a, b in ranges:
        warped[a:b] = sinusoidal_warp(points[a:b], params, rng)

    j = params.duration_jitter
    u = rng.uniform(1.0 - j, 1.0 + j)
    t0 = warped[0, 2]
    duration = warped[-1, 2] - t0
    scaled = warped.copy()
    scaled[:, 2] = (warped[:, 2] - t0) * u
    resampled = resample_uniform(Trajectory(scaled), RESAMPLE_RATE_HZ)
    out = resampled.points.copy()
    if j > 0:
        # the resampled grid quantizes the duration to whole sample periods;
        # clamp the step count so the [1-j, 1+j] duration bound survives it
        # (inputs shorter than about 1/(2*j*rate) cannot always satisfy both,
        # and then the nearest feasible grid is kept)
        k_now = out.shape[0] - 1
        k_lo = math.ceil((1.0 - j) * duration * RESAMPLE_RATE_HZ - 1e-9)
        k_hi = math.floor((1.0 + j) * duration * RESAMPLE_RATE_HZ + 1e-9)
        if k_lo <= k_hi:
            k_new = min(max(k_now, k_lo), k_hi)
            if k_new != k_now:
                dense = resample_uniform(Trajectory(scaled), RESAMPLE_RATE_HZ,
                                         n_steps=k_new)
                out = dense.points.copy()

    # per-component displacement on the resampled grid; boundary times map
    # through the same duration scaling
    n_out = out.shape[0]
    diag_by_range = []
    new_ranges = []
    prev = 0
    for idx, (a, b) in enumerate(ranges):
        if idx == len(ranges) - 1:
            nb = n_out
        else:
            boundary_t = (points[b, 2] - t0) * u
            nb = int(round(boundary_t * RESAMPLE_RATE_HZ))
            nb = min(max(nb, prev + 1), n_out - 1)
        new_ranges.append((prev, nb))
        diag_by_range.append(_bbox_diagonal(points[a:b]))
        prev = nb

    offset = np.zeros(2)
    for (a, b), diag in zip(new_ranges, diag_by_range):
        shift = params.displacement_frac * diag
        offset = offset + rng.uniform(-shift, shift, size=2)
        out[a:b, 0] += offset[0]
        out[a:b, 1] += offset[1]

    slant = rng.uniform(-math.radians(params.slant_deg), math.radians(params.slant_deg))
    skew = rng.uniform(-math.radians(params.skew_deg), math.radians(params.skew_deg))
    sheared = slant_skew(Trajectory(out), slant, skew)

    return LabeledSample(
        id=sample_id or "affine",
        trajectory=sheared,
        label=SYNTHETIC,
        source="affine",
    )
