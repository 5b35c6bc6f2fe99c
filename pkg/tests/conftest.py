"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from handproof.trajectory import HUMAN, SYNTHETIC, LabeledSample, Trajectory

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("suite")


def line_trajectory(n: int = 11, vx: float = 1.0, vy: float = 0.0,
                    dt: float = 0.1, t0: float = 0.0) -> Trajectory:
    """Constant-velocity straight line; handy analytic ground truth."""
    t = t0 + np.arange(n) * dt
    return Trajectory(np.column_stack([vx * (t - t0), vy * (t - t0), t]))


def toy_sample(index: int, label: str, vx: float, vy: float,
               n: int = 401, dt: float = 0.01) -> LabeledSample:
    """Full-capacity constant-velocity sample for classifier toy tasks."""
    t = np.arange(n) * dt
    traj = Trajectory(np.column_stack([vx * t, vy * t, t]))
    return LabeledSample(f"toy-{label}-{index}", traj, label, "toy")


def toy_separable(n_per_class: int, rng: np.random.Generator,
                  n_points: int = 401):
    """The separable toy task: stationary pen vs constant velocity."""
    humans = [toy_sample(i, HUMAN, 0.0, 0.0, n_points) for i in range(n_per_class)]
    synths = [
        toy_sample(i, SYNTHETIC, float(rng.uniform(0.5, 1.5)),
                   float(rng.uniform(0.5, 1.5)), n_points)
        for i in range(n_per_class)
    ]
    return humans + synths


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
