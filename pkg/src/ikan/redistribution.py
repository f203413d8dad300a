"""Feature redistribution: per-task min-max normalization into [0, 1]
followed by an affine shift into a task-specific sub-interval of the
classifier grid range.

With total task count n and spacing control beta, task t's normalized
features land in [t/n, t/n + 1/(n + beta)]; for beta > 0 these intervals
are pairwise disjoint, which is what keeps tasks from sharing spline
coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDataError, TaskRangeError


@dataclass(frozen=True)
class Normalizer:
    """Per-feature min/max recorded on a task's training features."""

    feature_min: np.ndarray
    feature_max: np.ndarray

    @property
    def n_features(self) -> int:
        return self.feature_min.shape[0]


def fit_normalizer(features: np.ndarray) -> Normalizer:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1:
        raise EmptyDataError(f"cannot fit normalizer on shape {features.shape}")
    return Normalizer(features.min(axis=0), features.max(axis=0))


def normalize(norm: Normalizer, features: np.ndarray) -> np.ndarray:
    """Min-max scale into [0, 1], clamping values beyond the fitted extrema.

    Constant features (min == max) map to 0.5.
    """
    span = norm.feature_max - norm.feature_min
    constant = span == 0.0
    safe_span = np.where(constant, 1.0, span)
    scaled = (features - norm.feature_min) / safe_span
    scaled = np.where(constant, 0.5, scaled)
    return np.clip(scaled, 0.0, 1.0)


@dataclass(frozen=True)
class RedistributionConfig:
    n_tasks: int
    beta: float = 4.0

    def __post_init__(self) -> None:
        if self.n_tasks < 1:
            raise TaskRangeError(f"n_tasks must be >= 1, got {self.n_tasks}")
        if self.beta < 0:
            raise TaskRangeError(f"beta must be >= 0, got {self.beta}")

    def _check(self, task_id: int) -> None:
        if not 0 <= task_id < self.n_tasks:
            raise TaskRangeError(
                f"task id {task_id} outside [0, {self.n_tasks})"
            )


def redistribute(cfg: RedistributionConfig, task_id: int, f_norm: np.ndarray) -> np.ndarray:
    """Shift normalized features into task ``task_id``'s sub-interval."""
    cfg._check(task_id)
    return task_id / cfg.n_tasks + np.asarray(f_norm, dtype=np.float64) / (cfg.n_tasks + cfg.beta)


def task_interval(cfg: RedistributionConfig, task_id: int) -> tuple[float, float]:
    """Exact image of [0, 1] under the redistribution map for one task."""
    cfg._check(task_id)
    lo = task_id / cfg.n_tasks
    return lo, lo + 1.0 / (cfg.n_tasks + cfg.beta)
