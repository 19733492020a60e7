"""Column-oriented training sets consumed by the tree learners."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..dataset import ClassSample, SurvivalSample, feature_matrix
from .model import CLASSIFICATION, SURVIVAL


@dataclass(frozen=True, eq=False)
class ClassificationData:
    X: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = ()

    kind = CLASSIFICATION

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be 2-d")
        y = np.asarray(self.labels, dtype=bool)
        if y.shape != (X.shape[0],):
            raise ValueError("labels must have one entry per row of X")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", y)
        if not self.feature_names:
            object.__setattr__(self, "feature_names", tuple(f"x{i}" for i in range(X.shape[1])))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @classmethod
    def from_samples(cls, samples: Sequence[ClassSample], feature_names: Sequence[str] = ()) -> ClassificationData:
        return cls(feature_matrix(samples), np.array([s.label for s in samples], dtype=bool), tuple(feature_names))


@dataclass(frozen=True, eq=False)
class SurvivalData:
    X: np.ndarray
    durations: np.ndarray
    events: np.ndarray
    feature_names: tuple[str, ...] = ()

    kind = SURVIVAL

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be 2-d")
        t = np.asarray(self.durations, dtype=np.int64)
        e = np.asarray(self.events, dtype=bool)
        if t.shape != (X.shape[0],) or e.shape != t.shape:
            raise ValueError("durations/events must have one entry per row of X")
        if t.size and t.min() < 0:
            raise ValueError("durations must be non-negative")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "durations", t)
        object.__setattr__(self, "events", e)
        if not self.feature_names:
            object.__setattr__(self, "feature_names", tuple(f"x{i}" for i in range(X.shape[1])))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @classmethod
    def from_samples(cls, samples: Sequence[SurvivalSample], feature_names: Sequence[str] = ()) -> SurvivalData:
        return cls(
            feature_matrix(samples),
            np.array([s.duration_days for s in samples], dtype=np.int64),
            np.array([s.event for s in samples], dtype=bool),
            tuple(feature_names),
        )


LearningData = ClassificationData | SurvivalData
