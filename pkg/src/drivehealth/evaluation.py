"""Held-out scoring: ROC/AUC, confusion metrics, threshold choice, Table-2 style reports.

A sample is predicted positive iff ``score > threshold`` (strict), so a
threshold of 1.0 predicts nothing positive and ``-inf`` predicts everything.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from datetime import date

import numpy as np
from scipy.stats import rankdata

from .dataset import ClassSample, SurvivalSample, feature_matrix, horizon_label
from .errors import DegenerateLabels, HorizonExceedsWindow
from .survival import survival_at
from .trees.model import CLASSIFICATION, SURVIVAL, Tree, apply

DEFAULT_THRESHOLD = 0.05
DEFAULT_HORIZONS = (30, 60, 90)
OCT = "OCT"
OST = "OST"
LABEL_POLICY = "labels re-derived per horizon from event/duration; censored-before-horizon samples dropped"

_J_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ScoredSet:
    scores: np.ndarray
    labels: np.ndarray
    serials: tuple[str, ...] = ()
    dates: tuple[date, ...] = ()

    def __post_init__(self) -> None:
        s = np.asarray(self.scores, dtype=np.float64)
        y = np.asarray(self.labels, dtype=bool)
        if s.ndim != 1 or y.shape != s.shape:
            raise ValueError("scores and labels must be 1-d arrays of equal length")
        if s.size and not (np.all(np.isfinite(s)) and s.min() >= 0.0 and s.max() <= 1.0):
            raise ValueError("scores must lie in [0, 1]")
        for name in ("serials", "dates"):
            extra = getattr(self, name)
            if extra and len(extra) != s.size:
                raise ValueError(f"{name} must match the number of scores")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return int(self.scores.size)

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @property
    def n_neg(self) -> int:
        return self.n - self.n_pos

    def require_both_classes(self) -> None:
        if self.n_pos == 0 or self.n_neg == 0:
            raise DegenerateLabels(f"need both classes, got {self.n_pos} positive and {self.n_neg} negative")


@dataclass(frozen=True)
class RocPoint:
    false_alarm_rate: float
    sensitivity: float
    threshold: float
    tp: int
    fp: int


def _roc_counts(scored: ScoredSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(thresholds, TP, FP) at each distinct score (descending) and at -inf."""
    order = np.argsort(-scored.scores, kind="stable")
    s, y = scored.scores[order], scored.labels[order]
    tp = np.cumsum(y)
    fp = np.cumsum(~y)
    # last index of each run of equal scores: everything above the next lower score
    last = np.flatnonzero(np.append(s[1:] != s[:-1], True))
    distinct = s[last]
    # threshold = a distinct score t predicts positives exactly for scores > t
    thresholds = np.append(distinct, -np.inf)
    tps = np.concatenate(([0], tp[last]))
    fps = np.concatenate(([0], fp[last]))
    return thresholds, tps.astype(np.int64), fps.astype(np.int64)


def roc_curve(scored: ScoredSet) -> list[RocPoint]:
    """ROC points ordered from (0, 0) at the highest threshold to (1, 1) at -inf."""
    scored.require_both_classes()
    thresholds, tps, fps = _roc_counts(scored)
    P, N = scored.n_pos, scored.n_neg
    return [RocPoint(int(f) / N, int(t) / P, float(th), int(t), int(f)) for th, t, f in zip(thresholds, tps, fps)]


def trapezoid_auc(points: Sequence[RocPoint]) -> float:
    """Area under the ROC polyline, summed in integer counts and divided once."""
    twice_area = 0
    for a, b in zip(points[:-1], points[1:]):
        twice_area += (b.fp - a.fp) * (a.tp + b.tp)
    last = points[-1]
    P, N = last.tp, last.fp
    return twice_area / (2 * P * N)


def auc(scored: ScoredSet) -> float:
    """Mann-Whitney estimate: P(score_pos > score_neg) + 0.5 P(tie)."""
    scored.require_both_classes()
    ranks2 = np.rint(2 * rankdata(scored.scores)).astype(np.int64)
    P, N = scored.n_pos, scored.n_neg
    u2 = int(ranks2[scored.labels].sum()) - P * (P + 1)
    return u2 / (2 * P * N)


@dataclass(frozen=True)
class Confusion:
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n if self.n else math.nan

    @property
    def sensitivity(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else math.nan

    @property
    def false_alarm_rate(self) -> float:
        d = self.fp + self.tn
        return self.fp / d if d else math.nan


def confusion_at(scored: ScoredSet, threshold: float) -> Confusion:
    pred = scored.scores > threshold
    y = scored.labels
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    fn = int(np.sum(~pred & y))
    tn = int(np.sum(~pred & ~y))
    return Confusion(float(threshold), tp, fp, tn, fn)


def select_threshold(points: Sequence[RocPoint]) -> float:
    """Threshold maximizing Youden's J; ties go to lower false alarm, then higher threshold."""
    best = max(p.sensitivity - p.false_alarm_rate for p in points)
    tied = [p for p in points if p.sensitivity - p.false_alarm_rate >= best - _J_TOL]
    return min(tied, key=lambda p: (p.false_alarm_rate, -p.threshold)).threshold


# -- scoring trees -----------------------------------------------------------


def _leaf_values(tree: Tree, fn) -> dict[int, float]:
    return {i: fn(n.payload) for i, n, _ in tree.nodes() if n.is_leaf}


def _lookup(tree: Tree, X: np.ndarray, values: dict[int, float]) -> np.ndarray:
    ids = apply(tree, X) if X.shape[0] else np.zeros(0, dtype=np.int64)
    return np.array([values[i] for i in ids], dtype=np.float64)


def _matrix(tree: Tree, samples: Sequence) -> np.ndarray:
    return feature_matrix(samples) if samples else np.zeros((0, tree.n_features))


def check_horizon(tree: Tree, horizon_days: int) -> None:
    if tree.window_days is not None and horizon_days > tree.window_days:
        raise HorizonExceedsWindow(f"horizon {horizon_days} exceeds the {tree.window_days}-day training window")


def failure_scores(tree: Tree, X: np.ndarray, horizon_days: int) -> np.ndarray:
    """1 - S_leaf(horizon) for every row of ``X``, with no label filtering."""
    check_horizon(tree, horizon_days)
    values = _leaf_values(tree, lambda p: 1.0 - survival_at(p.km, horizon_days))
    return np.clip(_lookup(tree, np.asarray(X, dtype=np.float64), values), 0.0, 1.0)


def survival_scores_at_horizon(tree: Tree, samples: Sequence[SurvivalSample], horizon_days: int) -> ScoredSet:
    """Score = 1 - S_leaf(horizon); labels re-derived for the horizon."""
    if tree.kind != SURVIVAL:
        raise ValueError("survival scores need a survival tree")
    check_horizon(tree, horizon_days)
    kept = []
    labels = []
    for s in samples:
        label = horizon_label(s.duration_days, s.event, horizon_days)
        if label is not None:
            kept.append(s)
            labels.append(label)
    values = _leaf_values(tree, lambda p: 1.0 - survival_at(p.km, horizon_days))
    scores = np.clip(_lookup(tree, _matrix(tree, kept), values), 0.0, 1.0)
    return ScoredSet(scores, np.array(labels, dtype=bool), tuple(s.serial for s in kept), tuple(s.snapshot_date for s in kept))


def classification_scores(tree: Tree, samples: Sequence[ClassSample]) -> ScoredSet:
    if tree.kind != CLASSIFICATION:
        raise ValueError("classification scores need a classification tree")
    values = _leaf_values(tree, lambda p: p.probability)
    scores = _lookup(tree, _matrix(tree, samples), values)
    return ScoredSet(scores, np.array([s.label for s in samples], dtype=bool),
                     tuple(s.serial for s in samples), tuple(s.snapshot_date for s in samples))


def classification_scores_at_horizon(tree: Tree, samples: Sequence[SurvivalSample], horizon_days: int) -> ScoredSet:
    """Classification-tree scores against labels derived from survival samples."""
    kept = []
    for s in samples:
        label = horizon_label(s.duration_days, s.event, horizon_days)
        if label is not None:
            kept.append(ClassSample(s.features, label, s.serial, s.snapshot_date))
    return classification_scores(tree, kept)


# -- reports -----------------------------------------------------------------


@dataclass(frozen=True)
class EvalRow:
    model: str
    horizon_days: int
    auc: float
    accuracy: float
    sensitivity: float
    false_alarm_rate: float
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    youden_threshold: float

    @property
    def column(self) -> str:
        return f"{self.model}-{self.horizon_days}"


def eval_row(model: str, horizon_days: int, scored: ScoredSet, threshold: float = DEFAULT_THRESHOLD) -> EvalRow:
    try:
        points = roc_curve(scored)
    except DegenerateLabels as exc:
        raise DegenerateLabels(f"{model}-{horizon_days}: {exc}") from None
    c = confusion_at(scored, threshold)
    return EvalRow(model, horizon_days, auc(scored), c.accuracy, c.sensitivity, c.false_alarm_rate,
                   float(threshold), c.tp, c.fp, c.tn, c.fn, select_threshold(points))


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[EvalRow, ...]
    threshold: float = DEFAULT_THRESHOLD
    label_policy: str = LABEL_POLICY
    roc: dict[str, list[RocPoint]] = field(default_factory=dict, compare=False)

    def row(self, column: str) -> EvalRow:
        for r in self.rows:
            if r.column == column:
                return r
        raise KeyError(column)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "label_policy": self.label_policy,
            "rows": [{k: _json_num(v) for k, v in asdict(r).items()} for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(EvalRow.__dataclass_fields__)
        w.writerow(names)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, k)) for k in names])
        return buf.getvalue()

    def summary_csv(self) -> str:
        """Metrics as rows, one column per (model, horizon), at the report threshold."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", *(r.column for r in self.rows)])
        for label, attr in SUMMARY_METRICS:
            w.writerow([label, *(f"{getattr(r, attr):.3f}" for r in self.rows)])
        return buf.getvalue()

    def summary_text(self) -> str:
        header = ["Metric", *(r.column for r in self.rows)]
        body = [[label, *(f"{getattr(r, attr):.3f}" for r in self.rows)] for label, attr in SUMMARY_METRICS]
        widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
        lines = [f"# threshold {self.threshold:g}; {self.label_policy}"]
        for row in [header, *body]:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        return "\n".join(lines) + "\n"


SUMMARY_METRICS = (
    ("AUC", "auc"),
    ("Accuracy", "accuracy"),
    ("Sensitivity", "sensitivity"),
    ("False Alarm Rate", "false_alarm_rate"),
)


def _json_num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def roc_csv(points: Sequence[RocPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "far", "sensitivity"])
    for p in points:
        w.writerow([_fmt(p.threshold), _fmt(p.false_alarm_rate), _fmt(p.sensitivity)])
    return buf.getvalue()


def evaluate_table(
    class_tree: Tree | None,
    survival_tree: Tree | None,
    samples: Sequence[SurvivalSample],
    horizons: Sequence[int] = DEFAULT_HORIZONS,
    threshold: float = DEFAULT_THRESHOLD,
    class_horizon: int = 30,
) -> EvalReport:
    """OCT at ``class_horizon`` then OST at every horizon, all on the same test samples."""
    rows: list[EvalRow] = []
    roc: dict[str, list[RocPoint]] = {}
    if survival_tree is not None:
        for h in horizons:
            check_horizon(survival_tree, h)
    if class_tree is not None:
        scored = classification_scores_at_horizon(class_tree, samples, class_horizon)
        rows.append(eval_row(OCT, class_horizon, scored, threshold))
        roc[rows[-1].column] = roc_curve(scored)
    if survival_tree is not None:
        for h in horizons:
            scored = survival_scores_at_horizon(survival_tree, samples, h)
            rows.append(eval_row(OST, h, scored, threshold))
            roc[rows[-1].column] = roc_curve(scored)
    return EvalReport(tuple(rows), float(threshold), LABEL_POLICY, roc)
