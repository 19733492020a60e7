"""Labeled learning datasets built from drive-day snapshots.

Every drive-day inside the requested window becomes one sample. Survival
samples carry the days until failure (event) or until the drive's last
observed day (censored); classification samples carry a fixed-horizon
failure label.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .errors import DegenerateSplit, DuplicateSnapshot, InvalidHorizon, InvalidWindow, NegativeDuration
from .telemetry import KINDS, DriveDaySnapshot, SmartKey

logger = logging.getLogger(__name__)

# SMART ids that count up over the drive's lifetime and so mostly encode age.
CUMULATIVE_ATTRS = frozenset({4, 9, 12, 192, 193, 240, 241, 242})


@dataclass(frozen=True)
class FeatureCatalog:
    entries: tuple[SmartKey, ...]
    excluded: frozenset[int] = CUMULATIVE_ATTRS

    def __post_init__(self) -> None:
        entries = tuple(SmartKey(int(a), k) for a, k in self.entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "excluded", frozenset(int(a) for a in self.excluded))
        if len(set(entries)) != len(entries):
            raise ValueError("catalog entries must be unique")
        clash = sorted({k.attr for k in entries} & self.excluded)
        if clash:
            raise ValueError(f"catalog contains excluded attribute ids {clash}")
        for key in entries:
            if key.kind not in KINDS:
                raise ValueError(f"unknown SMART kind {key.kind!r}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> list[str]:
        return [k.column for k in self.entries]

    def to_dict(self) -> dict:
        return {
            "entries": [[k.attr, k.kind] for k in self.entries],
            "excluded": sorted(self.excluded),
        }

    @classmethod
    def from_dict(cls, d: dict) -> FeatureCatalog:
        return cls(tuple(SmartKey(int(a), k) for a, k in d["entries"]), frozenset(d["excluded"]))

    @classmethod
    def from_names(cls, names: Iterable[str], excluded: Iterable[int] = CUMULATIVE_ATTRS) -> FeatureCatalog:
        return cls(tuple(SmartKey.parse(n) for n in names), frozenset(excluded))


def default_catalog(attr_ids: Iterable[int], excluded: Iterable[int] = CUMULATIVE_ATTRS) -> FeatureCatalog:
    """Raw and normalized features for every observed id, minus cumulative counters."""
    excluded = frozenset(excluded)
    kept = sorted({int(a) for a in attr_ids} - excluded)
    if not kept:
        logger.warning("every observed SMART attribute is excluded; the catalog is empty")
    entries = tuple(SmartKey(a, kind) for a in kept for kind in KINDS)
    return FeatureCatalog(entries, excluded)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Dense feature values; masked (missing) entries hold NaN."""

    values: np.ndarray

    @property
    def mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return np.array_equal(self.values, other.values, equal_nan=True)


def featurize(snapshot: DriveDaySnapshot, catalog: FeatureCatalog) -> FeatureVector:
    get = snapshot.smart_values.get
    values = np.array([get(k, math.nan) for k in catalog.entries], dtype=np.float64)
    return FeatureVector(values)


@dataclass(frozen=True)
class SurvivalSample:
    features: FeatureVector
    duration_days: int
    event: bool
    serial: str
    snapshot_date: date


@dataclass(frozen=True)
class ClassSample:
    features: FeatureVector
    label: bool
    serial: str
    snapshot_date: date


@dataclass
class DriveTimeline:
    serial: str
    snapshots: list[DriveDaySnapshot] = field(default_factory=list)
    failure_day: date | None = None

    @property
    def last_day(self) -> date:
        return self.snapshots[-1].date


def build_timelines(snapshots: Iterable[DriveDaySnapshot]) -> list[DriveTimeline]:
    """Group snapshots per serial, sorted by date; the first failed day is the failure day."""
    by_serial: dict[str, DriveTimeline] = {}
    for s in snapshots:
        tl = by_serial.get(s.serial)
        if tl is None:
            tl = by_serial[s.serial] = DriveTimeline(s.serial)
        tl.snapshots.append(s)
    out = []
    for serial in sorted(by_serial):
        tl = by_serial[serial]
        tl.snapshots.sort(key=lambda s: s.date)
        for a, b in zip(tl.snapshots, tl.snapshots[1:]):
            if a.date == b.date:
                raise DuplicateSnapshot(f"drive {serial} has two rows for {a.date}")
        failed = [s.date for s in tl.snapshots if s.failed]
        tl.failure_day = failed[0] if failed else None
        out.append(tl)
    return out


def _check_window(window_start: date, window_end: date) -> None:
    if window_start > window_end:
        raise InvalidWindow(f"window start {window_start} is after window end {window_end}")


def _timelines(snapshots) -> list[DriveTimeline]:
    if isinstance(snapshots, list) and snapshots and isinstance(snapshots[0], DriveTimeline):
        return snapshots
    return build_timelines(snapshots)


def build_survival_dataset(
    snapshots: Iterable[DriveDaySnapshot] | list[DriveTimeline],
    window_start: date,
    window_end: date,
    catalog: FeatureCatalog,
    failing_only: bool = False,
) -> list[SurvivalSample]:
    """One sample per in-window snapshot, ordered by (serial, date).

    Failing drives yield events with duration ``failure_day - snapshot_date``;
    other drives are censored at their last observed day, not at the window
    end. ``failing_only`` drops never-failing drives entirely.
    """
    _check_window(window_start, window_end)
    samples = []
    for tl in _timelines(snapshots):
        if failing_only and tl.failure_day is None:
            continue
        anchor = tl.failure_day if tl.failure_day is not None else tl.last_day
        event = tl.failure_day is not None
        for s in tl.snapshots:
            if not window_start <= s.date <= window_end:
                continue
            duration = (anchor - s.date).days
            if duration < 0:
                raise NegativeDuration(f"drive {tl.serial} reports data on {s.date} after failing on {anchor}")
            samples.append(SurvivalSample(featurize(s, catalog), duration, event, tl.serial, s.date))
    return samples


def horizon_label(duration_days: int, event: bool, horizon_days: int) -> bool | None:
    """Failure-within-horizon label, or None when censoring hides the answer."""
    if event and duration_days <= horizon_days:
        return True
    if duration_days >= horizon_days:
        return False
    return None


def build_classification_dataset(
    snapshots: Iterable[DriveDaySnapshot] | list[DriveTimeline],
    window_start: date,
    window_end: date,
    horizon_days: int,
    catalog: FeatureCatalog,
) -> list[ClassSample]:
    """Label each in-window snapshot with failure within ``horizon_days``.

    Snapshots of never-failing drives whose horizon runs past the last
    observed day are dropped, never labeled negative.
    """
    if int(horizon_days) != horizon_days or horizon_days < 1:
        raise InvalidHorizon(f"horizon must be a positive whole number of days, got {horizon_days}")
    survival = build_survival_dataset(snapshots, window_start, window_end, catalog)
    out = []
    for s in survival:
        label = horizon_label(s.duration_days, s.event, horizon_days)
        if label is not None:
            out.append(ClassSample(s.features, label, s.serial, s.snapshot_date))
    return out


def split_by_serial(samples: Sequence, test_fraction: float = 0.3, seed: int = 0) -> tuple[list, list]:
    """Partition samples so that each serial lands wholly in train or test.

    The test side receives ``round(test_fraction * n_serials)`` serials
    (at least one, at most all but one). Input order is preserved on both sides.
    """
    if not samples:
        raise DegenerateSplit("cannot split an empty sample list")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    serials = sorted({s.serial for s in samples})
    if len(serials) < 2:
        raise DegenerateSplit(f"need at least 2 distinct serials, found {len(serials)}")
    n_test = min(max(int(math.floor(test_fraction * len(serials) + 0.5)), 1), len(serials) - 1)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(serials))
    test_serials = {serials[i] for i in order[:n_test]}
    train = [s for s in samples if s.serial not in test_serials]
    test = [s for s in samples if s.serial in test_serials]
    return train, test


def feature_matrix(samples: Sequence) -> np.ndarray:
    if not samples:
        return np.zeros((0, 0))
    return np.vstack([s.features.values for s in samples])


# -- cache files -------------------------------------------------------------

SURVIVAL = "survival"
CLASSIFY = "classify"


@dataclass
class DatasetMeta:
    """Sidecar describing how a cached dataset was built."""

    mode: str
    catalog: FeatureCatalog
    window_start: date
    window_end: date
    horizon_days: int | None = None
    failing_only: bool = False
    test_fraction: float | None = None
    seed: int | None = None
    part: str = "all"
    n_samples: int = 0
    source: dict = field(default_factory=dict)

    @property
    def window_days(self) -> int:
        return (self.window_end - self.window_start).days + 1

    def to_dict(self) -> dict:
        return {
            "format": "drivehealth.dataset",
            "version": 1,
            "mode": self.mode,
            "catalog": self.catalog.to_dict(),
            "window_start": self.window_start.isoformat(),
            "window_end": self.window_end.isoformat(),
            "horizon_days": self.horizon_days,
            "failing_only": self.failing_only,
            "test_fraction": self.test_fraction,
            "seed": self.seed,
            "part": self.part,
            "n_samples": self.n_samples,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> DatasetMeta:
        return cls(
            mode=d["mode"],
            catalog=FeatureCatalog.from_dict(d["catalog"]),
            window_start=date.fromisoformat(d["window_start"]),
            window_end=date.fromisoformat(d["window_end"]),
            horizon_days=d.get("horizon_days"),
            failing_only=bool(d.get("failing_only", False)),
            test_fraction=d.get("test_fraction"),
            seed=d.get("seed"),
            part=d.get("part", "all"),
            n_samples=int(d.get("n_samples", 0)),
            source=d.get("source", {}),
        )


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _fmt(v: float) -> str:
    if math.isnan(v):
        return ""
    return str(int(v)) if v.is_integer() and abs(v) < 2**53 else repr(v)


def format_samples(samples: Sequence, catalog: FeatureCatalog, mode: str) -> list[list[str]]:
    if mode == SURVIVAL:
        rows = [["serial", "snapshot_date", "duration_days", "event", *catalog.names]]
        for s in samples:
            rows.append([s.serial, s.snapshot_date.isoformat(), str(s.duration_days), "1" if s.event else "0",
                         *(_fmt(v) for v in s.features.values.tolist())])
    else:
        rows = [["serial", "snapshot_date", "label", *catalog.names]]
        for s in samples:
            rows.append([s.serial, s.snapshot_date.isoformat(), "1" if s.label else "0",
                         *(_fmt(v) for v in s.features.values.tolist())])
    return rows


def parse_samples(rows: Iterable[list[str]], mode: str) -> list:
    it = iter(rows)
    header = next(it)
    n_fixed = 4 if mode == SURVIVAL else 3
    expected = ["serial", "snapshot_date", "duration_days", "event"] if mode == SURVIVAL else ["serial", "snapshot_date", "label"]
    if header[:n_fixed] != expected:
        raise ValueError(f"dataset header does not match mode {mode!r}: {header[:n_fixed]}")
    out = []
    for row in it:
        if not row:
            continue
        values = np.array([float(c) if c else math.nan for c in row[n_fixed:]], dtype=np.float64)
        fv = FeatureVector(values)
        day = date.fromisoformat(row[1])
        if mode == SURVIVAL:
            out.append(SurvivalSample(fv, int(row[2]), row[3] == "1", row[0], day))
        else:
            out.append(ClassSample(fv, row[2] == "1", row[0], day))
    return out


def write_dataset(path: str | Path, samples: Sequence, meta: DatasetMeta) -> None:
    meta.n_samples = len(samples)
    rows = format_samples(samples, meta.catalog, meta.mode)
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    atomic_write_text(path, buf.getvalue())
    atomic_write_text(sidecar_path(path), json.dumps(meta.to_dict(), indent=2, sort_keys=True) + "\n")


def read_dataset(path: str | Path) -> tuple[list, DatasetMeta]:
    meta = DatasetMeta.from_dict(json.loads(sidecar_path(path).read_text(encoding="utf-8")))
    with open(path, encoding="utf-8", newline="") as fh:
        samples = parse_samples(csv.reader(fh), meta.mode)
    return samples, meta
