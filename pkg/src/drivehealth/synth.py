"""Synthetic drive fleets with planted failure-hazard rules.

Every drive draws its feature trajectories and daily failure coin flips from
its own random stream (seed sequence ``(seed, drive_index)``), so drives can
be generated in any order or in parallel with identical output.

A drive fails on day d with the hazard of the first rule whose conditions
all hold for that day's features, or the baseline hazard when none match.
The failure row is the drive's last row.
"""

from __future__ import annotations

import json
import operator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta

import numpy as np

from .errors import InvalidSpec
from .telemetry import KINDS, NORMALIZED, NORMALIZED_MAX, NORMALIZED_MIN, DriveDaySnapshot, SmartKey

PROCESSES = ("constant", "drift", "jump")
_OPS = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge, "==": operator.eq}


@dataclass(frozen=True)
class FeatureProcess:
    """Daily trajectory of one SMART column.

    * ``constant``: always ``value``.
    * ``drift``: ``value + slope * day`` plus iid Gaussian noise of sd ``noise``.
    * ``jump``: ``value`` until a jump (probability ``jump_probability`` per
      day), then a level drawn uniformly from the integers in
      ``[jump_low, jump_high]`` that is kept for the rest of the run.

    Values are rounded to integers and clipped to the SMART range of the kind.
    """

    attr: int
    kind: str
    process: str = "constant"
    value: float = 0.0
    slope: float = 0.0
    noise: float = 0.0
    jump_probability: float = 0.0
    jump_low: int = 1
    jump_high: int = 1

    @property
    def key(self) -> SmartKey:
        return SmartKey(self.attr, self.kind)


@dataclass(frozen=True)
class Condition:
    attr: int
    kind: str
    op: str
    value: float

    @property
    def key(self) -> SmartKey:
        return SmartKey(self.attr, self.kind)

    def holds(self, values: np.ndarray) -> np.ndarray:
        return _OPS[self.op](values, self.value)


@dataclass(frozen=True)
class HazardRule:
    conditions: tuple[Condition, ...]
    hazard: float


@dataclass(frozen=True)
class FleetSpec:
    n_drives: int
    days: int
    features: tuple[FeatureProcess, ...]
    rules: tuple[HazardRule, ...] = ()
    baseline_hazard: float = 0.0
    seed: int = 0
    start_date: date = date(2020, 1, 1)
    model: str = "ST12000NM0007"
    capacity_bytes: int = 12000138625024
    serial_prefix: str = "SYN"

    def validate(self) -> None:
        if self.n_drives < 1 or self.days < 1:
            raise InvalidSpec("n_drives and days must be positive")
        if not 0.0 <= self.baseline_hazard <= 1.0:
            raise InvalidSpec(f"baseline hazard {self.baseline_hazard} outside [0, 1]")
        keys = set()
        for fp in self.features:
            if fp.kind not in KINDS:
                raise InvalidSpec(f"unknown SMART kind {fp.kind!r}")
            if fp.attr < 1:
                raise InvalidSpec(f"attribute id must be positive, got {fp.attr}")
            if fp.process not in PROCESSES:
                raise InvalidSpec(f"unknown process {fp.process!r}")
            if not 0.0 <= fp.jump_probability <= 1.0:
                raise InvalidSpec(f"jump probability {fp.jump_probability} outside [0, 1]")
            if fp.jump_low > fp.jump_high:
                raise InvalidSpec("jump_low exceeds jump_high")
            if fp.noise < 0:
                raise InvalidSpec("noise must be non-negative")
            if fp.key in keys:
                raise InvalidSpec(f"feature {fp.key.column} defined twice")
            keys.add(fp.key)
        for rule in self.rules:
            if not 0.0 <= rule.hazard <= 1.0:
                raise InvalidSpec(f"rule hazard {rule.hazard} outside [0, 1]")
            if not rule.conditions:
                raise InvalidSpec("a rule needs at least one condition")
            for c in rule.conditions:
                if c.key not in keys:
                    raise InvalidSpec(f"rule references ungenerated feature {c.key.column}")
                if c.op not in _OPS:
                    raise InvalidSpec(f"unknown comparison {c.op!r}")

    # -- JSON --

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start_date"] = self.start_date.isoformat()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> FleetSpec:
        try:
            spec = cls(
                n_drives=int(d["n_drives"]),
                days=int(d["days"]),
                features=tuple(FeatureProcess(**f) for f in d["features"]),
                rules=tuple(
                    HazardRule(tuple(Condition(**c) for c in r["conditions"]), float(r["hazard"]))
                    for r in d.get("rules", ())
                ),
                baseline_hazard=float(d.get("baseline_hazard", 0.0)),
                seed=int(d.get("seed", 0)),
                start_date=date.fromisoformat(d.get("start_date", "2020-01-01")),
                model=d.get("model", "ST12000NM0007"),
                capacity_bytes=int(d.get("capacity_bytes", 12000138625024)),
                serial_prefix=d.get("serial_prefix", "SYN"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"malformed fleet spec: {exc}") from None
        spec.validate()
        return spec

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class PlantedTruth:
    rules: tuple[HazardRule, ...]
    baseline_hazard: float
    features: tuple[SmartKey, ...] = field(default=())

    @classmethod
    def from_spec(cls, spec: FleetSpec) -> PlantedTruth:
        keys = sorted({c.key for r in spec.rules for c in r.conditions})
        return cls(spec.rules, spec.baseline_hazard, tuple(keys))

    @property
    def attrs(self) -> list[int]:
        return sorted({k.attr for k in self.features})

    def to_dict(self) -> dict:
        return {
            "baseline_hazard": self.baseline_hazard,
            "features": [k.column for k in self.features],
            "rules": [asdict(r) for r in self.rules],
        }

    def rule_hazard(self, values: dict[SmartKey, np.ndarray]) -> np.ndarray:
        """Daily hazard given feature arrays (first matching rule, else baseline)."""
        n = len(next(iter(values.values()))) if values else 0
        hazard = np.full(n, self.baseline_hazard)
        decided = np.zeros(n, dtype=bool)
        for rule in self.rules:
            match = ~decided
            for c in rule.conditions:
                match &= c.holds(values[c.key])
            hazard[match] = rule.hazard
            decided |= match
        return hazard


def _trajectory(fp: FeatureProcess, days: int, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(days, dtype=np.float64)
    if fp.process == "constant":
        v = np.full(days, float(fp.value))
    elif fp.process == "drift":
        v = fp.value + fp.slope * t + fp.noise * rng.standard_normal(days)
    else:
        flips = rng.random(days) < fp.jump_probability
        level = float(rng.integers(fp.jump_low, fp.jump_high + 1))
        jumped = np.cumsum(flips) > 0
        v = np.where(jumped, level, float(fp.value))
    v = np.rint(v)
    if fp.kind == NORMALIZED:
        return np.clip(v, NORMALIZED_MIN, NORMALIZED_MAX)
    return np.maximum(v, 0.0)


def _drive(spec: FleetSpec, truth: PlantedTruth, i: int) -> list[DriveDaySnapshot]:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=spec.seed, spawn_key=(i,)))
    values = {fp.key: _trajectory(fp, spec.days, rng) for fp in spec.features}
    hazard = truth.rule_hazard(values) if values else np.full(spec.days, spec.baseline_hazard)
    fails = np.flatnonzero(rng.random(spec.days) < hazard)
    last = int(fails[0]) if fails.size else spec.days - 1
    serial = f"{spec.serial_prefix}{i:06d}"
    cols = [(k, v.astype(np.int64).tolist()) for k, v in values.items()]
    return [
        DriveDaySnapshot(
            spec.start_date + timedelta(days=d), serial, spec.model, spec.capacity_bytes,
            bool(fails.size) and d == last, {k: v[d] for k, v in cols},
        )
        for d in range(last + 1)
    ]


def generate_fleet(spec: FleetSpec, n_jobs: int = 1) -> tuple[list[DriveDaySnapshot], PlantedTruth]:
    """Simulate every drive of ``spec``; rows come out drive by drive, day by day."""
    spec.validate()
    truth = PlantedTruth.from_spec(spec)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            per_drive = list(pool.map(lambda i: _drive(spec, truth, i), range(spec.n_drives)))
    else:
        per_drive = [_drive(spec, truth, i) for i in range(spec.n_drives)]
    return [s for rows in per_drive for s in rows], truth


REFERENCE_BASELINE_HAZARD = 0.001
REFERENCE_HAZARD_RATIO = 20.0


def reference_rule_spec(seed: int, n_drives: int = 1000, days: int = 90) -> FleetSpec:
    """Fleet whose hazard rises 20x once sectors get reallocated (5 raw >= 1)
    while uncorrectable errors show up (187 normalized < 100); 3 normalized is noise."""
    return FleetSpec(
        n_drives=n_drives,
        days=days,
        features=(
            FeatureProcess(5, "raw", "jump", value=0, jump_probability=0.002, jump_low=1, jump_high=40),
            FeatureProcess(187, "normalized", "jump", value=100, jump_probability=0.002, jump_low=90, jump_high=99),
            FeatureProcess(3, "normalized", "drift", value=95, noise=2.0),
        ),
        rules=(
            HazardRule(
                (Condition(5, "raw", ">=", 1), Condition(187, "normalized", "<", 100)),
                REFERENCE_HAZARD_RATIO * REFERENCE_BASELINE_HAZARD,
            ),
        ),
        baseline_hazard=REFERENCE_BASELINE_HAZARD,
        seed=seed,
    )


def reference_rule_fleet(seed: int, n_drives: int = 1000, days: int = 90) -> tuple[list[DriveDaySnapshot], PlantedTruth]:
    return generate_fleet(reference_rule_spec(seed, n_drives, days))
