from __future__ import annotations

import math
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drivehealth.dataset import (
    CLASSIFY,
    CUMULATIVE_ATTRS,
    SURVIVAL,
    DatasetMeta,
    FeatureCatalog,
    SurvivalSample,
    build_classification_dataset,
    build_survival_dataset,
    default_catalog,
    featurize,
    horizon_label,
    read_dataset,
    sidecar_path,
    split_by_serial,
    write_dataset,
)
from drivehealth.errors import DegenerateSplit, DuplicateSnapshot, InvalidHorizon, InvalidWindow, NegativeDuration
from drivehealth.telemetry import SmartKey

from conftest import snap, timeline

D = date.fromisoformat
CAT5 = FeatureCatalog((SmartKey(5, "raw"),))


def test_default_catalog_excludes_cumulative_ids():
    cat = default_catalog({3, 5, 7, 9, 187})
    assert {k.attr for k in cat.entries} == {3, 5, 7, 187}
    assert len(cat) == 2 * 4
    assert set(cat.entries) == {SmartKey(a, k) for a in (3, 5, 7, 187) for k in ("raw", "normalized")}


def test_default_catalog_all_excluded_warns(caplog):
    cat = default_catalog(CUMULATIVE_ATTRS)
    assert len(cat) == 0
    assert "empty" in caplog.text


def test_catalog_rejects_excluded_and_duplicate_entries():
    with pytest.raises(ValueError):
        FeatureCatalog((SmartKey(9, "raw"),))
    with pytest.raises(ValueError):
        FeatureCatalog((SmartKey(5, "raw"), SmartKey(5, "raw")))


def test_catalog_json_round_trip():
    cat = default_catalog({1, 5, 187})
    assert FeatureCatalog.from_dict(cat.to_dict()) == cat


def test_featurize_lookup_and_mask():
    fv = featurize(snap("2020-01-01", smart_5_raw=2), CAT5)
    assert fv.values.tolist() == [2.0] and not fv.mask.any()
    fv = featurize(snap("2020-01-01"), CAT5)
    assert fv.mask.tolist() == [True]


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.sampled_from([1, 3, 5, 7, 187, 197]), st.integers(1, 200), max_size=6),
       st.sets(st.sampled_from([1, 3, 5, 7, 187, 197]), max_size=6))
def test_featurize_matches_naive_lookup(present, catalog_ids):
    s = snap("2020-01-01", **{f"smart_{a}_raw": v for a, v in present.items()})
    cat = default_catalog(catalog_ids)
    fv = featurize(s, cat)
    assert len(fv) == len(cat)
    for value, key in zip(fv.values, cat.entries):
        expected = s.smart_values.get(key)
        assert (math.isnan(value) and expected is None) or value == expected


def test_event_duration_is_days_to_failure():
    snaps = [snap("2020-03-01"), snap("2020-03-15", failed=True)]
    samples = build_survival_dataset(snaps, D("2020-01-01"), D("2020-12-31"), CAT5)
    assert [(s.duration_days, s.event) for s in samples] == [(14, True), (0, True)]


def test_censoring_anchors_at_last_observed_day():
    snaps = timeline("Z01", "2020-01-01", 91)  # through 2020-03-31
    samples = build_survival_dataset(snaps, D("2020-01-01"), D("2020-01-01"), CAT5)
    assert [(s.duration_days, s.event) for s in samples] == [(90, False)]


def test_window_bounds_and_errors():
    snaps = timeline("Z01", "2020-01-01", 10)
    s = build_survival_dataset(snaps, D("2020-01-03"), D("2020-01-05"), CAT5)
    assert [x.snapshot_date.day for x in s] == [3, 4, 5]
    with pytest.raises(InvalidWindow):
        build_survival_dataset(snaps, D("2020-01-05"), D("2020-01-03"), CAT5)


def test_rows_after_failure_are_inconsistent():
    snaps = [snap("2020-01-01", failed=True), snap("2020-01-02")]
    with pytest.raises(NegativeDuration):
        build_survival_dataset(snaps, D("2020-01-01"), D("2020-01-31"), CAT5)


def test_duplicate_serial_day_rejected():
    with pytest.raises(DuplicateSnapshot):
        build_survival_dataset([snap("2020-01-01"), snap("2020-01-01")], D("2020-01-01"), D("2020-01-31"), CAT5)


def test_failing_only_drops_survivors():
    snaps = timeline("A", "2020-01-01", 5, fail=True) + timeline("B", "2020-01-01", 5)
    s = build_survival_dataset(snaps, D("2020-01-01"), D("2020-01-31"), CAT5, failing_only=True)
    assert {x.serial for x in s} == {"A"} and all(x.event for x in s)


def test_classification_label_examples():
    fails_soon = [snap("2020-03-01", "A"), snap("2020-03-15", "A", failed=True)]
    fails_late = [snap("2020-03-01", "B"), snap("2020-04-15", "B", failed=True)]
    censored = [snap("2020-03-01", "C"), snap("2020-03-20", "C")]
    out = build_classification_dataset(fails_soon + fails_late + censored, D("2020-03-01"), D("2020-03-01"), 30, CAT5)
    assert {(s.serial, s.label) for s in out} == {("A", True), ("B", False)}


def test_classification_invalid_horizon():
    with pytest.raises(InvalidHorizon):
        build_classification_dataset([snap("2020-01-01")], D("2020-01-01"), D("2020-01-02"), 0, CAT5)
    with pytest.raises(InvalidHorizon):
        build_classification_dataset([snap("2020-01-01")], D("2020-01-01"), D("2020-01-02"), 2.5, CAT5)


def test_horizon_label_determinability_by_enumeration():
    # a drive observed for 10 days, censored or failing on its last day
    for event in (False, True):
        for horizon in range(1, 15):
            for k in range(10):
                duration = 9 - k
                label = horizon_label(duration, event, horizon)
                if event:
                    assert label == (duration <= horizon)
                elif duration >= horizon:
                    assert label is False
                else:
                    assert label is None


@st.composite
def fleets(draw):
    snaps = []
    for i in range(draw(st.integers(1, 6))):
        start = D("2020-01-01") + timedelta(days=draw(st.integers(0, 20)))
        days = draw(st.integers(1, 30))
        fail = draw(st.booleans())
        # random gaps: keep a random subset of days but always the last
        keep = sorted(set(draw(st.lists(st.integers(0, days - 1), max_size=days))) | {days - 1})
        for d in keep:
            snaps.append(snap(start + timedelta(days=d), f"S{i}", fail and d == days - 1, smart_5_raw=d))
    return snaps


@settings(max_examples=150, deadline=None)
@given(fleets(), st.integers(0, 40), st.integers(0, 40))
def test_durations_equal_date_differences(snaps, a, b):
    start, end = D("2020-01-01") + timedelta(days=min(a, b)), D("2020-01-01") + timedelta(days=max(a, b))
    samples = build_survival_dataset(snaps, start, end, CAT5)
    by_serial: dict = {}
    for s in snaps:
        by_serial.setdefault(s.serial, []).append(s)
    expected = []
    for serial in sorted(by_serial):
        rows = by_serial[serial]
        fails = [r.date for r in rows if r.failed]
        anchor = fails[0] if fails else max(r.date for r in rows)
        for r in sorted(rows, key=lambda r: r.date):
            if start <= r.date <= end:
                expected.append((serial, r.date, (anchor - r.date).days, bool(fails)))
    assert [(s.serial, s.snapshot_date, s.duration_days, s.event) for s in samples] == expected


@settings(max_examples=100, deadline=None)
@given(fleets(), st.integers(0, 40), st.integers(0, 40), st.integers(0, 10), st.integers(0, 10))
def test_shrinking_window_gives_subset(snaps, a, b, da, db):
    lo, hi = min(a, b), max(a, b)
    big = build_survival_dataset(snaps, D("2020-01-01") + timedelta(days=lo), D("2020-01-01") + timedelta(days=hi), CAT5)
    lo2, hi2 = lo + da, hi - db
    if lo2 > hi2:
        return
    small = build_survival_dataset(snaps, D("2020-01-01") + timedelta(days=lo2), D("2020-01-01") + timedelta(days=hi2), CAT5)
    key = lambda s: (s.serial, s.snapshot_date, s.duration_days, s.event)
    assert {key(s) for s in small} <= {key(s) for s in big}


@settings(max_examples=100, deadline=None)
@given(fleets(), st.integers(1, 40))
def test_classification_never_labels_undeterminable(snaps, horizon):
    out = build_classification_dataset(snaps, D("2019-01-01"), D("2021-01-01"), horizon, CAT5)
    surv = {(s.serial, s.snapshot_date): s for s in build_survival_dataset(snaps, D("2019-01-01"), D("2021-01-01"), CAT5)}
    for c in out:
        s = surv[(c.serial, c.snapshot_date)]
        assert s.event or s.duration_days >= horizon
        assert c.label == (s.event and s.duration_days <= horizon)


def _samples_for(serials):
    fv = featurize(snap("2020-01-01"), CAT5)
    return [SurvivalSample(fv, 1, False, s, D("2020-01-01") + timedelta(days=k)) for s in serials for k in range(3)]


def test_split_ten_serials():
    samples = _samples_for([f"S{i}" for i in range(10)])
    train, test = split_by_serial(samples, 0.3, seed=4)
    tr, te = {s.serial for s in train}, {s.serial for s in test}
    assert len(te) == 3 and not tr & te and len(tr | te) == 10
    assert len(train) + len(test) == len(samples)
    assert split_by_serial(samples, 0.3, seed=4) == (train, test)


def test_split_single_serial_is_degenerate():
    with pytest.raises(DegenerateSplit):
        split_by_serial(_samples_for(["ONLY"]), 0.3)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 40), st.floats(0.01, 0.99), st.integers(0, 2**31))
def test_split_share_within_one_serial(n, frac, seed):
    samples = _samples_for([f"S{i}" for i in range(n)])
    train, test = split_by_serial(samples, frac, seed)
    te = {s.serial for s in test}
    assert abs(len(te) - frac * n) <= 1
    assert not te & {s.serial for s in train}


def test_dataset_cache_round_trip(tmp_path):
    cat = default_catalog({5, 187})
    snaps = timeline("A", "2020-01-01", 4, fail=True, smart_5_raw=3) + timeline("B", "2020-01-01", 3, smart_187_normalized=100)
    samples = build_survival_dataset(snaps, D("2020-01-01"), D("2020-01-10"), cat)
    meta = DatasetMeta(SURVIVAL, cat, D("2020-01-01"), D("2020-01-10"), seed=7, test_fraction=0.3, part="train")
    path = tmp_path / "train.csv"
    write_dataset(path, samples, meta)
    assert sidecar_path(path).is_file()
    back, meta2 = read_dataset(path)
    assert back == samples
    assert meta2.to_dict() == meta.to_dict() and meta2.n_samples == len(samples)
    assert meta2.window_days == 10

    cls = build_classification_dataset(snaps, D("2020-01-01"), D("2020-01-10"), 2, cat)
    cmeta = DatasetMeta(CLASSIFY, cat, D("2020-01-01"), D("2020-01-10"), horizon_days=2)
    write_dataset(tmp_path / "c.csv", cls, cmeta)
    back, m = read_dataset(tmp_path / "c.csv")
    assert back == cls and m.horizon_days == 2


def test_dataset_cache_keeps_non_integral_values(tmp_path):
    cat = FeatureCatalog((SmartKey(5, "raw"), SmartKey(7, "raw")))
    s = SurvivalSample(featurize(snap("2020-01-01", smart_5_raw=0.1, smart_7_raw=2**60), cat), 3, True, "A", D("2020-01-01"))
    write_dataset(tmp_path / "d.csv", [s], DatasetMeta(SURVIVAL, cat, D("2020-01-01"), D("2020-01-01")))
    (back,), _ = read_dataset(tmp_path / "d.csv")
    assert np.array_equal(back.features.values, s.features.values)
