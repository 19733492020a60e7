from __future__ import annotations

import csv
import gzip
import io
import random
from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drivehealth.errors import AbortThresholdExceeded, DuplicateColumn, MissingColumn, RowError
from drivehealth.telemetry import (
    MANDATORY_COLUMNS,
    DriveDaySnapshot,
    SmartKey,
    SnapshotParser,
    canonical_header,
    filter_model,
    find_gaps,
    parse_row,
    parse_snapshots,
    read_snapshot_file,
    validate_header,
    write_snapshots,
)

from conftest import MODEL, snap

HEADER = ["date", "serial_number", "model", "capacity_bytes", "failure", "smart_5_normalized", "smart_5_raw"]


def rows_of(text: str) -> list[list[str]]:
    return list(csv.reader(io.StringIO(text)))


def test_header_with_one_smart_column():
    schema = validate_header(["date", "serial_number", "model", "capacity_bytes", "failure", "smart_5_raw"])
    assert schema.smart_keys == (SmartKey(5, "raw"),)
    assert (schema.date, schema.serial, schema.model, schema.capacity, schema.failure) == (0, 1, 2, 3, 4)


def test_header_missing_failure_names_it():
    with pytest.raises(MissingColumn) as exc:
        validate_header(["date", "serial_number", "model", "capacity_bytes", "smart_5_raw"])
    assert exc.value.name == "failure"


def test_header_duplicate_column():
    with pytest.raises(DuplicateColumn) as exc:
        validate_header(["date", "date", "serial_number", "model", "capacity_bytes", "failure"])
    assert exc.value.name == "date"


def test_unrecognized_columns_are_reported_not_fatal():
    schema = validate_header([*MANDATORY_COLUMNS, "datacenter", "smart_9_raw", "smart_x_raw"])
    assert schema.unrecognized == ("datacenter", "smart_x_raw")
    assert schema.smart_keys == (SmartKey(9, "raw"),)


def test_row_with_empty_smart_cell():
    schema = validate_header(HEADER)
    (s,) = parse_snapshots(rows_of("2020-01-01,Z01,ST12000NM0007,12000138625024,0,7,\n"), schema)
    assert s.smart(5, "raw") is None
    assert s.smart(5, "normalized") == 7
    assert s.failed is False
    assert s.date == date(2020, 1, 1)
    assert s.capacity_bytes == 12000138625024


def test_row_in_column_order_of_example():
    # columns (5,raw) then (5,normalized): the raw cell is empty
    header = ["date", "serial_number", "model", "capacity_bytes", "failure", "smart_5_raw", "smart_5_normalized"]
    (s,) = parse_snapshots(rows_of("2020-01-01,Z01,ST12000NM0007,12000138625024,0,,7\n"), validate_header(header))
    assert s.smart(5, "raw") is None and s.smart(5, "normalized") == 7


def test_failure_flag_one():
    (s,) = parse_snapshots(rows_of("2020-01-01,Z01,M,1,1,100,0\n"), validate_header(HEADER))
    assert s.failed is True


def test_capacity_sentinel_becomes_absent():
    (s,) = parse_snapshots(rows_of("2020-01-01,Z01,M,-1,0,100,0\n"), validate_header(HEADER))
    assert s.capacity_bytes is None


@pytest.mark.parametrize(
    "row, cause",
    [
        ("2020-13-01,Z01,M,1,0,100,0", "date"),
        ("2020-02-30,Z01,M,1,0,100,0", "date"),
        ("20200101,Z01,M,1,0,100,0", "date"),
        ("2020-01-01,,M,1,0,100,0", "serial_number"),
        ("2020-01-01,Z01,M,1,2,100,0", "failure"),
        ("2020-01-01,Z01,M,1,0,0,0", "smart_5_normalized"),
        ("2020-01-01,Z01,M,1,0,254,0", "smart_5_normalized"),
        ("2020-01-01,Z01,M,1,0,100,-3", "smart_5_raw"),
        ("2020-01-01,Z01,M,1,0,100,abc", "smart_5_raw"),
        ("2020-01-01,Z01,M,1,0,100,nan", "smart_5_raw"),
        ("2020-01-01,Z01,M,1,0,100,1_000", "smart_5_raw"),
        ("2020-01-01,Z01,M,1,0,100,1e400", "smart_5_raw"),
        ("2020-01-01,Z01,M,1,0,100,99999999999999999999", "smart_5_raw"),
        ("2020-01-01,Z01,M,x,0,100,0", "capacity_bytes"),
        ("2020-01-01,Z01,M,1,0,100", "columns"),
    ],
)
def test_bad_rows_carry_line_and_cause(row, cause):
    with pytest.raises(RowError) as exc:
        parse_row(next(csv.reader([row])), validate_header(HEADER), line=17)
    assert exc.value.line == 17
    assert cause in exc.value.cause


def test_integral_float_cells_become_ints():
    s = parse_row(next(csv.reader(["2020-01-01,Z01,M,1,0,100.0,12.0"])), validate_header(HEADER), 2)
    assert s.smart(5, "raw") == 12 and isinstance(s.smart(5, "raw"), int)
    s = parse_row(next(csv.reader(["2020-01-01,Z01,M,1,0,100,2.5"])), validate_header(HEADER), 2)
    assert s.smart(5, "raw") == 2.5


def test_bad_rows_collected_below_threshold():
    good = "2020-01-01,Z{0:03d},M,1,0,100,0\n"
    text = "".join(good.format(i) for i in range(199)) + "2020-13-01,BAD,M,1,0,100,0\n"
    errors: list[RowError] = []
    out = list(parse_snapshots(rows_of(text), validate_header(HEADER), errors=errors))
    assert len(out) == 199
    assert [(e.line, "date" in e.cause) for e in errors] == [(201, True)]


def test_abort_threshold_exceeded():
    text = "2020-01-01,Z1,M,1,0,100,0\n2020-13-01,Z2,M,1,0,100,0\n"
    with pytest.raises(AbortThresholdExceeded) as exc:
        list(parse_snapshots(rows_of(text), validate_header(HEADER)))
    assert (exc.value.bad, exc.value.total) == (1, 2)
    assert exc.value.errors[0].line == 3
    # a looser threshold lets the same input through
    assert len(list(parse_snapshots(rows_of(text), validate_header(HEADER), max_bad_fraction=0.5))) == 1


def test_filter_model_examples():
    snaps = [snap("2020-01-01", "A"), snap("2020-01-01", "B", model="OTHER"), snap("2020-01-02", "A")]
    assert [s.serial for s in filter_model(snaps, MODEL)] == ["A", "A"]
    assert list(filter_model(snaps, "NOPE")) == []


def test_filter_model_preserves_shuffled_order():
    rng = random.Random(3)
    snaps = [snap(f"2020-01-{d:02d}", f"S{i}", model=rng.choice([MODEL, "X"])) for i in range(20) for d in (1, 2)]
    rng.shuffle(snaps)
    assert list(filter_model(snaps, MODEL)) == [s for s in snaps if s.model == MODEL]


def test_read_file_plain_and_gzip(tmp_path):
    text = ",".join(HEADER) + "\n2020-01-01,Z01,M,1,0,100,3\n\n2020-01-02,Z01,M,1,1,99,4\n"
    plain = tmp_path / "day.csv"
    plain.write_text(text)
    packed = tmp_path / "day.csv.gz"
    with gzip.open(packed, "wt") as fh:
        fh.write(text)
    a = list(read_snapshot_file(plain))
    b = list(read_snapshot_file(packed))
    assert a == b
    assert [s.smart(5, "raw") for s in a] == [3, 4]


def test_read_file_line_numbers_skip_blank_rows(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text(",".join(HEADER) + "\n2020-01-01,Z01,M,1,0,100,3\n\nbad\n")
    errors: list[RowError] = []
    list(read_snapshot_file(path, errors=errors, max_bad_fraction=1.0))
    assert [e.line for e in errors] == [4]


def test_read_file_csv_level_defects_are_row_errors(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text(",".join(HEADER) + '\n2020-01-01,Z01,M,1,0,100,3\n2020-01-01,"Z0\x002,M,1,0,1,1\n')
    errors: list[RowError] = []
    out = list(read_snapshot_file(path, errors=errors, max_bad_fraction=1.0))
    assert len(out) == 1 and errors[0].line == 3


def test_parsing_rows_individually_equals_whole_file():
    schema = validate_header(HEADER)
    lines = [f"2020-01-{d:02d},Z{d},M,1,{d % 2},{100 - d},{d}" for d in range(1, 20)]
    whole = list(SnapshotParser(schema).parse_lines(lines))
    single = [parse_row(next(csv.reader([ln])), schema, i + 2) for i, ln in enumerate(lines)]
    assert whole == single


_keys = st.sampled_from([SmartKey(a, k) for a in (1, 5, 187, 197) for k in ("raw", "normalized")])


@st.composite
def snapshots(draw):
    values = {}
    for key in draw(st.sets(_keys)):
        if key.kind == "normalized":
            values[key] = draw(st.integers(1, 253))
        else:
            values[key] = draw(st.one_of(st.integers(0, 2**63 - 1), st.floats(0.5, 1e12).filter(lambda v: not v.is_integer())))
    return DriveDaySnapshot(
        draw(st.dates(date(1990, 1, 1), date(2100, 1, 1))),
        draw(st.text("ABCZ0123456789-", min_size=1, max_size=12)),
        draw(st.text("ABCDEFGHST0123456789 ", min_size=0, max_size=16)).strip(),
        draw(st.one_of(st.none(), st.integers(0, 2**62))),
        draw(st.booleans()),
        values,
    )


@settings(max_examples=200, deadline=None)
@given(st.lists(snapshots(), min_size=1, max_size=5))
def test_round_trip_write_then_parse(snaps):
    keys = {k for s in snaps for k in s.smart_values}
    buf = io.StringIO()
    assert write_snapshots(buf, snaps, keys) == len(snaps)
    rows = rows_of(buf.getvalue())
    assert rows[0] == canonical_header(keys)
    parsed = list(parse_snapshots(rows[1:], validate_header(rows[0]), max_bad_fraction=0.0))
    assert parsed == snaps


def test_find_gaps_reports_missing_days():
    snaps = [snap("2020-01-01"), snap("2020-01-02"), snap("2020-01-05"), snap("2020-01-01", "B")]
    (gap,) = find_gaps(snaps)
    assert gap.serial == "Z01" and gap.missing_days == 2
