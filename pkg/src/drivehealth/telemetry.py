"""Streaming reader for Backblaze-style daily SMART snapshot files.

Each file has a header row followed by one row per drive per day::

    date,serial_number,model,capacity_bytes,failure,smart_1_normalized,smart_1_raw,...

Empty SMART cells are kept as *absent* rather than zero, since zero is a
meaningful raw value and column coverage differs between drive models.
"""

from __future__ import annotations

import csv
import gzip
import io
import logging
import math
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import NamedTuple, Union

from .errors import AbortThresholdExceeded, DuplicateColumn, MissingColumn, RowError

logger = logging.getLogger(__name__)

RAW = "raw"
NORMALIZED = "normalized"
KINDS = (RAW, NORMALIZED)

NORMALIZED_MIN = 1
NORMALIZED_MAX = 253
INT64_MAX = 2**63 - 1

MANDATORY_COLUMNS = ("date", "serial_number", "model", "capacity_bytes", "failure")
DEFAULT_MAX_BAD_FRACTION = 0.01

_SMART_COLUMN = re.compile(r"^smart_([1-9][0-9]*)_(raw|normalized)$")
_ISO_DAY = re.compile(r"^[0-9]{4}-[0-9]{2}-[0-9]{2}$")
_INT = re.compile(r"^[+-]?[0-9]+$")
_FLOAT = re.compile(r"^[+-]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][+-]?[0-9]+)?$")
_MAX_NUMBER_CHARS = 40

SmartValue = Union[int, float]


class SmartKey(NamedTuple):
    """One SMART column: attribute id plus raw/normalized kind."""

    attr: int
    kind: str

    @property
    def column(self) -> str:
        return f"smart_{self.attr}_{self.kind}"

    @classmethod
    def parse(cls, name: str) -> SmartKey:
        m = _SMART_COLUMN.match(name)
        if m is None:
            raise ValueError(f"not a SMART column name: {name!r}")
        return cls(int(m.group(1)), m.group(2))


@dataclass(frozen=True)
class DriveDaySnapshot:
    date: date
    serial: str
    model: str
    capacity_bytes: int | None
    failed: bool
    smart_values: Mapping[SmartKey, SmartValue] = field(default_factory=dict)

    def smart(self, attr: int, kind: str) -> SmartValue | None:
        return self.smart_values.get(SmartKey(attr, kind))


@dataclass(frozen=True)
class SchemaMap:
    """Column positions for one snapshot file."""

    n_columns: int
    date: int
    serial: int
    model: int
    capacity: int
    failure: int
    smart: tuple[tuple[int, SmartKey], ...]
    unrecognized: tuple[str, ...] = ()

    @property
    def smart_keys(self) -> tuple[SmartKey, ...]:
        return tuple(key for _, key in self.smart)


def validate_header(header: list[str]) -> SchemaMap:
    """Map a header row to column indices.

    Raises ``DuplicateColumn`` for repeated names and ``MissingColumn`` when a
    mandatory column is absent. Columns that are neither mandatory nor SMART
    (e.g. ``datacenter`` in newer archives) are listed in ``unrecognized``.
    """
    seen: dict[str, int] = {}
    for i, raw_name in enumerate(header):
        name = raw_name.strip()
        if name in seen:
            raise DuplicateColumn(name)
        seen[name] = i
    for name in MANDATORY_COLUMNS:
        if name not in seen:
            raise MissingColumn(name)

    smart: list[tuple[int, SmartKey]] = []
    unrecognized: list[str] = []
    for name, i in seen.items():
        if name in MANDATORY_COLUMNS:
            continue
        if _SMART_COLUMN.match(name):
            smart.append((i, SmartKey.parse(name)))
        else:
            unrecognized.append(name)
    if unrecognized:
        logger.info("ignoring %d unrecognized columns: %s", len(unrecognized), ", ".join(unrecognized))
    return SchemaMap(
        n_columns=len(header),
        date=seen["date"],
        serial=seen["serial_number"],
        model=seen["model"],
        capacity=seen["capacity_bytes"],
        failure=seen["failure"],
        smart=tuple(smart),
        unrecognized=tuple(unrecognized),
    )


def _parse_day(text: str, line: int) -> date:
    if not _ISO_DAY.match(text):
        raise RowError(line, f"date: {text!r} is not an ISO-8601 day")
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise RowError(line, f"date: {exc}") from None


def _parse_number(text: str, column: str, line: int) -> SmartValue:
    if len(text) > _MAX_NUMBER_CHARS:
        raise RowError(line, f"{column}: numeric cell longer than {_MAX_NUMBER_CHARS} characters")
    if _INT.match(text):
        value: SmartValue = int(text)
    else:
        if not _FLOAT.match(text):
            raise RowError(line, f"{column}: {text!r} is not a number")
        value = float(text)
        if not math.isfinite(value):
            raise RowError(line, f"{column}: non-finite value {text!r}")
        if value.is_integer():
            value = int(value)
    if abs(value) > INT64_MAX:
        raise RowError(line, f"{column}: {text!r} exceeds the 64-bit range")
    return value


def parse_row(row: list[str], schema: SchemaMap, line: int) -> DriveDaySnapshot:
    """Parse one data row; raises ``RowError`` on any defect."""
    if len(row) != schema.n_columns:
        raise RowError(line, f"expected {schema.n_columns} columns, got {len(row)}")

    day = _parse_day(row[schema.date].strip(), line)
    serial = row[schema.serial].strip()
    if not serial:
        raise RowError(line, "serial_number: empty")
    model = row[schema.model].strip()

    cap_text = row[schema.capacity].strip()
    capacity: int | None = None
    if cap_text:
        cap = _parse_number(cap_text, "capacity_bytes", line)
        if not isinstance(cap, int):
            raise RowError(line, f"capacity_bytes: {cap_text!r} is not an integer")
        if cap == -1:
            capacity = None
        elif cap < 0:
            raise RowError(line, f"capacity_bytes: negative value {cap}")
        else:
            capacity = cap

    fail_text = row[schema.failure].strip()
    if fail_text == "1":
        failed = True
    elif fail_text == "0":
        failed = False
    else:
        raise RowError(line, f"failure: expected '0' or '1', got {fail_text!r}")

    values: dict[SmartKey, SmartValue] = {}
    for i, key in schema.smart:
        text = row[i].strip()
        if not text:
            continue
        value = _parse_number(text, key.column, line)
        if key.kind == NORMALIZED:
            if not NORMALIZED_MIN <= value <= NORMALIZED_MAX:
                raise RowError(line, f"{key.column}: {value} outside [1, 253]")
        elif value < 0:
            raise RowError(line, f"{key.column}: negative raw value {value}")
        values[key] = value

    return DriveDaySnapshot(day, serial, model, capacity, failed, values)


class SnapshotParser:
    """Sequential row parser that tolerates a bounded fraction of bad rows.

    Rejected rows are collected in ``errors``. The abort check runs once the
    stream is exhausted, so memory stays bounded by a single row plus the
    error list.
    """

    def __init__(self, schema: SchemaMap, max_bad_fraction: float = DEFAULT_MAX_BAD_FRACTION) -> None:
        if not 0.0 <= max_bad_fraction <= 1.0:
            raise ValueError("max_bad_fraction must lie in [0, 1]")
        self.schema = schema
        self.max_bad_fraction = max_bad_fraction
        self.rows = 0
        self.errors: list[RowError] = []

    def parse(self, rows: Iterable[list[str]], first_line: int = 2) -> Iterator[DriveDaySnapshot]:
        for line, row in enumerate(rows, start=first_line):
            if not row:
                continue  # blank line
            self.rows += 1
            try:
                yield parse_row(row, self.schema, line)
            except RowError as err:
                self.errors.append(err)
        self._finish()

    def parse_lines(self, lines: Iterable[str], first_line: int = 2) -> Iterator[DriveDaySnapshot]:
        """Like :meth:`parse` but splits raw text lines, so CSV-level defects
        (stray quotes, NUL bytes) become row errors too."""
        for line, text in enumerate(lines, start=first_line):
            if not text.strip():
                continue
            self.rows += 1
            try:
                row = next(csv.reader([text]))
                yield parse_row(row, self.schema, line)
            except csv.Error as exc:
                self.errors.append(RowError(line, f"csv: {exc}"))
            except RowError as err:
                self.errors.append(err)
        self._finish()

    def _finish(self) -> None:
        bad = len(self.errors)
        if self.rows and bad / self.rows > self.max_bad_fraction:
            raise AbortThresholdExceeded(bad, self.rows, self.max_bad_fraction, self.errors)
        if bad:
            logger.warning("rejected %d of %d rows", bad, self.rows)


def parse_snapshots(
    stream: Iterable[list[str]],
    schema: SchemaMap,
    *,
    max_bad_fraction: float = DEFAULT_MAX_BAD_FRACTION,
    errors: list[RowError] | None = None,
    first_line: int = 2,
) -> Iterator[DriveDaySnapshot]:
    """Lazily parse data rows (header already consumed) into snapshots.

    Row errors are appended to ``errors`` when a list is supplied.
    """
    parser = SnapshotParser(schema, max_bad_fraction)
    if errors is not None:
        parser.errors = errors
    yield from parser.parse(stream, first_line=first_line)


def open_text(path: str | Path) -> io.TextIOBase:
    path = Path(path)
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", newline="")
    return open(path, encoding="utf-8", newline="")


def read_snapshot_file(
    path: str | Path,
    *,
    max_bad_fraction: float = DEFAULT_MAX_BAD_FRACTION,
    errors: list[RowError] | None = None,
) -> Iterator[DriveDaySnapshot]:
    """Stream snapshots from a CSV (or ``.csv.gz``) file."""
    with open_text(path) as fh:
        first = fh.readline()
        if not first.strip():
            raise MissingColumn(MANDATORY_COLUMNS[0])
        schema = validate_header(next(csv.reader([first])))
        parser = SnapshotParser(schema, max_bad_fraction)
        if errors is not None:
            parser.errors = errors
        yield from parser.parse_lines(fh)


def filter_model(snapshots: Iterable[DriveDaySnapshot], model: str) -> Iterator[DriveDaySnapshot]:
    return (s for s in snapshots if s.model == model)


# -- writing -----------------------------------------------------------------


def canonical_header(keys: Iterable[SmartKey]) -> list[str]:
    """Backblaze column order: mandatory columns, then normalized/raw pairs by id."""
    attrs = sorted({k.attr for k in keys})
    header = list(MANDATORY_COLUMNS)
    for attr in attrs:
        header.append(SmartKey(attr, NORMALIZED).column)
        header.append(SmartKey(attr, RAW).column)
    return header


def _format_value(value: SmartValue) -> str:
    return str(value) if isinstance(value, int) else repr(value)


def to_row(snapshot: DriveDaySnapshot, schema: SchemaMap) -> list[str]:
    row = [""] * schema.n_columns
    row[schema.date] = snapshot.date.isoformat()
    row[schema.serial] = snapshot.serial
    row[schema.model] = snapshot.model
    row[schema.capacity] = "-1" if snapshot.capacity_bytes is None else str(snapshot.capacity_bytes)
    row[schema.failure] = "1" if snapshot.failed else "0"
    for i, key in schema.smart:
        value = snapshot.smart_values.get(key)
        if value is not None:
            row[i] = _format_value(value)
    return row


def write_snapshots(
    fh: io.TextIOBase, snapshots: Iterable[DriveDaySnapshot], keys: Iterable[SmartKey]
) -> int:
    """Write snapshots in canonical layout; returns the number of rows."""
    header = canonical_header(keys)
    schema = validate_header(header)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    n = 0
    for snap in snapshots:
        writer.writerow(to_row(snap, schema))
        n += 1
    return n


# -- diagnostics -------------------------------------------------------------


@dataclass(frozen=True)
class Gap:
    serial: str
    last_seen: date
    next_seen: date

    @property
    def missing_days(self) -> int:
        return (self.next_seen - self.last_seen).days - 1


def find_gaps(snapshots: Iterable[DriveDaySnapshot]) -> list[Gap]:
    """Report runs of missing days inside each drive's observed span.

    Gaps are only surfaced; nothing is imputed.
    """
    days: dict[str, list[date]] = {}
    for s in snapshots:
        days.setdefault(s.serial, []).append(s.date)
    gaps = []
    for serial in sorted(days):
        seq = sorted(days[serial])
        for a, b in zip(seq, seq[1:]):
            if b - a > timedelta(days=1):
                gaps.append(Gap(serial, a, b))
    return gaps
