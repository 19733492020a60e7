from __future__ import annotations

from datetime import date, timedelta

import pytest

from drivehealth.telemetry import DriveDaySnapshot, SmartKey

MODEL = "ST12000NM0007"
CAPACITY = 12000138625024


def snap(day, serial="Z01", failed=False, model=MODEL, **smart) -> DriveDaySnapshot:
    """Snapshot with SMART values given as e.g. ``smart_5_raw=3``."""
    if isinstance(day, str):
        day = date.fromisoformat(day)
    values = {SmartKey.parse(k): v for k, v in smart.items()}
    return DriveDaySnapshot(day, serial, model, CAPACITY, failed, values)


def timeline(serial, first, days, fail=False, **smart):
    """``days`` consecutive snapshots starting at ``first``; the last one fails if ``fail``."""
    first = date.fromisoformat(first) if isinstance(first, str) else first
    return [
        snap(first + timedelta(days=i), serial, fail and i == days - 1, **smart)
        for i in range(days)
    ]


@pytest.fixture
def make_snap():
    return snap


@pytest.fixture
def make_timeline():
    return timeline


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL/SKIP line per acceptance criterion, collected from
    ``record_property("acceptance", label)``."""
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call" and outcome != "skipped":
                continue
            for name, label in getattr(rep, "user_properties", ()):
                if name == "acceptance":
                    word = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[outcome]
                    lines.append((label, f"{word} criterion {label}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
