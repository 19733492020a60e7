"""Nonparametric survival estimation on integer-day durations."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import EmptyGroup, EmptyInput


@dataclass(frozen=True, eq=False)
class KMCurve:
    """Kaplan-Meier step function.

    ``times`` holds the distinct event times; ``survival[j]`` is S(t) on
    ``[times[j], times[j+1])`` and S(t) = 1 before ``times[0]``.
    """

    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    deaths: np.ndarray
    n_total: int

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KMCurve):
            return NotImplemented
        return (
            self.n_total == other.n_total
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.survival, other.survival)
            and np.array_equal(self.at_risk, other.at_risk)
            and np.array_equal(self.deaths, other.deaths)
        )

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "survival": self.survival.tolist(),
            "at_risk": self.at_risk.tolist(),
            "deaths": self.deaths.tolist(),
            "n_total": self.n_total,
        }

    @classmethod
    def from_dict(cls, d: dict) -> KMCurve:
        return cls(
            times=np.asarray(d["times"], dtype=np.int64),
            survival=np.asarray(d["survival"], dtype=np.float64),
            at_risk=np.asarray(d["at_risk"], dtype=np.int64),
            deaths=np.asarray(d["deaths"], dtype=np.int64),
            n_total=int(d["n_total"]),
        )


def _as_arrays(durations, events) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(durations)
    e = np.asarray(events, dtype=bool)
    if t.shape != e.shape or t.ndim != 1:
        raise ValueError("durations and events must be 1-d arrays of equal length")
    if t.size and np.any(t < 0):
        raise ValueError("durations must be non-negative")
    return t, e


def _product_limit(at_risk: np.ndarray, deaths: np.ndarray) -> np.ndarray:
    # Between censorings the factors telescope: prod (n_i - d_i)/n_i equals
    # (n_j - d_j)/n_s for the run starting at s. Evaluating each run with one
    # division keeps the uncensored case exactly equal to (N - k)/N.
    after = at_risk - deaths
    starts = np.ones(at_risk.size, dtype=bool)
    starts[1:] = at_risk[1:] != after[:-1]
    seg = np.cumsum(starts) - 1
    within = after / at_risk[starts][seg]
    ends = np.flatnonzero(np.append(starts[1:], True))
    carried = np.concatenate(([1.0], np.cumprod(within[ends])[:-1]))
    return carried[seg] * within


def kaplan_meier(durations, events) -> KMCurve:
    """Product-limit estimate from parallel ``durations`` / ``events`` arrays.

    A censoring tied with a death at the same time is treated as occurring
    just after the death, so the censored unit is still at risk there.
    """
    t, e = _as_arrays(durations, events)
    if t.size == 0:
        raise EmptyInput("kaplan_meier needs at least one sample")
    times = np.unique(t[e])
    if times.size == 0:
        empty_i = np.zeros(0, dtype=np.int64)
        return KMCurve(empty_i, np.zeros(0), empty_i, empty_i, int(t.size))
    t_sorted = np.sort(t)
    # at risk at time u: everyone with duration >= u (censorings at u included)
    at_risk = t_sorted.size - np.searchsorted(t_sorted, times, side="left")
    ev_sorted = np.sort(t[e])
    deaths = np.searchsorted(ev_sorted, times, side="right") - np.searchsorted(ev_sorted, times, side="left")
    survival = _product_limit(at_risk, deaths)
    return KMCurve(
        times=times.astype(np.int64),
        survival=survival,
        at_risk=at_risk.astype(np.int64),
        deaths=deaths.astype(np.int64),
        n_total=int(t.size),
    )


def survival_at(curve: KMCurve, t: float) -> float:
    """Right-continuous step evaluation of S(t)."""
    j = int(np.searchsorted(curve.times, t, side="right")) - 1
    return 1.0 if j < 0 else float(curve.survival[j])


def survival_at_many(curve: KMCurve, ts) -> np.ndarray:
    ts = np.asarray(ts, dtype=np.float64)
    j = np.searchsorted(curve.times, ts, side="right") - 1
    padded = np.concatenate(([1.0], curve.survival))
    return padded[j + 1]


def restricted_mean_survival(curve: KMCurve, tau: float) -> float:
    """Area under S(t) on [0, tau]; exact for the step function."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    knots = curve.times[curve.times < tau].astype(np.float64)
    edges = np.concatenate(([0.0], knots, [float(tau)]))
    levels = np.concatenate(([1.0], curve.survival[: knots.size]))
    return float(np.sum(np.diff(edges) * levels))


def log_rank(durations_a, events_a, durations_b, events_b) -> float:
    """Two-sample log-rank chi-square statistic.

    Sums observed-minus-expected deaths in group A over the pooled distinct
    event times, with hypergeometric variance. Returns 0.0 when the pooled
    variance vanishes (e.g. no events at all).
    """
    ta, ea = _as_arrays(durations_a, events_a)
    tb, eb = _as_arrays(durations_b, events_b)
    if ta.size == 0 or tb.size == 0:
        raise EmptyGroup("log_rank needs two non-empty groups")
    times = np.unique(np.concatenate((ta[ea], tb[eb])))
    if times.size == 0:
        return 0.0
    sa, sb = np.sort(ta), np.sort(tb)
    ua, ub = np.sort(ta[ea]), np.sort(tb[eb])
    n_a = (sa.size - np.searchsorted(sa, times, side="left")).astype(np.float64)
    n_b = (sb.size - np.searchsorted(sb, times, side="left")).astype(np.float64)
    d_a = (np.searchsorted(ua, times, side="right") - np.searchsorted(ua, times, side="left")).astype(np.float64)
    d_b = (np.searchsorted(ub, times, side="right") - np.searchsorted(ub, times, side="left")).astype(np.float64)
    n = n_a + n_b
    d = d_a + d_b
    expected = d * n_a / n
    with np.errstate(invalid="ignore", divide="ignore"):
        var = np.where(n > 1, d * (n_a / n) * (n_b / n) * (n - d) / (n - 1), 0.0)
    v = float(var.sum())
    if v <= 0.0:
        return 0.0
    return float((d_a - expected).sum() ** 2 / v)


def km_to_csv(curve: KMCurve) -> str:
    """CSV with columns time, survival, at_risk, deaths (one row per event time)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "survival", "at_risk", "deaths"])
    for row in zip(curve.times.tolist(), curve.survival.tolist(), curve.at_risk.tolist(), curve.deaths.tolist()):
        w.writerow([row[0], repr(row[1]), row[2], row[3]])
    return buf.getvalue()
