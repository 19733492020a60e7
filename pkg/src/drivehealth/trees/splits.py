"""Exhaustive threshold search for one feature at one node.

Candidate thresholds are midpoints between consecutive distinct observed
values. Each threshold is scored twice, once with missing values sent left
and once sent right. Among candidates whose gain is within a relative
tolerance of the best, the smallest threshold wins, then the smallest
feature index, then missing-left before missing-right.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import ClassificationData, LearningData, SurvivalData
from .model import CLASSIFICATION

GINI = "gini"
LOGRANK = "logrank"

# gains closer than this (relative to the best) count as ties
TIE_RTOL = 1e-9
MIN_GAIN = 1e-12

_BLOCK_ELEMS = 1 << 22


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: float
    missing_goes_left: bool
    gain: float


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """All admissible candidates of one feature, as parallel arrays."""

    feature: int
    thresholds: np.ndarray
    missing_left: np.ndarray
    gains: np.ndarray

    @classmethod
    def empty(cls, feature: int) -> CandidateSet:
        return cls(feature, np.zeros(0), np.zeros(0, dtype=bool), np.zeros(0))


def default_criterion(data: LearningData) -> str:
    return GINI if data.kind == CLASSIFICATION else LOGRANK


def gini(n_pos, n):
    """Two-class Gini impurity 1 - p^2 - (1-p)^2; zero for empty sets."""
    n_pos = np.asarray(n_pos, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(n > 0, n_pos / n, 0.0)
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def midpoints(values: np.ndarray) -> np.ndarray:
    """Thresholds t with values[c] < t <= values[c+1] for sorted distinct values."""
    lo, hi = values[:-1], values[1:]
    mid = lo + (hi - lo) / 2.0
    return np.where(mid > lo, mid, hi)


def _grouped(x: np.ndarray):
    """Sort present values; return (order, distinct values, group id per sorted row)."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    change = np.empty(xs.size, dtype=bool)
    if xs.size:
        change[0] = True
        change[1:] = xs[1:] != xs[:-1]
    group = np.cumsum(change) - 1
    return order, xs[change], group


def _gini_candidates(y: np.ndarray, x: np.ndarray, msl: int):
    miss = np.isnan(x)
    xp, yp = x[~miss], y[~miss]
    n_miss, pos_miss = int(miss.sum()), int(y[miss].sum())
    n, n_pos = y.size, int(y.sum())
    order, values, group = _grouped(xp)
    if values.size < 2:
        return np.zeros(0), np.zeros(0, bool), np.zeros(0)
    cnt = np.bincount(group, minlength=values.size)[:-1].cumsum()
    pos = np.bincount(group, weights=yp[order].astype(np.float64), minlength=values.size)[:-1].cumsum()
    parent = float(gini(n_pos, n))
    thr = midpoints(values)
    gains, flags = [], []
    for ml in (True, False):
        nl = cnt + (n_miss if ml else 0)
        pl = pos + (pos_miss if ml else 0)
        nr, pr = n - nl, n_pos - pl
        g = parent - (nl / n) * gini(pl, nl) - (nr / n) * gini(pr, nr)
        ok = (nl >= msl) & (nr >= msl)
        gains.append(np.where(ok, g, -np.inf))
        flags.append(np.full(thr.size, ml))
    return np.concatenate([thr, thr]), np.concatenate(flags), np.concatenate(gains)


def _logrank_candidates(t: np.ndarray, e: np.ndarray, x: np.ndarray, msl: int):
    miss = np.isnan(x)
    n = t.size
    event_times = np.unique(t[e])
    m = event_times.size
    xp = x[~miss]
    order, values, group = _grouped(xp)
    if values.size < 2 or m == 0:
        return np.zeros(0), np.zeros(0, bool), np.zeros(0)
    G = values.size
    tp, ep = t[~miss][order], e[~miss][order]

    # k = number of event times <= duration: the sample is at risk at event times 0..k-1
    k_risk = np.searchsorted(event_times, tp, side="right")
    j_death = np.searchsorted(event_times, tp[ep], side="left")

    def risk_rows(k: np.ndarray, g: np.ndarray, n_groups: int) -> np.ndarray:
        hist = np.bincount(g * (m + 1) + k, minlength=n_groups * (m + 1)).reshape(n_groups, m + 1)
        return np.cumsum(hist[:, ::-1], axis=1)[:, ::-1][:, 1:]

    def death_rows(j: np.ndarray, g: np.ndarray, n_groups: int) -> np.ndarray:
        return np.bincount(g * m + j, minlength=n_groups * m).reshape(n_groups, m)

    k_all = np.searchsorted(event_times, t, side="right")
    R_tot = risk_rows(k_all, np.zeros(n, dtype=np.int64), 1)[0].astype(np.float64)
    D_tot = death_rows(np.searchsorted(event_times, t[e], side="left"), np.zeros(int(e.sum()), dtype=np.int64), 1)[0].astype(np.float64)
    if miss.any():
        tm, em = t[miss], e[miss]
        R_miss = risk_rows(np.searchsorted(event_times, tm, side="right"), np.zeros(tm.size, dtype=np.int64), 1)[0].astype(np.float64)
        D_miss = death_rows(np.searchsorted(event_times, tm[em], side="left"), np.zeros(int(em.sum()), dtype=np.int64), 1)[0].astype(np.float64)
    else:
        R_miss = D_miss = np.zeros(m)

    a = D_tot / R_tot
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.where(R_tot > 1, D_tot * (R_tot - D_tot) / (R_tot - 1) / (R_tot * R_tot), 0.0)

    cnt = np.bincount(group, minlength=G)[:-1].cumsum()
    n_miss = int(miss.sum())
    stats = {True: np.empty(G - 1), False: np.empty(G - 1)}
    # Process groups in blocks so the (groups x event times) matrices stay bounded.
    block = max(1, _BLOCK_ELEMS // max(m, 1))
    carry_R = np.zeros(m)
    carry_D = np.zeros(m)
    bounds = np.searchsorted(group, np.arange(0, G, block))
    bounds = np.append(bounds, group.size)
    deaths_before = np.concatenate(([0], np.cumsum(ep)))
    for bi, g0 in enumerate(range(0, G, block)):
        g1 = min(g0 + block, G)
        lo, hi = bounds[bi], bounds[bi + 1]
        gg = group[lo:hi] - g0
        kk = k_risk[lo:hi]
        dsel = ep[lo:hi]
        R = risk_rows(kk, gg, g1 - g0).astype(np.float64).cumsum(axis=0) + carry_R
        D = death_rows(j_death[deaths_before[lo]:deaths_before[hi]], gg[dsel], g1 - g0).astype(np.float64).cumsum(axis=0) + carry_D
        carry_R, carry_D = R[-1].copy(), D[-1].copy()
        stop = min(g1, G - 1) - g0
        if stop <= 0:
            continue
        R, D = R[:stop], D[:stop]
        for ml in (True, False):
            nl = R + R_miss if ml else R
            dl = D + D_miss if ml else D
            num = dl.sum(axis=1) - nl @ a
            var = (nl * (R_tot - nl)) @ b
            with np.errstate(invalid="ignore", divide="ignore"):
                stats[ml][g0:g0 + stop] = np.where(var > 0, num * num / var, 0.0)

    thr = midpoints(values)
    gains, flags = [], []
    for ml in (True, False):
        nl = cnt + (n_miss if ml else 0)
        ok = (nl >= msl) & (n - nl >= msl)
        gains.append(np.where(ok, stats[ml], -np.inf))
        flags.append(np.full(thr.size, ml))
    return np.concatenate([thr, thr]), np.concatenate(flags), np.concatenate(gains)


def feature_candidates(
    data: LearningData, feature: int, idx: np.ndarray | None = None, min_samples_leaf: int = 1,
    criterion: str | None = None,
) -> CandidateSet:
    """Score every admissible (threshold, missing side) pair of one feature."""
    criterion = criterion or default_criterion(data)
    if idx is None:
        idx = np.arange(data.n)
    x = data.X[idx, feature]
    if criterion == GINI:
        if not isinstance(data, ClassificationData):
            raise ValueError("gini criterion needs classification data")
        thr, ml, gains = _gini_candidates(data.labels[idx], x, min_samples_leaf)
    elif criterion == LOGRANK:
        if not isinstance(data, SurvivalData):
            raise ValueError("logrank criterion needs survival data")
        thr, ml, gains = _logrank_candidates(data.durations[idx], data.events[idx], x, min_samples_leaf)
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    keep = np.isfinite(gains)
    return CandidateSet(feature, thr[keep], ml[keep], gains[keep])


def choose(sets: list[CandidateSet]) -> SplitCandidate | None:
    """Apply the gain/tie-break rule across candidate sets."""
    best = -np.inf
    for cs in sets:
        if cs.gains.size:
            best = max(best, float(cs.gains.max()))
    if not best > MIN_GAIN:
        return None
    cutoff = best - TIE_RTOL * max(1.0, abs(best))
    winner: tuple | None = None
    for cs in sets:
        sel = np.flatnonzero(cs.gains >= cutoff)
        for i in sel:
            key = (float(cs.thresholds[i]), cs.feature, not bool(cs.missing_left[i]))
            if winner is None or key < winner[0]:
                winner = (key, SplitCandidate(cs.feature, float(cs.thresholds[i]), bool(cs.missing_left[i]), float(cs.gains[i])))
    return winner[1]


def best_split(
    data: LearningData, feature: int, criterion: str | None = None, *, idx: np.ndarray | None = None,
    min_samples_leaf: int = 1,
) -> SplitCandidate | None:
    """Best admissible split of ``feature`` (or None if nothing improves)."""
    return choose([feature_candidates(data, feature, idx, min_samples_leaf, criterion)])


def best_split_any(
    data: LearningData, idx: np.ndarray | None = None, min_samples_leaf: int = 1,
    criterion: str | None = None, features: list[int] | None = None, n_jobs: int = 1,
) -> SplitCandidate | None:
    """Best split over all features; feature scans may run on a thread pool.

    The reduction is order-independent, so the result does not depend on
    ``n_jobs``.
    """
    features = list(range(data.X.shape[1])) if features is None else features

    def scan(f: int) -> CandidateSet:
        return feature_candidates(data, f, idx, min_samples_leaf, criterion)

    if n_jobs > 1 and len(features) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            sets = list(pool.map(scan, features))
    else:
        sets = [scan(f) for f in features]
    return choose(sets)

