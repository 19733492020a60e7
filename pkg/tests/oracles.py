"""Independent reference implementations used as test oracles.

Everything here is written the slow, obvious way (Python loops, Fractions
where exactness matters) and shares no code with the package internals.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

TIE_RTOL = 1e-9
MIN_GAIN = 1e-12


# -- survival ----------------------------------------------------------------


def km_naive(durations, events) -> dict[int, Fraction]:
    """Product-limit estimate at each distinct event time, in exact arithmetic.

    Censorings tied with deaths stay at risk at that time.
    """
    pairs = list(zip((int(t) for t in durations), (bool(e) for e in events)))
    s = Fraction(1)
    out = {}
    for t in sorted({t for t, e in pairs if e}):
        at_risk = sum(1 for u, _ in pairs if u >= t)
        deaths = sum(1 for u, e in pairs if u == t and e)
        s *= Fraction(at_risk - deaths, at_risk)
        out[t] = s
    return out


def km_step(curve: dict[int, Fraction], t: float) -> Fraction:
    s = Fraction(1)
    for u in sorted(curve):
        if u <= t:
            s = curve[u]
    return s


def rmst_naive(durations, events, tau: int) -> Fraction:
    curve = km_naive(durations, events)
    return sum((km_step(curve, d) for d in range(int(tau))), Fraction(0))


def log_rank_naive(ta, ea, tb, eb) -> float:
    """Observed-minus-expected log-rank chi-square with a per-time loop."""
    a = list(zip(ta, ea))
    b = list(zip(tb, eb))
    times = sorted({t for t, e in a + b if e})
    num = 0.0
    var = 0.0
    for t in times:
        na = sum(1 for u, _ in a if u >= t)
        nb = sum(1 for u, _ in b if u >= t)
        da = sum(1 for u, e in a if u == t and e)
        db = sum(1 for u, e in b if u == t and e)
        n, d = na + nb, da + db
        num += da - d * na / n
        if n > 1:
            var += d * (na / n) * (nb / n) * (n - d) / (n - 1)
    return 0.0 if var <= 0 else num * num / var


# -- splits ------------------------------------------------------------------


def gini_naive(labels) -> float:
    n = len(labels)
    if n == 0:
        return 0.0
    p = sum(labels) / n
    return 1.0 - p * p - (1 - p) * (1 - p)


def candidate_thresholds(column) -> list[float]:
    vals = sorted({float(v) for v in column if not math.isnan(v)})
    out = []
    for lo, hi in zip(vals, vals[1:]):
        mid = lo + (hi - lo) / 2
        out.append(mid if mid > lo else hi)
    return out


def brute_force_split(X, y=None, durations=None, events=None, min_samples_leaf=1):
    """Exhaustive (gain, threshold, feature, missing_left) winner or None."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    cands = []
    for f in range(p):
        col = X[:, f]
        for t in candidate_thresholds(col):
            for ml in (True, False):
                left = [(ml if math.isnan(v) else v < t) for v in col]
                li = [i for i in range(n) if left[i]]
                ri = [i for i in range(n) if not left[i]]
                if len(li) < min_samples_leaf or len(ri) < min_samples_leaf:
                    continue
                if y is not None:
                    yl = [y[i] for i in li]
                    yr = [y[i] for i in ri]
                    g = gini_naive(list(y)) - len(li) / n * gini_naive(yl) - len(ri) / n * gini_naive(yr)
                else:
                    g = log_rank_naive(
                        [durations[i] for i in li], [events[i] for i in li],
                        [durations[i] for i in ri], [events[i] for i in ri],
                    )
                cands.append((g, t, f, ml))
    if not cands:
        return None
    best = max(c[0] for c in cands)
    if not best > MIN_GAIN:
        return None
    tied = [c for c in cands if c[0] >= best - TIE_RTOL * max(1.0, abs(best))]
    return min(tied, key=lambda c: (c[1], c[2], not c[3]))


# -- trees -------------------------------------------------------------------


def route_naive(node, x):
    """Recursive routing of one row (dict-free, attribute access only)."""
    if node.split is None:
        return node
    v = x[node.split.feature]
    if math.isnan(v):
        go_left = node.split.missing_goes_left
    else:
        go_left = v < node.split.threshold
    return route_naive(node.left if go_left else node.right, x)


def class_objective_naive(leaves_labels: list[list[bool]], n: int, cp: float, splits: int) -> float:
    wrong = sum(min(sum(ls), len(ls) - sum(ls)) for ls in leaves_labels)
    return wrong / n + cp * splits


def exhaustive_depth2_class(X, y, min_samples_leaf: int = 1) -> float:
    """Best misclassification rate over every tree of depth <= 2 (cp = 0).

    Each node chooses any (feature, midpoint, missing side) or stays a leaf.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    n = len(y)
    splits = [
        (f, t, ml)
        for f in range(X.shape[1])
        for t in candidate_thresholds(X[:, f])
        for ml in (True, False)
    ]

    def left_of(rows, s):
        f, t, ml = s
        return [i for i in rows if (ml if math.isnan(X[i, f]) else X[i, f] < t)]

    def leaf_err(rows):
        pos = int(sum(y[i] for i in rows))
        return min(pos, len(rows) - pos)

    def best_depth1(rows):
        best = leaf_err(rows)
        for s in splits:
            L = left_of(rows, s)
            R = [i for i in rows if i not in set(L)]
            if len(L) < min_samples_leaf or len(R) < min_samples_leaf:
                continue
            best = min(best, leaf_err(L) + leaf_err(R))
        return best

    rows = list(range(n))
    best = best_depth1(rows)
    for s in splits:
        L = left_of(rows, s)
        Ls = set(L)
        R = [i for i in rows if i not in Ls]
        if len(L) < min_samples_leaf or len(R) < min_samples_leaf:
            continue
        best = min(best, best_depth1(L) + best_depth1(R))
    return best / n


def all_prunings(node):
    """Every subtree obtained by collapsing any set of internal nodes."""
    if node.split is None:
        yield node
        return
    from drivehealth.trees.model import leaf

    yield leaf(node.payload)
    for left, right in itertools.product(list(all_prunings(node.left)), list(all_prunings(node.right))):
        yield type(node)(split=node.split, left=left, right=right, payload=node.payload)


# -- evaluation --------------------------------------------------------------


def concordance_naive(scores, labels) -> float:
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    total = Fraction(0)
    for a in pos:
        for b in neg:
            total += 1 if a > b else Fraction(1, 2) if a == b else 0
    return float(total / (len(pos) * len(neg)))


def roc_naive(scores, labels):
    """(far, sens) for thresholds at each distinct score (descending) then -inf."""
    P = sum(1 for l in labels if l)
    N = len(labels) - P
    pts = []
    for t in sorted(set(scores), reverse=True) + [-math.inf]:
        tp = sum(1 for s, l in zip(scores, labels) if s > t and l)
        fp = sum(1 for s, l in zip(scores, labels) if s > t and not l)
        pts.append((fp / N, tp / P, t))
    return pts
