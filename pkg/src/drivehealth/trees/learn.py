"""Tree induction: greedy growth, objective-driven local search, pruning.

Global objectives (lower is better):

* classification: misclassified / n + cp * splits, leaves predicting their
  majority label;
* survival: sum over leaves of the exponential-model deviance
  ``D - D * log(D / T)`` (D events, T days at risk) + cp * splits. A leaf
  without events scores 0.5, the deviance at the continuity-corrected rate
  ``0.5 / T``.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace

import numpy as np

from ..errors import EmptyDataset
from ..survival import kaplan_meier, log_rank, restricted_mean_survival
from ..telemetry import SmartKey
from .data import ClassificationData, LearningData, SurvivalData
from .model import (
    CLASSIFICATION,
    SURVIVAL,
    ClassPayload,
    Node,
    SplitRule,
    SurvivalPayload,
    TrainConfig,
    Tree,
    get_node,
    internal,
    internal_paths,
    leaf,
    replace_node,
    strip,
)
from .splits import best_split_any, gini, midpoints

logger = logging.getLogger(__name__)

# exposure floor (days) so a leaf whose samples all have duration 0 stays finite
MIN_EXPOSURE = 1.0
ZERO_EVENT_LOSS = 0.5
# a move must lower the objective by more than this (relative) to count
IMPROVE_RTOL = 1e-12


# -- leaf losses -------------------------------------------------------------


def _class_stats(data: ClassificationData, idx: np.ndarray) -> np.ndarray:
    return np.array([idx.size, int(data.labels[idx].sum())], dtype=np.float64)


def _surv_stats(data: SurvivalData, idx: np.ndarray) -> np.ndarray:
    return np.array([idx.size, int(data.events[idx].sum()), float(data.durations[idx].sum())], dtype=np.float64)


def node_stats(data: LearningData, idx: np.ndarray) -> np.ndarray:
    return _class_stats(data, idx) if data.kind == CLASSIFICATION else _surv_stats(data, idx)


def leaf_loss(kind: str, stats: np.ndarray) -> np.ndarray:
    """Vectorized loss for stats arrays shaped (..., 2) or (..., 3)."""
    if kind == CLASSIFICATION:
        n, pos = stats[..., 0], stats[..., 1]
        return np.minimum(pos, n - pos)
    d = stats[..., 1]
    t = np.maximum(stats[..., 2], MIN_EXPOSURE)
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = d - d * np.log(d / t)
    return np.where(d > 0, dev, ZERO_EVENT_LOSS)


def _norm(kind: str, n_total: int) -> float:
    return float(n_total) if kind == CLASSIFICATION else 1.0


def _payload_stats(kind: str, payload) -> np.ndarray:
    if kind == CLASSIFICATION:
        return np.array([payload.n_samples, payload.positive_count], dtype=np.float64)
    return np.array([payload.n_samples, payload.events, payload.exposure], dtype=np.float64)


# -- routing -----------------------------------------------------------------


def route(node: Node, X: np.ndarray, idx: np.ndarray) -> list[np.ndarray]:
    """Row indices reaching each leaf of ``node``, leaves in preorder."""
    if node.is_leaf:
        return [idx]
    go_left = node.split.goes_left(X[idx, node.split.feature])
    return route(node.left, X, idx[go_left]) + route(node.right, X, idx[~go_left])


def _rows_at(root: Node, path: str, X: np.ndarray, idx: np.ndarray) -> np.ndarray:
    node = root
    for step in path:
        go_left = node.split.goes_left(X[idx, node.split.feature])
        idx = idx[go_left] if step == "L" else idx[~go_left]
        node = node.left if step == "L" else node.right
    return idx


def _leaf_index(node: Node, X: np.ndarray, idx: np.ndarray) -> tuple[np.ndarray, int]:
    """Position (preorder among the subtree's leaves) of the leaf each row of ``idx`` reaches."""
    out = np.zeros(idx.size, dtype=np.int64)
    if node.is_leaf:
        return out, 1
    parts = route(node, X[idx], np.arange(idx.size))
    for k, rows in enumerate(parts):
        out[rows] = k
    return out, len(parts)


# -- payloads ----------------------------------------------------------------


def _payload(data: LearningData, idx: np.ndarray, tau: float | None):
    if data.kind == CLASSIFICATION:
        return ClassPayload(int(idx.size), int(data.labels[idx].sum()))
    t, e = data.durations[idx], data.events[idx]
    km = kaplan_meier(t, e)
    expected = restricted_mean_survival(km, tau) if tau and tau > 0 else 0.0
    return SurvivalPayload(int(idx.size), int(e.sum()), float(t.sum()), km, expected)


def materialize(shape: Node, data: LearningData, idx: np.ndarray | None = None, tau: float | None = None) -> Node:
    """Attach payloads computed from the rows reaching every node."""
    if idx is None:
        idx = np.arange(data.n)
    payload = _payload(data, idx, tau)
    if shape.is_leaf:
        return leaf(payload)
    go_left = shape.split.goes_left(data.X[idx, shape.split.feature])
    return internal(
        shape.split,
        materialize(shape.left, data, idx[go_left], tau),
        materialize(shape.right, data, idx[~go_left], tau),
        payload,
    )


def survival_tau(data: LearningData) -> float | None:
    """Horizon for leaf expected survival: the longest observed duration."""
    if data.kind != SURVIVAL or data.n == 0:
        return None
    return float(data.durations.max())


def _make_tree(shape: Node, data: LearningData, config: TrainConfig, window_days: int | None) -> Tree:
    tau = survival_tau(data)
    if data.kind == SURVIVAL and window_days is None and tau is not None:
        window_days = int(tau) + 1
    return Tree(data.kind, materialize(shape, data, tau=tau), tuple(data.feature_names), config, tau, window_days)


# -- greedy growth -----------------------------------------------------------


def grow_greedy(data: LearningData, config: TrainConfig, criterion: str | None = None,
                window_days: int | None = None) -> Tree:
    """Top-down induction with the best single-feature split at every node."""
    if data.n == 0:
        raise EmptyDataset("cannot grow a tree on an empty dataset")
    msl = config.min_samples_leaf

    def grow(idx: np.ndarray, depth: int) -> Node:
        if depth >= config.max_depth or idx.size < 2 * msl:
            return leaf()
        if data.kind == CLASSIFICATION:
            pos = int(data.labels[idx].sum())
            if pos == 0 or pos == idx.size:
                return leaf()
        cand = best_split_any(data, idx, msl, criterion, n_jobs=config.n_jobs)
        if cand is None:
            return leaf()
        rule = SplitRule(cand.feature, cand.threshold, cand.missing_goes_left)
        go_left = rule.goes_left(data.X[idx, rule.feature])
        return internal(rule, grow(idx[go_left], depth + 1), grow(idx[~go_left], depth + 1))

    return _make_tree(grow(np.arange(data.n), 0), data, config, window_days)


# -- objective ---------------------------------------------------------------


def tree_objective(tree: Tree | Node, data: LearningData, cp: float) -> float:
    """Global objective of ``tree`` evaluated on ``data``."""
    root = tree.root if isinstance(tree, Tree) else tree
    parts = route(root, data.X, np.arange(data.n))
    loss = sum(float(leaf_loss(data.kind, node_stats(data, rows))) for rows in parts)
    return loss / _norm(data.kind, data.n) + cp * root.n_splits()


def _subtree_loss(node: Node, data: LearningData, idx: np.ndarray) -> float:
    return sum(float(leaf_loss(data.kind, node_stats(data, rows))) for rows in route(node, data.X, idx))


# -- local search ------------------------------------------------------------


def _sample_stats(data: LearningData, idx: np.ndarray) -> np.ndarray:
    """Per-row additive statistics, shape (len(idx), S)."""
    if data.kind == CLASSIFICATION:
        return np.column_stack([np.ones(idx.size), data.labels[idx].astype(np.float64)])
    return np.column_stack([
        np.ones(idx.size), data.events[idx].astype(np.float64), data.durations[idx].astype(np.float64),
    ])


def _grouped_leaf_sums(group: np.ndarray, n_groups: int, leaf_id: np.ndarray, n_leaves: int,
                       stats: np.ndarray) -> np.ndarray:
    """Sum stats per (group, leaf); returns (n_groups, n_leaves, S)."""
    flat = group * n_leaves + leaf_id
    out = np.empty((n_groups, n_leaves, stats.shape[1]))
    for s in range(stats.shape[1]):
        out[:, :, s] = np.bincount(flat, weights=stats[:, s], minlength=n_groups * n_leaves).reshape(n_groups, n_leaves)
    return out


@dataclass(frozen=True)
class _Move:
    loss: float
    rule: SplitRule


def best_replacement(node: Node, data: LearningData, idx: np.ndarray, min_samples_leaf: int,
                     features: Sequence[int] | None = None) -> _Move | None:
    """Best split for ``node`` keeping both child subtrees fixed.

    Every row reaching the node is routed through *both* child subtrees up
    front; a candidate threshold then only decides which of the two leaf
    assignments applies, so all thresholds of a feature are scored with
    prefix sums.
    """
    kind = data.kind
    X = data.X
    a_left, n_ll = _leaf_index(node.left, X, idx)
    a_right, n_rl = _leaf_index(node.right, X, idx)
    stats = _sample_stats(data, idx)
    S = stats.shape[1]
    features = range(X.shape[1]) if features is None else features

    best: tuple | None = None
    for f in features:
        x = X[idx, f]
        miss = np.isnan(x)
        present = np.flatnonzero(~miss)
        if present.size < 2:
            continue
        order = present[np.argsort(x[present], kind="stable")]
        xs = x[order]
        change = np.empty(xs.size, dtype=bool)
        change[0] = True
        change[1:] = xs[1:] != xs[:-1]
        values = xs[change]
        G = values.size
        if G < 2:
            continue
        group = np.cumsum(change) - 1
        st = stats[order]
        left_pref = _grouped_leaf_sums(group, G, a_left[order], n_ll, st).cumsum(axis=0)[:-1]
        right_pref = _grouped_leaf_sums(group, G, a_right[order], n_rl, st).cumsum(axis=0)[:-1]
        right_tot = np.zeros((n_rl, S))
        np.add.at(right_tot, a_right[order], st)
        miss_l = np.zeros((n_ll, S))
        miss_r = np.zeros((n_rl, S))
        if miss.any():
            np.add.at(miss_l, a_left[miss], stats[miss])
            np.add.at(miss_r, a_right[miss], stats[miss])
        thr = midpoints(values)
        for ml in (True, False):
            ls = left_pref + (miss_l if ml else 0.0)
            rs = (right_tot - right_pref) + (0.0 if ml else miss_r)
            ok = (ls[:, :, 0] >= min_samples_leaf).all(axis=1) & (rs[:, :, 0] >= min_samples_leaf).all(axis=1)
            if not ok.any():
                continue
            loss = leaf_loss(kind, ls).sum(axis=1) + leaf_loss(kind, rs).sum(axis=1)
            loss = np.where(ok, loss, np.inf)
            c = int(np.argmin(loss))
            key = (float(loss[c]), float(thr[c]), f, not ml)
            if best is None or _better(key, best[0]):
                best = (key, _Move(float(loss[c]), SplitRule(f, float(thr[c]), ml)))
    return None if best is None else best[1]


def _better(a: tuple, b: tuple) -> bool:
    """Lower loss wins; near-equal losses fall back to threshold, feature, side."""
    tol = IMPROVE_RTOL * max(1.0, abs(b[0]))
    if a[0] < b[0] - tol:
        return True
    if a[0] > b[0] + tol:
        return False
    return a[1:] < b[1:]


def local_search(
    tree: Tree, data: LearningData, config: TrainConfig,
    on_accept: Callable[[Tree, float], None] | None = None,
) -> Tree:
    """Seeded coordinate descent over the internal nodes of ``tree``.

    Each pass visits the internal nodes in a random order. At a node the
    candidate moves are the best replacement split (child subtrees kept
    as they are) and collapsing the node into a leaf; the better move is
    applied only if it strictly lowers the objective. Stops after a pass
    without changes or after ``config.local_search_rounds`` passes.

    ``on_accept(tree, objective)`` is called after every accepted move.
    """
    rng = np.random.default_rng(config.seed)
    kind = data.kind
    norm = _norm(kind, data.n)
    cp = config.cp
    all_rows = np.arange(data.n)
    shape = strip(tree.root)
    objective = tree_objective(shape, data, cp)

    for _ in range(config.local_search_rounds):
        changed = False
        paths = internal_paths(shape)
        for i in rng.permutation(len(paths)):
            path = paths[i]
            node = get_node(shape, path)
            if node is None or node.is_leaf:
                continue  # removed by an earlier collapse in this pass
            idx = _rows_at(shape, path, data.X, all_rows)
            splits = node.n_splits()
            current = _subtree_loss(node, data, idx) / norm + cp * splits
            tol = IMPROVE_RTOL * max(1.0, abs(objective))

            candidate, new_node = current, None
            collapse = float(leaf_loss(kind, node_stats(data, idx))) / norm
            if collapse < candidate - tol:
                candidate, new_node = collapse, leaf()
            move = best_replacement(node, data, idx, config.min_samples_leaf)
            if move is not None:
                replaced = move.loss / norm + cp * splits
                if replaced < candidate - tol:
                    candidate, new_node = replaced, replace(node, split=move.rule)
            if new_node is None:
                continue
            shape = replace_node(shape, path, new_node)
            objective = tree_objective(shape, data, cp)
            changed = True
            if on_accept is not None:
                on_accept(_make_tree(shape, data, config, tree.window_days), objective)
        if not changed:
            break
    return _make_tree(shape, data, config, tree.window_days)


# -- pruning -----------------------------------------------------------------


def prune(tree: Tree, cp: float) -> Tree:
    """Bottom-up collapse of every node whose collapse does not raise the objective.

    Uses the training statistics stored on each node, so no data is needed.
    With children already pruned this is the usual dynamic program and
    returns the smallest objective-minimizing pruned subtree.
    """
    kind = tree.kind
    norm = _norm(kind, tree.root.payload.n_samples)

    def walk(node: Node) -> tuple[Node, float]:
        own = float(leaf_loss(kind, _payload_stats(kind, node.payload))) / norm
        if node.is_leaf:
            return node, own
        left, lc = walk(node.left)
        right, rc = walk(node.right)
        kept = lc + rc + cp
        if own <= kept + IMPROVE_RTOL * max(1.0, abs(kept)):
            return leaf(node.payload), own
        return replace(node, left=left, right=right), kept

    root, _ = walk(tree.root)
    return replace(tree, root=root)


# -- importance --------------------------------------------------------------


def split_gain(data: LearningData, idx: np.ndarray, rule: SplitRule) -> float:
    """Criterion value of a fixed split on the rows ``idx``."""
    go_left = rule.goes_left(data.X[idx, rule.feature])
    left, right = idx[go_left], idx[~go_left]
    if left.size == 0 or right.size == 0:
        return 0.0
    if data.kind == CLASSIFICATION:
        y = data.labels
        n = idx.size
        return float(
            gini(y[idx].sum(), n) - left.size / n * gini(y[left].sum(), left.size)
            - right.size / n * gini(y[right].sum(), right.size)
        )
    return log_rank(data.durations[left], data.events[left], data.durations[right], data.events[right])


@dataclass(frozen=True)
class Importance:
    by_feature: dict[str, float]
    by_attr: dict[int, float]

    def ranked_attrs(self) -> list[int]:
        return sorted(self.by_attr, key=lambda a: (-self.by_attr[a], a))

    def ranked_features(self) -> list[str]:
        return sorted(self.by_feature, key=lambda f: (-self.by_feature[f], f))


def variable_importance(tree: Tree, data: LearningData) -> Importance:
    """Node-fraction weighted split gains per feature, normalized to sum 1.

    Scores are also summed per SMART attribute id, merging the raw and
    normalized variants of the same id.
    """
    raw = dict.fromkeys(tree.feature_names, 0.0)
    n = data.n

    def walk(node: Node, idx: np.ndarray) -> None:
        if node.is_leaf or idx.size == 0:
            return
        name = tree.feature_names[node.split.feature]
        raw[name] += idx.size / n * split_gain(data, idx, node.split)
        go_left = node.split.goes_left(data.X[idx, node.split.feature])
        walk(node.left, idx[go_left])
        walk(node.right, idx[~go_left])

    walk(tree.root, np.arange(n))
    total = sum(raw.values())
    by_feature = {k: (v / total if total > 0 else 0.0) for k, v in raw.items()}
    by_attr: dict[int, float] = {}
    for name, v in by_feature.items():
        try:
            attr = SmartKey.parse(name).attr
        except ValueError:
            continue
        by_attr[attr] = by_attr.get(attr, 0.0) + v
    return Importance(by_feature, by_attr)


# -- full pipeline -----------------------------------------------------------


def fit(data: LearningData, config: TrainConfig, window_days: int | None = None) -> Tree:
    """Greedy growth, then local search, then pruning at ``config.cp``."""
    tree = grow_greedy(data, config, window_days=window_days)
    tree = local_search(tree, data, config)
    return prune(tree, config.cp)


CP_GRID = (0.0, 1e-5, 1e-4, 1e-3, 1e-2)


def select_cp(train: LearningData, valid: LearningData, config: TrainConfig,
              grid: Sequence[float] = CP_GRID, window_days: int | None = None) -> tuple[float, Tree]:
    """Fit one tree per cp and keep the one with the lowest validation loss.

    Validation loss is the objective at cp = 0; ties go to the larger cp.
    """
    best: tuple[float, float, Tree] | None = None
    for cp in sorted(grid):
        tree = fit(train, replace(config, cp=cp), window_days)
        score = tree_objective(tree, valid, 0.0)
        if best is None or score <= best[1] + IMPROVE_RTOL * max(1.0, abs(best[1])):
            best = (cp, score, tree)
    assert best is not None
    logger.info("selected cp=%g (validation objective %.6g)", best[0], best[1])
    return best[0], best[2]
