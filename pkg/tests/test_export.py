from __future__ import annotations

import re

import numpy as np
import pydot
import pytest

from drivehealth.survival import kaplan_meier, km_to_csv
from drivehealth.trees import ClassificationData, SurvivalData, TrainConfig, fit
from drivehealth.trees.export import km_tables, shade, to_dot
from drivehealth.trees.learn import materialize
from drivehealth.trees.model import CLASSIFICATION, SURVIVAL, SplitRule, Tree, internal, leaf


def _fill(dot: str, node: str) -> str:
    return re.search(rf'{node} \[.*fillcolor="(#[0-9a-f]{{6}})"', dot).group(1)


def test_single_leaf_has_no_edges():
    data = ClassificationData(np.zeros((4, 1)), np.array([1, 0, 0, 0], dtype=bool))
    dot = to_dot(Tree(CLASSIFICATION, materialize(leaf(), data), ("x",)))
    assert dot.count("[label=") == 1 and "->" not in dot
    assert "p(fail) = 0.2500" in dot


def test_longer_expected_survival_is_darker():
    X = np.array([[0.0]] * 10 + [[1.0]] * 10)
    t = np.array([10] * 10 + [600] * 10)
    data = SurvivalData(X, t, np.array([True] * 10 + [False] * 10))
    shape = internal(SplitRule(0, 0.5, True), leaf(), leaf())
    tree = Tree(SURVIVAL, materialize(shape, data, tau=600.0), ("x",), tau=600.0)
    dot = to_dot(tree)
    short, long = _fill(dot, "n2"), _fill(dot, "n3")
    assert sum(int(long[i:i + 2], 16) for i in (1, 3, 5)) < sum(int(short[i:i + 2], 16) for i in (1, 3, 5))
    assert "expected survival = 600.0 d" in dot and "expected survival = 10.0 d" in dot


def test_shade_endpoints():
    assert shade(0, 0, 1) == ("#f7fbff", 0.0)
    assert shade(1, 0, 1) == ("#08306b", 1.0)
    assert shade(5, 5, 5)[1] == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_dot_parses_and_edges_match_structure(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 10, size=(300, 3)).astype(float)
    data = ClassificationData(X, (X[:, 0] + X[:, 2] > 10) ^ (rng.random(300) < 0.1), ("a", "b", 'c"q'))
    tree = fit(data, TrainConfig(max_depth=3, min_samples_leaf=5))
    dot = to_dot(tree, name="t")
    graphs = pydot.graph_from_dot_data(dot)
    assert graphs and len(graphs) == 1
    g = graphs[0]
    edges = sorted((e.get_source(), e.get_destination()) for e in g.get_edges())
    expected = []

    def walk(node, i):
        if node.is_leaf:
            return i + 1
        nxt = walk(node.left, i + 1)
        expected.extend([(f"n{i}", f"n{i + 1}"), (f"n{i}", f"n{nxt}")])
        return walk(node.right, nxt)

    walk(tree.root, 1)
    assert edges == sorted(expected)
    assert len(edges) == 2 * tree.n_splits()


def test_km_tables_per_leaf():
    X = np.array([[0.0], [0.0], [1.0], [1.0]])
    data = SurvivalData(X, np.array([5, 9, 3, 7]), np.array([True, False, True, True]))
    shape = internal(SplitRule(0, 0.5, True), leaf(), leaf())
    tree = Tree(SURVIVAL, materialize(shape, data, tau=9.0), ("x",), tau=9.0)
    tables = km_tables(tree)
    assert set(tables) == {2, 3}
    assert tables[3] == km_to_csv(kaplan_meier([3, 7], [True, True]))


def test_km_tables_reject_classification():
    with pytest.raises(ValueError):
        km_tables(Tree(CLASSIFICATION, leaf(), ("x",)))
