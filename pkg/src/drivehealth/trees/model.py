"""Tree data structures, prediction and JSON round-tripping."""

from __future__ import annotations

import json
import math
from collections.abc import Iterator
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..errors import DimensionMismatch
from ..survival import KMCurve

CLASSIFICATION = "classification"
SURVIVAL = "survival"

SCHEMA = "drivehealth.tree"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    max_depth: int = 5
    min_samples_leaf: int = 100
    cp: float = 0.0
    local_search_rounds: int = 20
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.cp < 0:
            raise ValueError("cp must be >= 0")
        if self.local_search_rounds < 0:
            raise ValueError("local_search_rounds must be >= 0")


@dataclass(frozen=True)
class SplitRule:
    """``value < threshold`` goes left; a missing value follows ``missing_goes_left``."""

    feature: int
    threshold: float
    missing_goes_left: bool

    def goes_left(self, values: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            left = values < self.threshold
        return np.where(np.isnan(values), self.missing_goes_left, left)


@dataclass(frozen=True)
class ClassPayload:
    n_samples: int
    positive_count: int

    @property
    def probability(self) -> float:
        return self.positive_count / self.n_samples if self.n_samples else 0.0

    def statistic(self) -> float:
        return self.probability


@dataclass(frozen=True, eq=False)
class SurvivalPayload:
    n_samples: int
    events: int
    exposure: float
    km: KMCurve
    expected_survival_days: float

    def statistic(self) -> float:
        return self.expected_survival_days

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SurvivalPayload):
            return NotImplemented
        return (
            self.n_samples == other.n_samples
            and self.events == other.events
            and self.exposure == other.exposure
            and self.expected_survival_days == other.expected_survival_days
            and self.km == other.km
        )


@dataclass(frozen=True, eq=False)
class Node:
    """Leaf when ``split`` is None. Internal nodes keep the payload of their
    training samples too, so collapsing a node needs no data."""

    split: SplitRule | None = None
    left: Node | None = None
    right: Node | None = None
    payload: ClassPayload | SurvivalPayload | None = None

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    def n_splits(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + self.left.n_splits() + self.right.n_splits()

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def leaves(self) -> Iterator[Node]:
        if self.is_leaf:
            yield self
        else:
            yield from self.left.leaves()
            yield from self.right.leaves()

    def same_shape(self, other: Node) -> bool:
        if self.is_leaf or other.is_leaf:
            return self.is_leaf and other.is_leaf
        return self.split == other.split and self.left.same_shape(other.left) and self.right.same_shape(other.right)


def leaf(payload=None) -> Node:
    return Node(payload=payload)


def internal(split: SplitRule, left: Node, right: Node, payload=None) -> Node:
    return Node(split=split, left=left, right=right, payload=payload)


def strip(node: Node) -> Node:
    """Shape only: same splits, no payloads."""
    if node.is_leaf:
        return leaf()
    return internal(node.split, strip(node.left), strip(node.right))


def get_node(node: Node, path: str) -> Node | None:
    for step in path:
        if node.is_leaf:
            return None
        node = node.left if step == "L" else node.right
    return node


def replace_node(node: Node, path: str, new: Node) -> Node:
    if not path:
        return new
    if path[0] == "L":
        return replace(node, left=replace_node(node.left, path[1:], new))
    return replace(node, right=replace_node(node.right, path[1:], new))


def internal_paths(node: Node, prefix: str = "") -> list[str]:
    if node.is_leaf:
        return []
    return [prefix, *internal_paths(node.left, prefix + "L"), *internal_paths(node.right, prefix + "R")]


@dataclass(frozen=True, eq=False)
class Tree:
    kind: str
    root: Node
    feature_names: tuple[str, ...]
    config: TrainConfig = field(default_factory=TrainConfig)
    tau: float | None = None
    window_days: int | None = None

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def n_splits(self) -> int:
        return self.root.n_splits()

    def depth(self) -> int:
        return self.root.depth()

    def nodes(self) -> list[tuple[int, Node, int]]:
        """Preorder (node_id, node, depth) triples; ids start at 1."""
        out: list[tuple[int, Node, int]] = []

        def walk(node: Node, depth: int) -> None:
            out.append((len(out) + 1, node, depth))
            if not node.is_leaf:
                walk(node.left, depth + 1)
                walk(node.right, depth + 1)

        walk(self.root, 0)
        return out

    def leaf_ids(self) -> list[int]:
        return [i for i, n, _ in self.nodes() if n.is_leaf]


def _as_vector(x) -> np.ndarray:
    values = getattr(x, "values", x)
    return np.asarray(values, dtype=np.float64)


def predict(tree: Tree, x):
    """Route one feature vector to its leaf and return the leaf payload."""
    v = _as_vector(x)
    if v.ndim != 1 or v.size != tree.n_features:
        raise DimensionMismatch(f"expected {tree.n_features} features, got shape {v.shape}")
    node = tree.root
    while not node.is_leaf:
        value = v[node.split.feature]
        if math.isnan(value):
            node = node.left if node.split.missing_goes_left else node.right
        else:
            node = node.left if value < node.split.threshold else node.right
    return node.payload


def apply(tree: Tree, X: np.ndarray) -> np.ndarray:
    """Vectorized routing: preorder id of the leaf reached by each row of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != tree.n_features:
        raise DimensionMismatch(f"expected (n, {tree.n_features}) matrix, got shape {X.shape}")
    out = np.zeros(X.shape[0], dtype=np.int64)
    counter = [0]

    def walk(node: Node, rows: np.ndarray) -> None:
        counter[0] += 1
        node_id = counter[0]
        if node.is_leaf:
            out[rows] = node_id
            return
        go_left = node.split.goes_left(X[rows, node.split.feature])
        walk(node.left, rows[go_left])
        walk(node.right, rows[~go_left])

    walk(tree.root, np.arange(X.shape[0]))
    return out


def leaf_payloads(tree: Tree) -> dict[int, object]:
    return {i: n.payload for i, n, _ in tree.nodes() if n.is_leaf}


# -- JSON --------------------------------------------------------------------


def _payload_to_dict(p) -> dict:
    if isinstance(p, ClassPayload):
        return {"n_samples": p.n_samples, "positive_count": p.positive_count, "probability": p.probability}
    if isinstance(p, SurvivalPayload):
        return {
            "n_samples": p.n_samples,
            "events": p.events,
            "exposure": p.exposure,
            "expected_survival_days": p.expected_survival_days,
            "km": p.km.to_dict(),
        }
    return {}


def _payload_from_dict(kind: str, d: dict):
    if not d:
        return None
    if kind == CLASSIFICATION:
        return ClassPayload(int(d["n_samples"]), int(d["positive_count"]))
    return SurvivalPayload(
        int(d["n_samples"]), int(d["events"]), float(d["exposure"]), KMCurve.from_dict(d["km"]),
        float(d["expected_survival_days"]),
    )


def tree_to_dict(tree: Tree) -> dict:
    counter = [0]

    def node_dict(node: Node, depth: int) -> dict:
        counter[0] += 1
        d: dict = {"id": counter[0], "depth": depth, **_payload_to_dict(node.payload)}
        if not node.is_leaf:
            s = node.split
            d["split"] = {
                "feature": s.feature,
                "feature_name": tree.feature_names[s.feature],
                "threshold": s.threshold,
                "missing_goes_left": s.missing_goes_left,
            }
            d["left"] = node_dict(node.left, depth + 1)
            d["right"] = node_dict(node.right, depth + 1)
        return d

    return {
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "kind": tree.kind,
        "features": list(tree.feature_names),
        "config": asdict(tree.config),
        "tau": tree.tau,
        "window_days": tree.window_days,
        "n_splits": tree.n_splits(),
        "root": node_dict(tree.root, 0),
    }


def tree_from_dict(d: dict) -> Tree:
    if d.get("schema") != SCHEMA:
        raise ValueError(f"not a tree document (schema={d.get('schema')!r})")
    if d.get("version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported tree schema version {d.get('version')!r}")
    kind = d["kind"]

    def build(nd: dict) -> Node:
        payload = _payload_from_dict(kind, {k: v for k, v in nd.items() if k not in ("id", "depth", "split", "left", "right")})
        if "split" not in nd:
            return leaf(payload)
        s = nd["split"]
        rule = SplitRule(int(s["feature"]), float(s["threshold"]), bool(s["missing_goes_left"]))
        return internal(rule, build(nd["left"]), build(nd["right"]), payload)

    return Tree(
        kind=kind,
        root=build(d["root"]),
        feature_names=tuple(d["features"]),
        config=TrainConfig(**d["config"]),
        tau=d.get("tau"),
        window_days=d.get("window_days"),
    )


def dumps(tree: Tree) -> str:
    return json.dumps(tree_to_dict(tree), indent=1, sort_keys=True) + "\n"


def loads(text: str) -> Tree:
    return tree_from_dict(json.loads(text))
