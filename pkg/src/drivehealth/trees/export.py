"""Graphviz DOT and per-leaf Kaplan-Meier CSV rendering of trained trees."""

from __future__ import annotations

from ..survival import km_to_csv
from .model import CLASSIFICATION, SURVIVAL, Tree

# light to dark; higher leaf statistic gets the darker end
_LIGHT = (0xF7, 0xFB, 0xFF)
_DARK = (0x08, 0x30, 0x6B)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def shade(value: float, lo: float, hi: float) -> tuple[str, float]:
    """Fill colour for ``value`` on the [lo, hi] scale and its darkness in [0, 1]."""
    frac = 0.0 if hi <= lo else (value - lo) / (hi - lo)
    frac = min(max(frac, 0.0), 1.0)
    rgb = (round(a + (b - a) * frac) for a, b in zip(_LIGHT, _DARK))
    return "#" + "".join(f"{c:02x}" for c in rgb), frac


def _leaf_label(tree: Tree, node_id: int, payload) -> str:
    if payload is None:
        return f"leaf {node_id}"
    if tree.kind == CLASSIFICATION:
        return f"leaf {node_id}\nn = {payload.n_samples}\np(fail) = {payload.probability:.4f}"
    return (
        f"leaf {node_id}\nn = {payload.n_samples}, events = {payload.events}\n"
        f"expected survival = {payload.expected_survival_days:.1f} d"
    )


def _size(node) -> int:
    return 1 if node.is_leaf else 1 + _size(node.left) + _size(node.right)


def to_dot(tree: Tree, name: str = "tree") -> str:
    """DOT digraph; leaves are shaded by probability (classification) or
    expected survival days (survival), darker meaning a larger value."""
    nodes = tree.nodes()
    stats = [n.payload.statistic() for _, n, _ in nodes if n.is_leaf and n.payload is not None]
    lo, hi = (min(stats), max(stats)) if stats else (0.0, 0.0)
    lines = [f"digraph {_quote(name)} {{", '  node [shape=box, style="rounded,filled", fontname="Helvetica"];']
    for i, node, _ in nodes:
        if node.is_leaf:
            attrs = {"label": _leaf_label(tree, i, node.payload)}
            if node.payload is not None:
                color, frac = shade(node.payload.statistic(), lo, hi)
                attrs["fillcolor"] = color
                attrs["fontcolor"] = "white" if frac > 0.5 else "black"
            else:
                attrs["fillcolor"] = "white"
        else:
            s = node.split
            attrs = {"label": f"{tree.feature_names[s.feature]} < {s.threshold:g}", "fillcolor": "white"}
        body = ", ".join(f"{k}={_quote(v)}" for k, v in attrs.items())
        lines.append(f"  n{i} [{body}];")
    for i, node, _ in nodes:
        if node.is_leaf:
            continue
        miss = node.split.missing_goes_left
        yes = "yes, missing" if miss else "yes"
        no = "no" if miss else "no, missing"
        right = i + 1 + _size(node.left)
        lines.append(f"  n{i} -> n{i + 1} [label={_quote(yes)}];")
        lines.append(f"  n{i} -> n{right} [label={_quote(no)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def km_tables(tree: Tree) -> dict[int, str]:
    """KM curve CSV per survival leaf, keyed by preorder leaf id."""
    if tree.kind != SURVIVAL:
        raise ValueError("KM tables need a survival tree")
    return {i: km_to_csv(n.payload.km) for i, n, _ in tree.nodes() if n.is_leaf and n.payload is not None}
