"""Axis-aligned classification and survival trees."""

from .data import ClassificationData, SurvivalData
from .learn import (
    Importance,
    fit,
    grow_greedy,
    local_search,
    prune,
    select_cp,
    tree_objective,
    variable_importance,
)
from .model import (
    CLASSIFICATION,
    SURVIVAL,
    ClassPayload,
    Node,
    SplitRule,
    SurvivalPayload,
    TrainConfig,
    Tree,
    apply,
    dumps,
    loads,
    predict,
)
from .splits import GINI, LOGRANK, SplitCandidate, best_split, best_split_any

__all__ = [
    "CLASSIFICATION", "SURVIVAL", "GINI", "LOGRANK",
    "ClassificationData", "SurvivalData", "ClassPayload", "SurvivalPayload", "Node", "SplitRule",
    "TrainConfig", "Tree", "SplitCandidate", "Importance",
    "apply", "predict", "dumps", "loads", "best_split", "best_split_any",
    "fit", "grow_greedy", "local_search", "prune", "select_cp", "tree_objective", "variable_importance",
]
