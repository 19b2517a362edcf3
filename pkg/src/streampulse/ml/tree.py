"""Depth-limited CART decision tree and bagged random forest.

Greedy Gini splits; candidate thresholds are midpoints between
consecutive distinct sorted values; ties between candidate splits break
by lowest feature index, then lowest threshold. Trees are scale
invariant and consume raw features.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dataset import Dataset


class EmptyDatasetError(ValueError):
    pass


class ArityMismatch(ValueError):
    pass


@dataclass
class TreeNode:
    # internal nodes carry feature/threshold/children; leaves carry prediction
    n: int
    impurity: float
    class_counts: list[int]
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    prediction: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class DecisionTree:
    root: TreeNode
    max_depth: int
    n_features: int
    n_classes: int


@dataclass
class RandomForest:
    trees: list[DecisionTree]
    mtry: int
    n_trees: int
    seed: int
    n_features: int
    n_classes: int


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _best_split(X, y, n_classes, feature_indices):
    """Minimum weighted-Gini split over the given features.

    Returns (feature, threshold, weighted_impurity) or None when no
    feature has two distinct values.
    """
    n = y.shape[0]
    best = None  # (weighted_impurity, feature, threshold)
    for f in sorted(feature_indices):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        # cumulative class counts over the sorted column
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), ys] = 1.0
        cum = np.cumsum(onehot, axis=0)
        total = cum[-1]
        distinct = np.nonzero(xs[1:] > xs[:-1])[0]  # split after position i
        for i in distinct:
            left = cum[i]
            right = total - left
            nl = i + 1
            nr = n - nl
            gl = 1.0 - np.sum((left / nl) ** 2)
            gr = 1.0 - np.sum((right / nr) ** 2)
            weighted = (nl * gl + nr * gr) / n
            threshold = (xs[i] + xs[i + 1]) / 2.0
            key = (weighted, f, threshold)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    weighted, f, threshold = best
    return f, float(threshold), float(weighted)


def _grow(X, y, n_classes, depth, max_depth, min_samples_split, rng, mtry):
    counts = np.bincount(y, minlength=n_classes)
    node = TreeNode(
        n=int(y.shape[0]),
        impurity=_gini(counts),
        class_counts=[int(c) for c in counts],
    )
    if (
        depth >= max_depth
        or y.shape[0] < min_samples_split
        or node.impurity == 0.0
    ):
        node.prediction = int(np.argmax(counts))
        return node
    if mtry is not None and mtry < X.shape[1]:
        features = rng.choice(X.shape[1], size=mtry, replace=False)
    else:
        features = range(X.shape[1])
    split = _best_split(X, y, n_classes, features)
    if split is None:
        node.prediction = int(np.argmax(counts))
        return node
    f, threshold, _ = split
    mask = X[:, f] <= threshold
    node.feature = int(f)
    node.threshold = threshold
    node.left = _grow(X[mask], y[mask], n_classes, depth + 1, max_depth,
                      min_samples_split, rng, mtry)
    node.right = _grow(X[~mask], y[~mask], n_classes, depth + 1, max_depth,
                       min_samples_split, rng, mtry)
    return node


def train_tree(
    ds: Dataset,
    max_depth: int = 5,
    min_samples_split: int = 2,
    mtry: int | None = None,
    rng: np.random.Generator | None = None,
) -> DecisionTree:
    if ds.n_rows == 0 or ds.n_features == 0:
        raise EmptyDatasetError("need at least one row and one feature")
    n_classes = int(ds.y.max()) + 1 if ds.n_rows else 2
    n_classes = max(n_classes, 2)
    if rng is None:
        rng = np.random.default_rng(0)
    root = _grow(ds.X, ds.y, n_classes, 0, max_depth, min_samples_split, rng, mtry)
    return DecisionTree(root=root, max_depth=max_depth,
                        n_features=ds.n_features, n_classes=n_classes)


def predict_tree(tree: DecisionTree, row) -> int:
    row = np.asarray(row, dtype=float)
    if row.shape[0] != tree.n_features:
        raise ArityMismatch(f"expected {tree.n_features} features, got {row.shape[0]}")
    node = tree.root
    while not node.is_leaf:
        node = node.left if row[node.feature] <= node.threshold else node.right
    return int(node.prediction)


def train_forest(
    ds: Dataset,
    n_trees: int = 100,
    max_depth: int = 5,
    mtry: int | None = None,
    seed: int = 0,
    bootstrap: bool = True,
) -> RandomForest:
    """Bootstrap-aggregated trees with per-split feature subsampling.

    Per-tree seeds are seed + tree index, so parallel and serial training
    would agree bit for bit. bootstrap=False (test hook) trains every
    tree on the full dataset in order.
    """
    if ds.n_rows == 0:
        raise EmptyDatasetError("empty dataset")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if mtry is None:
        mtry = math.ceil(math.sqrt(ds.n_features))
    trees = []
    n_classes = max(int(ds.y.max()) + 1, 2)
    for t in range(n_trees):
        rng = np.random.default_rng(seed + t)
        if bootstrap:
            idx = rng.integers(0, ds.n_rows, size=ds.n_rows)
        else:
            idx = np.arange(ds.n_rows)
        sub = Dataset(X=ds.X[idx], y=ds.y[idx], feature_names=ds.feature_names)
        tree = train_tree(sub, max_depth=max_depth, mtry=mtry, rng=rng)
        tree.n_classes = n_classes
        trees.append(tree)
    return RandomForest(trees=trees, mtry=mtry, n_trees=n_trees, seed=seed,
                        n_features=ds.n_features, n_classes=n_classes)


def predict_forest(forest: RandomForest, row) -> tuple[int, dict[int, int]]:
    """Majority vote over trees; ties go to class 0 for determinism."""
    votes: dict[int, int] = {}
    for tree in forest.trees:
        c = predict_tree(tree, row)
        votes[c] = votes.get(c, 0) + 1
    best = max(votes.items(), key=lambda kv: (kv[1], -kv[0]))
    return best[0], votes


def predict(model, row):
    if isinstance(model, DecisionTree):
        return predict_tree(model, row)
    if isinstance(model, RandomForest):
        return predict_forest(model, row)[0]
    raise TypeError(f"cannot predict with {type(model).__name__}")


def tree_depth(tree: DecisionTree) -> int:
    def walk(node, d):
        if node.is_leaf:
            return d
        return max(walk(node.left, d + 1), walk(node.right, d + 1))

    return walk(tree.root, 0)


def _tree_importance_raw(tree: DecisionTree) -> np.ndarray:
    """Total Gini impurity decrease per feature, summed over nodes."""
    raw = np.zeros(tree.n_features)

    def walk(node):
        if node.is_leaf:
            return
        child_impurity = (
            node.left.n * node.left.impurity + node.right.n * node.right.impurity
        ) / node.n
        raw[node.feature] += node.n * (node.impurity - child_impurity)
        walk(node.left)
        walk(node.right)

    walk(tree.root)
    return raw


def feature_importance(model, feature_names: list[str] | None = None):
    """Normalized Gini importance, descending; ties break by feature index.

    Forests average the per-tree raw decreases before normalizing.
    Returns [] for a model with no splits.
    """
    if isinstance(model, DecisionTree):
        raw = _tree_importance_raw(model)
    elif isinstance(model, RandomForest):
        raw = np.mean([_tree_importance_raw(t) for t in model.trees], axis=0)
    else:
        raise TypeError(f"no feature importance for {type(model).__name__}")
    total = raw.sum()
    if total == 0.0:
        return []
    norm = raw / total
    order = sorted(range(len(norm)), key=lambda i: (-norm[i], i))
    if feature_names is not None:
        return [(feature_names[i], float(norm[i])) for i in order if norm[i] > 0]
    return [(i, float(norm[i])) for i in order if norm[i] > 0]


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def _node_to_dict(node: TreeNode) -> dict:
    doc = {
        "n": node.n,
        "impurity": node.impurity,
        "class_counts": node.class_counts,
    }
    if node.is_leaf:
        doc["prediction"] = node.prediction
    else:
        doc.update(
            feature=node.feature,
            threshold=node.threshold,
            left=_node_to_dict(node.left),
            right=_node_to_dict(node.right),
        )
    return doc


def _node_from_dict(doc: dict) -> TreeNode:
    node = TreeNode(
        n=doc["n"], impurity=doc["impurity"], class_counts=list(doc["class_counts"])
    )
    if "prediction" in doc:
        node.prediction = doc["prediction"]
    else:
        node.feature = doc["feature"]
        node.threshold = doc["threshold"]
        node.left = _node_from_dict(doc["left"])
        node.right = _node_from_dict(doc["right"])
    return node


def tree_to_dict(tree: DecisionTree) -> dict:
    return {
        "kind": "decision_tree",
        "max_depth": tree.max_depth,
        "n_features": tree.n_features,
        "n_classes": tree.n_classes,
        "root": _node_to_dict(tree.root),
    }


def tree_from_dict(doc: dict) -> DecisionTree:
    return DecisionTree(
        root=_node_from_dict(doc["root"]),
        max_depth=doc["max_depth"],
        n_features=doc["n_features"],
        n_classes=doc["n_classes"],
    )


def forest_to_dict(forest: RandomForest) -> dict:
    return {
        "kind": "random_forest",
        "mtry": forest.mtry,
        "n_trees": forest.n_trees,
        "seed": forest.seed,
        "n_features": forest.n_features,
        "n_classes": forest.n_classes,
        "trees": [tree_to_dict(t) for t in forest.trees],
    }


def forest_from_dict(doc: dict) -> RandomForest:
    return RandomForest(
        trees=[tree_from_dict(t) for t in doc["trees"]],
        mtry=doc["mtry"],
        n_trees=doc["n_trees"],
        seed=doc["seed"],
        n_features=doc["n_features"],
        n_classes=doc["n_classes"],
    )


def save_model(model, path: str | Path) -> None:
    from .ocsvm import OneClassSvm, ocsvm_to_dict

    if isinstance(model, DecisionTree):
        doc = tree_to_dict(model)
    elif isinstance(model, RandomForest):
        doc = forest_to_dict(model)
    elif isinstance(model, OneClassSvm):
        doc = ocsvm_to_dict(model)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path: str | Path):
    from .ocsvm import ocsvm_from_dict

    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = doc.get("kind")
    if kind == "decision_tree":
        return tree_from_dict(doc)
    if kind == "random_forest":
        return forest_from_dict(doc)
    if kind == "one_class_svm":
        return ocsvm_from_dict(doc)
    raise ValueError(f"unknown model kind {kind!r}")
