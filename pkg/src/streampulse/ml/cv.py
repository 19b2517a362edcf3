"""Stratified k-fold cross-validation with Table-style metrics.

Positive class is "impactful" (label 1). Precision = TP/(TP+FP),
recall = TP/(TP+FN), F1 their harmonic mean, with 0/0 defined as 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dataset import Dataset
from .ocsvm import train_ocsvm
from .tree import predict_forest, predict_tree, train_forest, train_tree


class InsufficientRows(ValueError):
    pass


@dataclass
class FoldMetrics:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def accuracy(self) -> float:
        total = self.tp + self.fp + self.fn + self.tn
        return (self.tp + self.tn) / total if total else 0.0

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if (p + r) else 0.0

    def as_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass
class CvReport:
    model: str
    folds: list[FoldMetrics]
    fold_assignment: list[int]
    seed: int
    params: dict = field(default_factory=dict)

    def mean(self, metric: str) -> float:
        return float(np.mean([getattr(f, metric) for f in self.folds]))

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "seed": self.seed,
            "params": self.params,
            "folds": [f.as_dict() for f in self.folds],
            "fold_assignment": self.fold_assignment,
            "means": {
                m: self.mean(m) for m in ("accuracy", "precision", "recall", "f1")
            },
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.as_dict(), indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text


def stratified_folds(y, folds: int, seed: int) -> np.ndarray:
    """Fold index per row; per-class fold sizes differ by at most one."""
    y = np.asarray(y, dtype=int)
    rng = np.random.default_rng(seed)
    assignment = np.full(y.shape[0], -1, dtype=int)
    offset = 0
    for cls in np.unique(y):
        idx = np.nonzero(y == cls)[0]
        if idx.size < folds:
            raise InsufficientRows(
                f"class {cls} has {idx.size} rows, need >= {folds} for stratification"
            )
        rng.shuffle(idx)
        for pos, row in enumerate(idx):
            assignment[row] = (pos + offset) % folds
        offset += idx.size % folds  # rotate so remainders spread across folds
    return assignment


def _fit_predict(model_spec: dict, train: Dataset, test_X: np.ndarray) -> np.ndarray:
    kind = model_spec.get("model", "dt")
    if kind == "dt":
        tree = train_tree(
            train,
            max_depth=int(model_spec.get("max_depth", 5)),
            min_samples_split=int(model_spec.get("min_samples_split", 2)),
        )
        return np.array([predict_tree(tree, row) for row in test_X])
    if kind == "rf":
        forest = train_forest(
            train,
            n_trees=int(model_spec.get("n_trees", 100)),
            max_depth=int(model_spec.get("max_depth", 5)),
            mtry=model_spec.get("mtry"),
            seed=int(model_spec.get("seed", 0)),
        )
        return np.array([predict_forest(forest, row)[0] for row in test_X])
    if kind == "ocsvm":
        pos = train.X[train.y == 1]
        model = train_ocsvm(
            pos,
            nu=float(model_spec.get("nu", 0.5)),
            gamma=model_spec.get("gamma"),
        )
        return model.predict(test_X)
    raise ValueError(f"unknown model kind {kind!r}")


def cross_validate(model_spec: dict, ds: Dataset, folds: int = 10, seed: int = 0) -> CvReport:
    """Stratified CV. The one-class model trains on positive training-fold
    rows only and is evaluated on every test-fold row."""
    assignment = stratified_folds(ds.y, folds, seed)
    fold_metrics = []
    for f in range(folds):
        test_mask = assignment == f
        train = Dataset(
            X=ds.X[~test_mask], y=ds.y[~test_mask], feature_names=ds.feature_names
        )
        preds = _fit_predict(model_spec, train, ds.X[test_mask])
        truth = ds.y[test_mask]
        tp = int(np.sum((preds == 1) & (truth == 1)))
        fp = int(np.sum((preds == 1) & (truth == 0)))
        fn = int(np.sum((preds == 0) & (truth == 1)))
        tn = int(np.sum((preds == 0) & (truth == 0)))
        fold_metrics.append(FoldMetrics(tp=tp, fp=fp, fn=fn, tn=tn))
    return CvReport(
        model=model_spec.get("model", "dt"),
        folds=fold_metrics,
        fold_assignment=[int(a) for a in assignment],
        seed=seed,
        params={k: v for k, v in model_spec.items() if k != "model"},
    )
