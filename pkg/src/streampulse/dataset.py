"""Numeric dataset container shared by the feature encoder and the models."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class UnknownFeature(KeyError):
    pass


class EmptyDataset(ValueError):
    pass


@dataclass
class Dataset:
    X: np.ndarray  # (n_rows, n_features)
    y: np.ndarray  # (n_rows,) int labels, 1 = impactful
    feature_names: list[str]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.feature_names):
            raise ValueError("X shape does not match feature names")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y row counts differ")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def ablate(ds: Dataset, feature_name: str) -> Dataset:
    """Drop one feature column (the ablation experiment helper)."""
    if feature_name not in ds.feature_names:
        raise UnknownFeature(feature_name)
    idx = ds.feature_names.index(feature_name)
    keep = [i for i in range(ds.n_features) if i != idx]
    names = [n for i, n in enumerate(ds.feature_names) if i != idx]
    return Dataset(X=ds.X[:, keep], y=ds.y.copy(), feature_names=names)


def write_dataset_csv(ds: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.feature_names + ["label"])
        for row, label in zip(ds.X, ds.y):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def read_dataset_csv(path: str | Path) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise ValueError("dataset CSV must end with a 'label' column")
        names = header[:-1]
        rows, labels = [], []
        for rec in reader:
            if not rec:
                continue
            rows.append([float(v) for v in rec[:-1]])
            labels.append(int(rec[-1]))
    if not rows:
        raise EmptyDataset("dataset CSV has no rows")
    return Dataset(X=np.array(rows), y=np.array(labels), feature_names=names)
