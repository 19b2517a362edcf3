from .cv import CvReport, FoldMetrics, InsufficientRows, cross_validate, stratified_folds
from .ocsvm import DegenerateData, OneClassSvm, train_ocsvm
from .tree import (
    ArityMismatch,
    DecisionTree,
    EmptyDatasetError,
    RandomForest,
    feature_importance,
    load_model,
    predict,
    predict_forest,
    predict_tree,
    save_model,
    train_forest,
    train_tree,
    tree_depth,
)

__all__ = [
    "ArityMismatch",
    "CvReport",
    "DecisionTree",
    "DegenerateData",
    "EmptyDatasetError",
    "FoldMetrics",
    "InsufficientRows",
    "OneClassSvm",
    "RandomForest",
    "cross_validate",
    "feature_importance",
    "load_model",
    "predict",
    "predict_forest",
    "predict_tree",
    "save_model",
    "stratified_folds",
    "train_forest",
    "train_ocsvm",
    "train_tree",
    "tree_depth",
]
