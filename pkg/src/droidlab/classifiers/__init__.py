"""Classifier backends shared by the detector pipelines.

Every backend exposes fit / predict / predict_scores plus dict round trips
for model persistence, and is deterministic given its seed.
"""

from .bayes import NaiveBayesNet
from .linear import MLP, LinearSVM
from .neighbors import KNN
from .tree import DecisionTree, RandomForest, RotationForest

BACKENDS = {
    cls.kind: cls
    for cls in (DecisionTree, RandomForest, RotationForest, LinearSVM, MLP,
                NaiveBayesNet, KNN)
}


def classifier_from_dict(data: dict):
    kind = data.get("kind")
    if kind not in BACKENDS:
        raise ValueError(f"unknown classifier kind {kind!r}")
    return BACKENDS[kind].from_dict(data)


__all__ = [
    "KNN",
    "MLP",
    "BACKENDS",
    "DecisionTree",
    "LinearSVM",
    "NaiveBayesNet",
    "RandomForest",
    "RotationForest",
    "classifier_from_dict",
]
