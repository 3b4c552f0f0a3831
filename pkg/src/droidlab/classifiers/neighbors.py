"""Euclidean k-nearest-neighbors with majority vote.

Distance ties at the neighborhood boundary resolve by training row order, so
predictions are reproducible regardless of float noise patterns.
"""

from __future__ import annotations

import numpy as np


class KNN:
    kind = "knn"

    def __init__(self, k: int = 3, seed: int = 0):
        self.k = k
        self.seed = seed
        self.score_threshold = 0.5

    def fit(self, X: np.ndarray, y: np.ndarray) -> "KNN":
        self.X_ = np.asarray(X, dtype=np.float64)
        self.y_ = np.asarray(y, dtype=np.int64)
        if self.k > len(self.y_):
            raise ValueError(f"k={self.k} exceeds training size {len(self.y_)}")
        return self

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        d2 = (
            (X ** 2).sum(axis=1, keepdims=True)
            - 2.0 * (X @ self.X_.T)
            + (self.X_ ** 2).sum(axis=1)[None, :]
        )
        n_train = len(self.y_)
        row_ids = np.arange(n_train)
        scores = np.empty(len(X))
        for i in range(len(X)):
            order = np.lexsort((row_ids, d2[i]))
            scores[i] = self.y_[order[: self.k]].mean()
        return scores

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_scores(X) > self.score_threshold).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {"k": self.k, "seed": self.seed},
            "X": self.X_.tolist(),
            "y": self.y_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KNN":
        obj = cls(**d["params"])
        obj.X_ = np.array(d["X"])
        obj.y_ = np.array(d["y"], dtype=np.int64)
        return obj
