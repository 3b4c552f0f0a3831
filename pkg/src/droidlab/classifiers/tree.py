"""Decision trees and the two forest ensembles built on them.

Trees grow greedily on Gini impurity with midpoint thresholds; ties prefer
the lowest feature index and threshold, and node processing order is fixed,
so a fitted tree is a pure function of (data, parameters, seed).
"""

from __future__ import annotations

import numpy as np


class DecisionTree:
    """CART-style binary classification tree.

    max_features None uses every feature at every split (and consumes no
    randomness); "sqrt" or an int samples a per-node candidate subset.
    """

    kind = "decision_tree"

    def __init__(self, max_depth: int | None = None, min_leaf: int = 1,
                 max_features: int | str | None = None, seed: int = 0):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.seed = seed
        self.score_threshold = 0.5

    def _n_candidates(self, d: int) -> int | None:
        if self.max_features is None:
            return None
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(d)))
        return min(int(self.max_features), d)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "DecisionTree":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        rng = np.random.default_rng(self.seed)
        d = X.shape[1]
        m = self._n_candidates(d)
        max_depth = self.max_depth if self.max_depth is not None else np.inf

        feature: list[int] = []
        threshold: list[float] = []
        left: list[int] = []
        right: list[int] = []
        value: list[float] = []

        def new_node() -> int:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            return len(feature) - 1

        root = new_node()
        stack: list[tuple[int, np.ndarray, int]] = [(root, np.arange(len(y)), 0)]
        while stack:
            node, idx, depth = stack.pop()
            ysub = y[idx]
            n = len(idx)
            n1 = int(ysub.sum())
            value[node] = n1 / n
            if n1 == 0 or n1 == n or depth >= max_depth or n < 2 * self.min_leaf:
                continue
            if m is None:
                feats = range(d)
            else:
                feats = sorted(int(f) for f in rng.choice(d, size=m, replace=False))
            best = self._best_split(X, ysub, idx, feats, n, n1)
            if best is None:
                continue
            _, f, thr = best
            go_left = X[idx, f] <= thr
            feature[node] = f
            threshold[node] = thr
            l_node = new_node()
            r_node = new_node()
            left[node] = l_node
            right[node] = r_node
            # Right pushed first so the left child is processed next (fixed order).
            stack.append((r_node, idx[~go_left], depth + 1))
            stack.append((l_node, idx[go_left], depth + 1))

        self.feature_ = np.array(feature, dtype=np.int64)
        self.threshold_ = np.array(threshold)
        self.left_ = np.array(left, dtype=np.int64)
        self.right_ = np.array(right, dtype=np.int64)
        self.value_ = np.array(value)
        return self

    def _best_split(self, X, ysub, idx, feats, n, n1):
        best = None
        min_leaf = self.min_leaf
        for f in feats:
            vals = X[idx, f]
            order = np.argsort(vals, kind="stable")
            v = vals[order]
            ys = ysub[order]
            cuts = np.nonzero(v[:-1] < v[1:])[0]
            if len(cuts) == 0:
                continue
            nl = cuts + 1
            ok = (nl >= min_leaf) & ((n - nl) >= min_leaf)
            cuts = cuts[ok]
            if len(cuts) == 0:
                continue
            nl = cuts + 1
            c1 = np.cumsum(ys)
            l1 = c1[cuts]
            nr = n - nl
            r1 = n1 - l1
            gini_l = 1.0 - ((l1 / nl) ** 2 + ((nl - l1) / nl) ** 2)
            gini_r = 1.0 - ((r1 / nr) ** 2 + ((nr - r1) / nr) ** 2)
            weighted = (nl * gini_l + nr * gini_r) / n
            j = int(np.argmin(weighted))
            if best is None or weighted[j] < best[0]:
                thr = (v[cuts[j]] + v[cuts[j] + 1]) / 2.0
                best = (float(weighted[j]), int(f), float(thr))
        return best

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        n = len(X)
        node = np.zeros(n, dtype=np.int64)
        rows = np.arange(n)
        while True:
            feats = self.feature_[node]
            internal = feats >= 0
            if not internal.any():
                break
            go_left = np.zeros(n, dtype=bool)
            sel = rows[internal]
            go_left[sel] = X[sel, feats[internal]] <= self.threshold_[node[internal]]
            node = np.where(
                internal, np.where(go_left, self.left_[node], self.right_[node]), node
            )
        return self.value_[node]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_scores(X) > self.score_threshold).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {
                "max_depth": self.max_depth,
                "min_leaf": self.min_leaf,
                "max_features": self.max_features,
                "seed": self.seed,
            },
            "feature": self.feature_.tolist(),
            "threshold": self.threshold_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "value": self.value_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        obj = cls(**d["params"])
        obj.feature_ = np.array(d["feature"], dtype=np.int64)
        obj.threshold_ = np.array(d["threshold"])
        obj.left_ = np.array(d["left"], dtype=np.int64)
        obj.right_ = np.array(d["right"], dtype=np.int64)
        obj.value_ = np.array(d["value"])
        return obj


class RandomForest:
    """Bagged trees with per-split random feature subsets; majority vote."""

    kind = "random_forest"

    def __init__(self, n_trees: int = 128, max_depth: int | None = None,
                 min_leaf: int = 1, max_features: int | str | None = "sqrt",
                 bootstrap: bool = True, seed: int = 0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed
        self.score_threshold = 0.5

    def _tree_seed(self, i: int) -> int:
        return int(np.random.default_rng([self.seed, i, 1]).integers(0, 2 ** 63))

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n = len(y)
        self.trees_: list[DecisionTree] = []
        for i in range(self.n_trees):
            sample_rng = np.random.default_rng([self.seed, i, 0])
            rows = sample_rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            tree = DecisionTree(
                max_depth=self.max_depth,
                min_leaf=self.min_leaf,
                max_features=self.max_features,
                seed=self._tree_seed(i),
            )
            tree.fit(X[rows], y[rows])
            self.trees_.append(tree)
        return self

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros(len(X))
        for tree in self.trees_:
            votes += tree.predict(X)
        return votes / len(self.trees_)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_scores(X) > self.score_threshold).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {
                "n_trees": self.n_trees,
                "max_depth": self.max_depth,
                "min_leaf": self.min_leaf,
                "max_features": self.max_features,
                "bootstrap": self.bootstrap,
                "seed": self.seed,
            },
            "trees": [t.to_dict() for t in self.trees_],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForest":
        obj = cls(**d["params"])
        obj.trees_ = [DecisionTree.from_dict(t) for t in d["trees"]]
        return obj


class RotationForest:
    """Forest over per-tree principal-component rotations.

    Feature indices are partitioned into random disjoint subsets; each subset
    is rotated by the principal components of a bootstrap sample, keeping all
    components, and a tree is trained on the rotated data.
    """

    kind = "rotation_forest"

    def __init__(self, n_trees: int = 128, subset_size: int = 3,
                 max_depth: int | None = None, min_leaf: int = 1,
                 max_features: int | str | None = "sqrt", bootstrap: bool = True,
                 seed: int = 0):
        self.n_trees = n_trees
        self.subset_size = subset_size
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed
        self.score_threshold = 0.5

    def _rotation(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n, d = X.shape
        perm = rng.permutation(d)
        R = np.zeros((d, d))
        for start in range(0, d, self.subset_size):
            group = np.sort(perm[start:start + self.subset_size])
            rows = rng.integers(0, n, size=max(2, int(0.75 * n)))
            sub = X[np.ix_(rows, group)]
            cov = np.cov(sub.T) if len(group) > 1 else np.array([[float(np.var(sub))]])
            cov = np.atleast_2d(cov)
            _vals, vecs = np.linalg.eigh(cov)
            for c in range(vecs.shape[1]):
                col = vecs[:, c]
                if col[np.argmax(np.abs(col))] < 0:
                    vecs[:, c] = -col
            R[np.ix_(group, group)] = vecs
        return R

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RotationForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n = len(y)
        self.trees_: list[DecisionTree] = []
        self.rotations_: list[np.ndarray] = []
        for i in range(self.n_trees):
            rot_rng = np.random.default_rng([self.seed, i, 2])
            R = self._rotation(X, rot_rng)
            sample_rng = np.random.default_rng([self.seed, i, 0])
            rows = sample_rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            tree = DecisionTree(
                max_depth=self.max_depth,
                min_leaf=self.min_leaf,
                max_features=self.max_features,
                seed=int(np.random.default_rng([self.seed, i, 1]).integers(0, 2 ** 63)),
            )
            tree.fit(X[rows] @ R, y[rows])
            self.trees_.append(tree)
            self.rotations_.append(R)
        return self

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros(len(X))
        for tree, R in zip(self.trees_, self.rotations_):
            votes += tree.predict(X @ R)
        return votes / len(self.trees_)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_scores(X) > self.score_threshold).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {
                "n_trees": self.n_trees,
                "subset_size": self.subset_size,
                "max_depth": self.max_depth,
                "min_leaf": self.min_leaf,
                "max_features": self.max_features,
                "bootstrap": self.bootstrap,
                "seed": self.seed,
            },
            "trees": [t.to_dict() for t in self.trees_],
            "rotations": [R.tolist() for R in self.rotations_],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RotationForest":
        obj = cls(**d["params"])
        obj.trees_ = [DecisionTree.from_dict(t) for t in d["trees"]]
        obj.rotations_ = [np.array(R) for R in d["rotations"]]
        return obj
