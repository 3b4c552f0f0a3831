"""Bayesian network classifier over binary features.

Default structure is naive Bayes (class node parenting every feature) with
Laplace smoothing; the tree-augmented variant adds one feature parent per
node via a Chow-Liu tree on class-conditional mutual information.
"""

from __future__ import annotations

import numpy as np


class NaiveBayesNet:
    kind = "naive_bayes_net"

    def __init__(self, alpha: float = 1.0, structure: str = "naive", seed: int = 0):
        if structure not in ("naive", "tan"):
            raise ValueError(f"unknown structure {structure!r}")
        self.alpha = alpha
        self.structure = structure
        self.seed = seed
        self.score_threshold = 0.5

    def fit(self, X: np.ndarray, y: np.ndarray) -> "NaiveBayesNet":
        X = (np.asarray(X) > 0).astype(np.float64)
        y = np.asarray(y, dtype=np.int64)
        n, d = X.shape
        a = self.alpha
        self.class_log_prior_ = np.log((np.array([(y == 0).sum(), (y == 1).sum()]) + a)
                                       / (n + 2 * a))
        if self.structure == "naive":
            self.parent_ = np.full(d, -1, dtype=np.int64)
        else:
            self.parent_ = self._chow_liu_parents(X, y)

        # Conditional probability tables: log P(f=1 | c) for roots,
        # log P(f=1 | c, parent value) for tree children.
        self.root_logp_ = np.zeros((2, d, 2))  # class, feature, feature value
        self.cpt_logp_ = np.zeros((2, d, 2, 2))  # class, feature, parent value, feature value
        for c in (0, 1):
            rows = X[y == c]
            nc = len(rows)
            p1 = (rows.sum(axis=0) + a) / (nc + 2 * a)
            self.root_logp_[c, :, 1] = np.log(p1)
            self.root_logp_[c, :, 0] = np.log(1 - p1)
            if self.structure == "tan":
                for f in range(d):
                    pa = self.parent_[f]
                    if pa < 0:
                        continue
                    for pv in (0, 1):
                        sel = rows[rows[:, pa] == pv]
                        p1 = (sel[:, f].sum() + a) / (len(sel) + 2 * a)
                        self.cpt_logp_[c, f, pv, 1] = np.log(p1)
                        self.cpt_logp_[c, f, pv, 0] = np.log(1 - p1)
        return self

    def _chow_liu_parents(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        n, d = X.shape
        cmi = np.zeros((d, d))
        for c in (0, 1):
            rows = X[y == c]
            nc = len(rows)
            if nc == 0:
                continue
            pc = nc / n
            n11 = rows.T @ rows
            col = rows.sum(axis=0)
            n10 = col[:, None] - n11
            n01 = col[None, :] - n11
            n00 = nc - n11 - n10 - n01
            p1 = col / nc
            for joint, pa, pb in (
                (n11, p1, p1),
                (n10, p1, 1 - p1),
                (n01, 1 - p1, p1),
                (n00, 1 - p1, 1 - p1),
            ):
                pab = joint / nc
                indep = pa[:, None] * pb[None, :]
                with np.errstate(divide="ignore", invalid="ignore"):
                    term = pab * np.log(np.where(pab > 0, pab, 1.0)
                                        / np.where(indep > 0, indep, 1.0))
                cmi += pc * np.where(pab > 0, term, 0.0)
        np.fill_diagonal(cmi, -np.inf)

        # Prim's algorithm for the maximum spanning tree rooted at feature 0.
        parent = np.full(d, -1, dtype=np.int64)
        in_tree = np.zeros(d, dtype=bool)
        in_tree[0] = True
        best_gain = cmi[0].copy()
        best_from = np.zeros(d, dtype=np.int64)
        for _ in range(d - 1):
            cand = np.where(in_tree, -np.inf, best_gain)
            nxt = int(np.argmax(cand))
            if not np.isfinite(cand[nxt]):
                break
            parent[nxt] = best_from[nxt]
            in_tree[nxt] = True
            improve = cmi[nxt] > best_gain
            best_gain = np.where(improve, cmi[nxt], best_gain)
            best_from = np.where(improve, nxt, best_from)
        return parent

    def _joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        X = (np.asarray(X) > 0).astype(np.int64)
        n, d = X.shape
        jll = np.tile(self.class_log_prior_, (n, 1))
        for c in (0, 1):
            if self.structure == "naive":
                jll[:, c] += np.where(X == 1, self.root_logp_[c, :, 1],
                                      self.root_logp_[c, :, 0]).sum(axis=1)
            else:
                for f in range(d):
                    pa = self.parent_[f]
                    if pa < 0:
                        jll[:, c] += self.root_logp_[c, f, X[:, f]]
                    else:
                        jll[:, c] += self.cpt_logp_[c, f, X[:, pa], X[:, f]]
        return jll

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        jll = self._joint_log_likelihood(X)
        shift = jll.max(axis=1, keepdims=True)
        probs = np.exp(jll - shift)
        return probs[:, 1] / probs.sum(axis=1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_scores(X) > self.score_threshold).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {"alpha": self.alpha, "structure": self.structure, "seed": self.seed},
            "class_log_prior": self.class_log_prior_.tolist(),
            "parent": self.parent_.tolist(),
            "root_logp": self.root_logp_.tolist(),
            "cpt_logp": self.cpt_logp_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NaiveBayesNet":
        obj = cls(**d["params"])
        obj.class_log_prior_ = np.array(d["class_log_prior"])
        obj.parent_ = np.array(d["parent"], dtype=np.int64)
        obj.root_logp_ = np.array(d["root_logp"])
        obj.cpt_logp_ = np.array(d["cpt_logp"])
        return obj
