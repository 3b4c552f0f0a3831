"""Linear margin and neural backends.

The SVM is a hinge-loss linear model trained by full-batch subgradient
descent with backtracking, which makes the objective non-increasing by
construction.  The MLP is one sigmoid hidden layer with a logistic output,
trained by plain gradient descent; its loss/gradient pair is exposed for
finite-difference checking.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LinearSVM:
    kind = "linear_svm"

    def __init__(self, penalty: float = 0.1, epochs: int = 200, lr: float = 1.0,
                 seed: int = 0):
        self.penalty = penalty
        self.epochs = epochs
        self.lr = lr
        self.seed = seed
        self.score_threshold = 0.0

    def _objective(self, w, b, X, ys) -> float:
        margins = ys * (X @ w + b)
        hinge = np.maximum(0.0, 1.0 - margins).mean()
        return hinge + self.penalty * float(w @ w)

    def _subgradient(self, w, b, X, ys):
        margins = ys * (X @ w + b)
        viol = margins < 1.0
        n = len(ys)
        gw = 2.0 * self.penalty * w - (X[viol].T @ ys[viol]) / n
        gb = -ys[viol].sum() / n
        return gw, gb

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LinearSVM":
        X = np.asarray(X, dtype=np.float64)
        ys = np.where(np.asarray(y) > 0, 1.0, -1.0)
        w = np.zeros(X.shape[1])
        b = 0.0
        lr = self.lr
        objective = self._objective(w, b, X, ys)
        self.objective_trace_ = [objective]
        for _ in range(self.epochs):
            gw, gb = self._subgradient(w, b, X, ys)
            while lr > 1e-12:
                w_new = w - lr * gw
                b_new = b - lr * gb
                obj_new = self._objective(w_new, b_new, X, ys)
                if obj_new <= objective:
                    w, b, objective = w_new, b_new, obj_new
                    break
                lr *= 0.5
            self.objective_trace_.append(objective)
            if lr <= 1e-12:
                break
        self.w_ = w
        self.b_ = b
        return self

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.w_ + self.b_

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_scores(X) > self.score_threshold).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {"penalty": self.penalty, "epochs": self.epochs,
                       "lr": self.lr, "seed": self.seed},
            "w": self.w_.tolist(),
            "b": self.b_,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearSVM":
        obj = cls(**d["params"])
        obj.w_ = np.array(d["w"])
        obj.b_ = float(d["b"])
        return obj


class MLP:
    """Feed-forward net: one sigmoid hidden layer, logistic output."""

    kind = "mlp"

    def __init__(self, hidden: int = 32, epochs: int = 400, lr: float = 0.8,
                 l2: float = 1e-4, seed: int = 0):
        self.hidden = hidden
        self.epochs = epochs
        self.lr = lr
        self.l2 = l2
        self.seed = seed
        self.score_threshold = 0.5

    def _init_params(self, d: int, rng: np.random.Generator):
        scale = 1.0 / np.sqrt(max(d, 1))
        W1 = rng.normal(0.0, scale, size=(d, self.hidden))
        b1 = np.zeros(self.hidden)
        w2 = rng.normal(0.0, 1.0 / np.sqrt(self.hidden), size=self.hidden)
        b2 = 0.0
        return W1, b1, w2, b2

    def loss_and_grads(self, params, X, y):
        """Cross-entropy loss with L2 penalty, plus gradients for all params."""
        W1, b1, w2, b2 = params
        n = len(y)
        z1 = X @ W1 + b1
        a1 = _sigmoid(z1)
        z2 = a1 @ w2 + b2
        p = _sigmoid(z2)
        p_c = np.clip(p, 1e-12, 1 - 1e-12)
        loss = -np.mean(y * np.log(p_c) + (1 - y) * np.log(1 - p_c))
        loss += self.l2 * (float((W1 ** 2).sum()) + float(w2 @ w2))

        dz2 = (p - y) / n
        gw2 = a1.T @ dz2 + 2 * self.l2 * w2
        gb2 = float(dz2.sum())
        da1 = np.outer(dz2, w2)
        dz1 = da1 * a1 * (1 - a1)
        gW1 = X.T @ dz1 + 2 * self.l2 * W1
        gb1 = dz1.sum(axis=0)
        return loss, (gW1, gb1, gw2, gb2)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "MLP":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        rng = np.random.default_rng(self.seed)
        W1, b1, w2, b2 = self._init_params(X.shape[1], rng)
        for _ in range(self.epochs):
            _, (gW1, gb1, gw2, gb2) = self.loss_and_grads((W1, b1, w2, b2), X, y)
            W1 -= self.lr * gW1
            b1 -= self.lr * gb1
            w2 -= self.lr * gw2
            b2 -= self.lr * gb2
        self.W1_, self.b1_, self.w2_, self.b2_ = W1, b1, w2, b2
        return self

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        a1 = _sigmoid(X @ self.W1_ + self.b1_)
        return _sigmoid(a1 @ self.w2_ + self.b2_)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_scores(X) > self.score_threshold).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {"hidden": self.hidden, "epochs": self.epochs, "lr": self.lr,
                       "l2": self.l2, "seed": self.seed},
            "W1": self.W1_.tolist(),
            "b1": self.b1_.tolist(),
            "w2": self.w2_.tolist(),
            "b2": self.b2_,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MLP":
        obj = cls(**d["params"])
        obj.W1_ = np.array(d["W1"])
        obj.b1_ = np.array(d["b1"])
        obj.w2_ = np.array(d["w2"])
        obj.b2_ = float(d["b2"])
        return obj
