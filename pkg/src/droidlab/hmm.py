"""Discrete hidden Markov models over opcode vocabularies.

Fitting is expectation-maximization (Baum-Welch) with scaled forward/backward
passes, batched over padded sequences so the whole training set advances one
time step per numpy operation.  Scoring returns length-normalized forward
log-likelihoods; symbols unseen at training fall into a floored unknown
column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EMISSION_FLOOR = 1e-8
_NUMERIC_FLOOR = 1e-12


class HmmError(ValueError):
    pass


@dataclass
class HmmModel:
    vocab: tuple[str, ...]  # observed symbols; one extra emission column is the unknown bucket
    pi: np.ndarray  # (S,)
    A: np.ndarray  # (S, S)
    B: np.ndarray  # (S, V+1)
    train_loglik: list[float]

    @property
    def n_states(self) -> int:
        return len(self.pi)

    def symbol_index(self, symbol: str) -> int:
        idx = self._vocab_index.get(symbol)
        return idx if idx is not None else len(self.vocab)

    def __post_init__(self):
        self._vocab_index = {s: i for i, s in enumerate(self.vocab)}

    def encode(self, symbols: list[str]) -> np.ndarray:
        return np.array([self.symbol_index(s) for s in symbols], dtype=np.int64)

    def to_dict(self) -> dict:
        return {
            "vocab": list(self.vocab),
            "pi": self.pi.tolist(),
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "train_loglik": self.train_loglik,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HmmModel":
        return cls(
            vocab=tuple(d["vocab"]),
            pi=np.array(d["pi"]),
            A=np.array(d["A"]),
            B=np.array(d["B"]),
            train_loglik=list(d["train_loglik"]),
        )


def _pad(seqs: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    lens = np.array([len(s) for s in seqs], dtype=np.int64)
    T = int(lens.max())
    obs = np.zeros((len(seqs), T), dtype=np.int64)
    for i, s in enumerate(seqs):
        obs[i, : len(s)] = s
    return obs, lens


def _forward_scaled(
    pi: np.ndarray, A: np.ndarray, B: np.ndarray, obs: np.ndarray, lens: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (alphas (T,N,S), scales (T,N), logliks (N,))."""
    N, T = obs.shape
    S = len(pi)
    alphas = np.zeros((T, N, S))
    scales = np.ones((T, N))
    alpha = pi[None, :] * B[:, obs[:, 0]].T
    c = alpha.sum(axis=1)
    c = np.maximum(c, _NUMERIC_FLOOR)
    alpha = alpha / c[:, None]
    alphas[0] = alpha
    scales[0] = c
    for t in range(1, T):
        active = lens > t
        nxt = (alpha @ A) * B[:, obs[:, t]].T
        ct = np.maximum(nxt.sum(axis=1), _NUMERIC_FLOOR)
        nxt = nxt / ct[:, None]
        alpha = np.where(active[:, None], nxt, alpha)
        scales[t] = np.where(active, ct, 1.0)
        alphas[t] = alpha
    logliks = np.log(scales).sum(axis=0)
    return alphas, scales, logliks


def forward_loglik(model: HmmModel, symbols: list[str], normalized: bool = True) -> float:
    """Scaled-forward log-likelihood of one symbol sequence."""
    if not symbols:
        raise HmmError("cannot score an empty sequence")
    seq = model.encode(symbols)
    _, _, ll = _forward_scaled(model.pi, model.A, model.B, seq[None, :], np.array([len(seq)]))
    value = float(ll[0])
    return value / len(seq) if normalized else value


def forward_loglik_batch(
    model: HmmModel, sequences: list[list[str]], normalized: bool = True
) -> np.ndarray:
    if any(len(s) == 0 for s in sequences):
        raise HmmError("cannot score an empty sequence")
    seqs = [model.encode(s) for s in sequences]
    obs, lens = _pad(seqs)
    _, _, ll = _forward_scaled(model.pi, model.A, model.B, obs, lens)
    return ll / lens if normalized else ll


def baum_welch(
    sequences: list[list[str]],
    n_states: int,
    seed: int,
    max_iter: int = 100,
    tol: float = 1e-4,
) -> HmmModel:
    """Fit one HMM to a set of symbol sequences.

    Stops when the total log-likelihood improves by less than tol or after
    max_iter iterations; the per-iteration log-likelihood trace is kept on
    the model.
    """
    if n_states < 1:
        raise HmmError("need at least one state")
    sequences = [s for s in sequences if s]
    if not sequences:
        raise HmmError("need at least one non-empty training sequence")

    vocab = tuple(sorted({sym for s in sequences for sym in s}))
    sym_index = {s: i for i, s in enumerate(vocab)}
    V = len(vocab)
    seqs = [np.array([sym_index[x] for x in s], dtype=np.int64) for s in sequences]
    obs, lens = _pad(seqs)
    N, T = obs.shape
    S = n_states

    rng = np.random.default_rng(seed)
    pi = rng.random(S) + 0.5
    pi /= pi.sum()
    A = rng.random((S, S)) + 0.5
    A /= A.sum(axis=1, keepdims=True)
    B = rng.random((S, V + 1)) + 0.5
    B[:, V] = EMISSION_FLOOR  # unknown bucket stays floored
    B /= B.sum(axis=1, keepdims=True)

    history: list[float] = []
    mask = np.arange(T)[None, :] < lens[:, None]  # (N, T)
    for _iteration in range(max_iter):
        alphas, scales, logliks = _forward_scaled(pi, A, B, obs, lens)
        total = float(logliks.sum())
        history.append(total)

        # Backward pass, scaled by the forward scales.
        betas = np.zeros((T, N, S))
        beta = np.ones((N, S))
        betas[T - 1] = beta
        for t in range(T - 2, -1, -1):
            active = (lens > t + 1)
            emit = B[:, obs[:, t + 1]].T * beta
            nxt = (emit @ A.T) / scales[t + 1][:, None]
            beta = np.where(active[:, None], nxt, np.ones_like(beta))
            # Sequences ending exactly at t+1 restart from ones.
            betas[t] = np.where((lens > t)[:, None], beta, 0.0)

        gammas = alphas * betas  # (T, N, S); rows sum to 1 where t < len
        gammas = np.where(mask.T[:, :, None], gammas, 0.0)

        xi_sum = np.zeros((S, S))
        for t in range(T - 1):
            active = lens > t + 1
            if not active.any():
                break
            w = (B[:, obs[:, t + 1]].T * betas[t + 1]) / scales[t + 1][:, None]
            w = np.where(active[:, None], w, 0.0)
            a = np.where(active[:, None], alphas[t], 0.0)
            xi_sum += (a.T @ w)
        xi_sum *= A

        pi = gammas[0].sum(axis=0)
        pi = np.maximum(pi, _NUMERIC_FLOOR)
        pi /= pi.sum()

        # Transition denominators exclude each sequence's final step.
        last_mask = np.arange(T)[None, :] < (lens - 1)[:, None]
        gamma_no_last = np.where(last_mask.T[:, :, None], gammas, 0.0)
        denom = np.maximum(gamma_no_last.sum(axis=(0, 1)), _NUMERIC_FLOOR)
        A = np.maximum(xi_sum, _NUMERIC_FLOOR) / denom[:, None]
        A /= A.sum(axis=1, keepdims=True)

        acc = np.zeros((V + 1, S))
        flat_gamma = gammas.reshape(T * N, S)
        flat_obs = obs.T.reshape(T * N)
        np.add.at(acc, flat_obs, flat_gamma)
        Bnew = acc.T
        Bnew[:, V] = EMISSION_FLOOR
        Bnew = np.maximum(Bnew, _NUMERIC_FLOOR)
        B = Bnew / Bnew.sum(axis=1, keepdims=True)

        if len(history) >= 2 and abs(history[-1] - history[-2]) < tol:
            break

    return HmmModel(vocab=vocab, pi=pi, A=A, B=B, train_loglik=history)
