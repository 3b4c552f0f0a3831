"""Feature spaces, encodings and selection.

A feature is identified by (category, name); spaces are built from training
records only and ordered canonically (category, then name), so encoding is
reproducible and unseen-at-training names are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ir import AppRecord, CalleeKind

CATEGORIES = (
    "permission",
    "intent",
    "component",
    "hw-feature",
    "string",
    "api-call",
    "basic-block",
    "markov-transition",
    "hmm-score",
)

ENCODINGS = ("binary", "frequency", "real")


class FeatureError(ValueError):
    pass


def names_in(record: AppRecord, category: str) -> dict[str, int]:
    """Observed names and occurrence counts for one category of one app."""
    if category == "permission":
        return {n: 1 for n in record.permissions}
    if category == "intent":
        return {n: 1 for n in record.intent_actions}
    if category == "component":
        return {f"{kind.value}:{name}": 1 for kind, name in record.app_components}
    if category == "hw-feature":
        return {n: 1 for n in record.hw_sw_features}
    if category == "string":
        return {n: 1 for n in record.strings}
    if category == "api-call":
        return dict(record.api_calls)
    if category == "basic-block":
        return dict(record.basic_blocks)
    raise FeatureError(f"unknown category {category!r}")


@dataclass(frozen=True)
class FeatureSpace:
    """Ordered feature dictionary; encoding may vary per category."""

    features: tuple[tuple[str, str], ...]  # (category, name) in canonical order
    encodings: tuple[tuple[str, str], ...]  # category -> encoding, sorted

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {feat: i for i, feat in enumerate(self.features)}
        )
        object.__setattr__(self, "_enc", dict(self.encodings))

    def __len__(self) -> int:
        return len(self.features)

    def index_of(self, category: str, name: str) -> int | None:
        return self._index.get((category, name))

    def encoding_of(self, category: str) -> str:
        return self._enc[category]

    def subset(self, indices: list[int]) -> "FeatureSpace":
        feats = tuple(self.features[i] for i in sorted(indices))
        return FeatureSpace(features=feats, encodings=self.encodings)

    def to_dict(self) -> dict:
        return {
            "features": [list(f) for f in self.features],
            "encodings": [list(e) for e in self.encodings],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpace":
        return cls(
            features=tuple((c, n) for c, n in d["features"]),
            encodings=tuple((c, e) for c, e in d["encodings"]),
        )


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[tuple[int, float], ...]  # sparse (index, value), index-sorted

    def to_dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        for i, v in self.values:
            out[i] = v
        return out


def build_space(
    train_records: list[AppRecord],
    categories: list[str],
    encoding: str | dict[str, str] = "binary",
) -> FeatureSpace:
    """Vocabulary union over training records, canonically ordered."""
    if not train_records:
        raise FeatureError("cannot build a feature space from no records")
    enc_map = (
        {c: encoding for c in categories} if isinstance(encoding, str) else dict(encoding)
    )
    for c in categories:
        if c not in CATEGORIES:
            raise FeatureError(f"unknown category {c!r}")
        if enc_map.get(c) not in ENCODINGS:
            raise FeatureError(f"missing or bad encoding for category {c!r}")
    features: set[tuple[str, str]] = set()
    for r in train_records:
        for c in categories:
            for name in names_in(r, c):
                features.add((c, name))
    if not features:
        raise FeatureError("empty vocabulary over the requested categories")
    ordered = tuple(sorted(features))
    encodings = tuple(sorted((c, enc_map[c]) for c in categories))
    return FeatureSpace(features=ordered, encodings=encodings)


def encode(record: AppRecord, space: FeatureSpace) -> FeatureVector:
    """Sparse vector over the space; names outside the space are dropped."""
    values: dict[int, float] = {}
    for category, _enc in space.encodings:
        observed = names_in(record, category)
        binary = space.encoding_of(category) == "binary"
        for name, count in observed.items():
            idx = space.index_of(category, name)
            if idx is None:
                continue
            values[idx] = 1.0 if binary else float(count)
    return FeatureVector(values=tuple(sorted(values.items())))


def to_matrix(vectors: list[FeatureVector], size: int) -> np.ndarray:
    X = np.zeros((len(vectors), size))
    for row, vec in enumerate(vectors):
        for i, v in vec.values:
            X[row, i] = v
    return X


# --- selection ------------------------------------------------------------

def mutual_information(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """MI in bits between each binary feature column and the binary label."""
    n = len(y)
    if n == 0:
        raise FeatureError("mutual information needs samples")
    Xb = (X > 0).astype(np.float64)
    y1 = (y > 0).astype(np.float64)
    n_c1 = y1.sum()
    n_c0 = n - n_c1
    n_f1c1 = y1 @ Xb
    n_f1c0 = Xb.sum(axis=0) - n_f1c1
    n_f0c1 = n_c1 - n_f1c1
    n_f0c0 = n_c0 - n_f1c0

    mi = np.zeros(X.shape[1])
    pf1 = (n_f1c1 + n_f1c0) / n
    pc1 = n_c1 / n
    for joint, pf, pc in (
        (n_f1c1 / n, pf1, pc1),
        (n_f1c0 / n, pf1, 1 - pc1),
        (n_f0c1 / n, 1 - pf1, pc1),
        (n_f0c0 / n, 1 - pf1, 1 - pc1),
    ):
        denom = pf * pc
        with np.errstate(divide="ignore", invalid="ignore"):
            term = joint * np.log2(np.where(joint > 0, joint, 1) / np.where(denom > 0, denom, 1))
        mi += np.where(joint > 0, term, 0.0)
    return mi


def top_k_indices(scores: np.ndarray, k: int) -> list[int]:
    """Highest-scoring feature indices; ties resolved by feature order."""
    if k > len(scores):
        k = len(scores)
    order = np.lexsort((np.arange(len(scores)), -scores))
    return sorted(int(i) for i in order[:k])


def select_mutual_information(
    X: np.ndarray, y: np.ndarray, space: FeatureSpace, k: int
) -> tuple[FeatureSpace, list[int], np.ndarray]:
    scores = mutual_information(X, y)
    idx = top_k_indices(scores, k)
    return space.subset(idx), idx, scores


def tfidf_rank(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Class-as-document tf-idf: tf is within-class occurrence mass, idf is
    log(2 / number of classes containing the feature)."""
    scores = np.zeros(X.shape[1])
    classes = [0, 1]
    present = np.zeros((2, X.shape[1]), dtype=bool)
    tf = np.zeros((2, X.shape[1]))
    for ci, c in enumerate(classes):
        rows = X[y == c]
        if rows.size == 0:
            raise FeatureError(f"tf-idf rank with empty class {c}")
        tf[ci] = rows.sum(axis=0)
        present[ci] = tf[ci] > 0
    n_containing = present.sum(axis=0)
    idf = np.where(n_containing > 0, np.log(2.0 / np.maximum(n_containing, 1)), 0.0)
    scores = (tf * idf).max(axis=0)
    return scores


def select_tfidf(
    X: np.ndarray, y: np.ndarray, space: FeatureSpace, k: int
) -> tuple[FeatureSpace, list[int], np.ndarray]:
    scores = tfidf_rank(X, y)
    idx = top_k_indices(scores, k)
    return space.subset(idx), idx, scores


# --- call-graph abstraction -----------------------------------------------

SELF_STATE = "self-defined"
OBFUSCATED_STATE = "obfuscated"


def abstract_method(name: str, kind: CalleeKind, mode: str) -> str:
    """Map a method to its package or top-level family state."""
    if kind == CalleeKind.USER:
        return SELF_STATE
    cls = name.split("->", 1)[0]
    if not cls.startswith("L") or "/" not in cls:
        return OBFUSCATED_STATE
    segments = cls[1:].rstrip(";").split("/")
    if len(segments) < 2:
        return OBFUSCATED_STATE
    if mode == "package":
        return ".".join(segments[:-1])
    if mode == "family":
        return segments[0]
    raise FeatureError(f"unknown abstraction mode {mode!r}")


def markov_profile(
    record: AppRecord, abstraction: str = "package"
) -> dict[tuple[str, str], float]:
    """Transition probabilities between abstract call states.

    Each call edge contributes one (caller state, callee state) count; rows
    normalize to 1 over the states actually left from.
    """
    counts: dict[tuple[str, str], int] = {}
    user = {m for m in record.user_methods}
    for caller, callee, kind in record.call_edges:
        src = abstract_method(
            caller, CalleeKind.USER if caller in user else CalleeKind.API, abstraction
        )
        dst = abstract_method(callee, kind, abstraction)
        counts[(src, dst)] = counts.get((src, dst), 0) + 1
    row_totals: dict[str, int] = {}
    for (src, _dst), c in counts.items():
        row_totals[src] = row_totals.get(src, 0) + c
    return {pair: c / row_totals[pair[0]] for pair, c in counts.items()}


def markov_feature_name(src: str, dst: str) -> str:
    return f"{src}>{dst}"


def markov_space(profiles: list[dict[tuple[str, str], float]]) -> FeatureSpace:
    names = {markov_feature_name(s, d) for p in profiles for (s, d) in p}
    if not names:
        raise FeatureError("no call transitions observed in training records")
    feats = tuple(sorted(("markov-transition", n) for n in names))
    return FeatureSpace(features=feats, encodings=(("markov-transition", "real"),))


def encode_markov(
    profile: dict[tuple[str, str], float], space: FeatureSpace
) -> FeatureVector:
    values = {}
    for (src, dst), p in profile.items():
        idx = space.index_of("markov-transition", markov_feature_name(src, dst))
        if idx is not None:
            values[idx] = p
    return FeatureVector(values=tuple(sorted(values.items())))


def math_isclose_row_sums(profile: dict[tuple[str, str], float]) -> bool:
    sums: dict[str, float] = {}
    for (src, _dst), p in profile.items():
        sums[src] = sums.get(src, 0.0) + p
    return all(math.isclose(s, 1.0, abs_tol=1e-9) for s in sums.values())
