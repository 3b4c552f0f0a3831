"""The eight detector pipelines: featurizer + selector + classifier, with
grid-search model selection over cross-validation folds.

Each pipeline's configuration (feature categories, encoding, selection
method, classifier kind) is locked in DETECTOR_TABLE; a unit test asserts
the mapping, so accidental drift in any pipeline fails loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import features as F
from .classifiers import BACKENDS, classifier_from_dict
from .hmm import HmmModel, baum_welch, forward_loglik_batch
from .ir import AppRecord, ClassLabel
from .metrics import ConfusionCounts, metrics

MODEL_FORMAT = "droidlab-detector"
MODEL_VERSION = 1

GRID_DEFAULTS = {
    "decision_tree": [{"max_depth": 8}, {"max_depth": 16}, {"max_depth": None}],
    "random_forest": [{"n_trees": 32}, {"n_trees": 128}],
    "rotation_forest": [{"n_trees": 32}, {"n_trees": 128}],
    "linear_svm": [{"penalty": 0.01}, {"penalty": 0.1}, {"penalty": 1.0}],
    "mlp": [{"hidden": 32}, {"hidden": 128}],
    "naive_bayes_net": [{"alpha": 1.0}],
    "knn": [{"k": 1}, {"k": 3}, {"k": 5}],
}

# Pipeline definitions for the eight detectors under analysis.
DETECTOR_TABLE: dict[str, dict] = {
    "AndroDialysis": {
        "categories": ["permission", "intent"],
        "encoding": "binary",
        "selection": None,
        "classifier": "naive_bayes_net",
    },
    "BasicBlocks": {
        "categories": ["basic-block"],
        "encoding": "binary",
        "selection": ("mutual-info", 1000),
        "classifier": "random_forest",
    },
    "Drebin": {
        "categories": ["permission", "component", "hw-feature", "intent",
                        "string", "api-call"],
        "encoding": "binary",
        "selection": None,
        "classifier": "linear_svm",
    },
    "DroidDet": {
        "categories": ["permission", "intent", "api-call"],
        "encoding": "binary",
        "selection": ("tf-idf", 128),
        "classifier": "rotation_forest",
    },
    "DroidDetector": {
        "categories": ["permission", "api-call"],
        "encoding": "binary",
        "selection": ("mutual-info", 1000),
        "classifier": "mlp",
    },
    "HMMDetector": {
        "categories": "opcode-sequence",
        "encoding": "sequence",
        "selection": ("hmm", None),
        "classifier": "random_forest",
    },
    "ICCDetector": {
        "categories": ["intent", "component"],
        "encoding": {"component": "binary", "intent": "frequency"},
        "selection": ("mutual-info", 1000),
        "classifier": "linear_svm",
    },
    "MaMaDroid": {
        "categories": "call-graph",
        "encoding": "frequency",
        "selection": None,
        "classifier": "random_forest",
    },
}

DETECTOR_NAMES = tuple(sorted(DETECTOR_TABLE))

HMM_STATES = 4
HMM_MAX_ITER = 40
HMM_MAX_SEQS = 150
HMM_MAX_LEN = 160


class DetectorError(ValueError):
    pass


def concatenated_opcodes(record: AppRecord) -> list[str]:
    return [op for _m, ops in record.opcode_sequences for op in ops]


# --- featurizers -----------------------------------------------------------

class CategoryFeaturizer:
    """Name-category features with optional MI or tf-idf top-k selection."""

    kind = "category"

    def __init__(self, categories, encoding, selection):
        self.categories = list(categories)
        self.encoding = encoding
        self.selection = selection

    def fit(self, records: list[AppRecord], y: np.ndarray) -> "CategoryFeaturizer":
        space = F.build_space(records, self.categories, self.encoding)
        if self.selection is not None:
            method, k = self.selection
            X = F.to_matrix([F.encode(r, space) for r in records], len(space))
            if method == "mutual-info":
                space, _idx, _scores = F.select_mutual_information(X, y, space, k)
            elif method == "tf-idf":
                space, _idx, _scores = F.select_tfidf(X, y, space, k)
            else:
                raise DetectorError(f"unknown selection method {method!r}")
        self.space_ = space
        return self

    def transform(self, records: list[AppRecord]) -> np.ndarray:
        return F.to_matrix([F.encode(r, self.space_) for r in records], len(self.space_))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "categories": self.categories,
            "encoding": self.encoding,
            "selection": list(self.selection) if self.selection else None,
            "space": self.space_.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CategoryFeaturizer":
        sel = tuple(d["selection"]) if d["selection"] else None
        obj = cls(d["categories"], d["encoding"], sel)
        obj.space_ = F.FeatureSpace.from_dict(d["space"])
        return obj


class MarkovFeaturizer:
    """Call-graph abstraction to package states, transition frequencies."""

    kind = "markov"

    def __init__(self, abstraction: str = "package"):
        self.abstraction = abstraction

    def fit(self, records: list[AppRecord], y: np.ndarray) -> "MarkovFeaturizer":
        profiles = [F.markov_profile(r, self.abstraction) for r in records]
        self.space_ = F.markov_space(profiles)
        return self

    def transform(self, records: list[AppRecord]) -> np.ndarray:
        vecs = [
            F.encode_markov(F.markov_profile(r, self.abstraction), self.space_)
            for r in records
        ]
        return F.to_matrix(vecs, len(self.space_))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "abstraction": self.abstraction,
            "space": self.space_.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarkovFeaturizer":
        obj = cls(d["abstraction"])
        obj.space_ = F.FeatureSpace.from_dict(d["space"])
        return obj


class HmmFeaturizer:
    """Per-class opcode-sequence models; features are the two per-class
    length-normalized forward log-likelihoods."""

    kind = "hmm"

    def __init__(self, n_states: int = HMM_STATES, seed: int = 0,
                 max_iter: int = HMM_MAX_ITER, max_seqs: int = HMM_MAX_SEQS,
                 max_len: int = HMM_MAX_LEN):
        self.n_states = n_states
        self.seed = seed
        self.max_iter = max_iter
        self.max_seqs = max_seqs
        self.max_len = max_len

    def _class_sequences(self, records, y, cls):
        seqs = []
        for r, label in zip(records, y):
            if label != cls:
                continue
            ops = concatenated_opcodes(r)[: self.max_len]
            if ops:
                seqs.append(ops)
        return seqs

    def fit(self, records: list[AppRecord], y: np.ndarray) -> "HmmFeaturizer":
        self.models_: list[HmmModel | None] = []
        for cls in (0, 1):
            seqs = self._class_sequences(records, y, cls)
            if len(seqs) > self.max_seqs:
                rng = np.random.default_rng([self.seed, cls])
                pick = sorted(rng.choice(len(seqs), size=self.max_seqs, replace=False))
                seqs = [seqs[i] for i in pick]
            if not seqs:
                self.models_.append(None)
                continue
            self.models_.append(
                baum_welch(seqs, self.n_states, seed=self.seed + cls,
                           max_iter=self.max_iter)
            )
        return self

    def transform(self, records: list[AppRecord]) -> np.ndarray:
        sequences = [concatenated_opcodes(r)[: self.max_len] for r in records]
        out = np.zeros((len(records), 2))
        non_empty = [i for i, s in enumerate(sequences) if s]
        for cls in (0, 1):
            model = self.models_[cls]
            if model is None or not non_empty:
                continue
            lls = forward_loglik_batch(model, [sequences[i] for i in non_empty])
            out[non_empty, cls] = lls
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_states": self.n_states,
            "seed": self.seed,
            "max_iter": self.max_iter,
            "max_seqs": self.max_seqs,
            "max_len": self.max_len,
            "models": [m.to_dict() if m else None for m in self.models_],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HmmFeaturizer":
        obj = cls(d["n_states"], d["seed"], d["max_iter"], d["max_seqs"], d["max_len"])
        obj.models_ = [HmmModel.from_dict(m) if m else None for m in d["models"]]
        return obj


_FEATURIZERS = {c.kind: c for c in (CategoryFeaturizer, MarkovFeaturizer, HmmFeaturizer)}


def make_featurizer(name: str, seed: int):
    spec = DETECTOR_TABLE[name]
    if spec["categories"] == "opcode-sequence":
        return HmmFeaturizer(seed=seed)
    if spec["categories"] == "call-graph":
        return MarkovFeaturizer()
    return CategoryFeaturizer(spec["categories"], spec["encoding"], spec["selection"])


# --- trained pipeline ------------------------------------------------------

@dataclass
class TrainedDetector:
    name: str
    featurizer: object
    classifier: object
    metadata: dict = field(default_factory=dict)

    def predict(self, records: list[AppRecord]) -> tuple[np.ndarray, np.ndarray]:
        """Hard labels (0/1) and real-valued malware scores."""
        X = self.featurizer.transform(records)
        return self.classifier.predict(X), self.classifier.predict_scores(X)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "name": self.name,
            "featurizer": self.featurizer.to_dict(),
            "classifier": self.classifier.to_dict(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedDetector":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise DetectorError("not a recognized detector model file")
        fz = _FEATURIZERS[d["featurizer"]["kind"]].from_dict(d["featurizer"])
        return cls(
            name=d["name"],
            featurizer=fz,
            classifier=classifier_from_dict(d["classifier"]),
            metadata=d.get("metadata", {}),
        )


def save_detector(detector: TrainedDetector, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(detector.to_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_detector(path) -> TrainedDetector:
    with open(path, "r", encoding="utf-8") as fh:
        return TrainedDetector.from_dict(json.load(fh))


def _binary_labels(records, labels: dict[str, ClassLabel]) -> np.ndarray:
    y = []
    for r in records:
        lbl = labels[r.id]
        if lbl == ClassLabel.GREYWARE:
            raise DetectorError(f"greyware record {r.id} cannot enter training")
        y.append(int(lbl.value))
    return np.array(y, dtype=np.int64)


def _make_classifier(kind: str, params: dict, seed: int):
    return BACKENDS[kind](seed=seed, **params)


def fit(
    name: str,
    records: list[AppRecord],
    labels: dict[str, ClassLabel],
    folds: list[tuple[list[str], list[str]]],
    seed: int,
    grid: list[dict] | None = None,
) -> TrainedDetector:
    """Grid search over CV folds scored by A_mean; refit on all of training.

    Ties prefer the earliest grid point.  The fitted pipeline, chosen point
    and per-point CV scores land in the detector metadata.
    """
    if name not in DETECTOR_TABLE:
        raise DetectorError(f"unknown detector {name!r}")
    spec = DETECTOR_TABLE[name]
    y_all = _binary_labels(records, labels)
    if len(set(y_all.tolist())) < 2:
        raise DetectorError("training data is single-class")
    grid = grid if grid is not None else GRID_DEFAULTS[spec["classifier"]]
    by_id = {r.id: i for i, r in enumerate(records)}

    fold_data = []
    for tr_ids, va_ids in folds:
        tr_idx = [by_id[i] for i in tr_ids]
        va_idx = [by_id[i] for i in va_ids]
        tr_records = [records[i] for i in tr_idx]
        fz = make_featurizer(name, seed)
        fz.fit(tr_records, y_all[tr_idx])
        Xtr = fz.transform(tr_records)
        Xva = fz.transform([records[i] for i in va_idx])
        fold_data.append((Xtr, y_all[tr_idx], Xva, y_all[va_idx]))

    cv_scores = []
    for params in grid:
        scores = []
        for Xtr, ytr, Xva, yva in fold_data:
            clf = _make_classifier(spec["classifier"], params, seed)
            clf.fit(Xtr, ytr)
            rep = metrics(ConfusionCounts.from_predictions(yva, clf.predict(Xva)))
            scores.append(rep.a_mean if rep.a_mean is not None else 0.0)
        cv_scores.append(float(np.mean(scores)) if scores else 0.0)
    best = int(np.argmax(cv_scores)) if cv_scores else 0

    featurizer = make_featurizer(name, seed)
    featurizer.fit(records, y_all)
    classifier = _make_classifier(spec["classifier"], grid[best], seed)
    classifier.fit(featurizer.transform(records), y_all)
    return TrainedDetector(
        name=name,
        featurizer=featurizer,
        classifier=classifier,
        metadata={
            "seed": seed,
            "grid": grid,
            "cv_a_mean": cv_scores,
            "chosen": grid[best],
            "n_train": len(records),
            "classifier_kind": spec["classifier"],
            "notes": _substitution_notes(name),
        },
    )


def _substitution_notes(name: str) -> list[str]:
    notes = []
    if name == "DroidDetector":
        notes.append("deep-belief backend realized as a single-hidden-layer MLP")
    if name == "AndroDialysis":
        notes.append("bayesian network defaults to naive structure; TAN behind a flag")
    return notes
