"""Dataset machinery: VTD labeling, neighborhood deduplication, balanced and
unbalanced sampling, and cross-validation fold construction.

All operations are pure given their seed; split plans persist to JSON so any
scenario can be replayed byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .ir import AppRecord, ClassLabel, YearMonth


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class LabelingPolicy:
    """vtd <= goodware_max is goodware, vtd >= malware_min is malware,
    the open interval between them is greyware."""

    goodware_max_vtd: int = 0
    malware_min_vtd: int = 7

    def check(self) -> None:
        if self.goodware_max_vtd < 0:
            raise ValueError("goodware_max_vtd must be >= 0")
        if self.goodware_max_vtd >= self.malware_min_vtd:
            raise ValueError("goodware_max_vtd must be < malware_min_vtd")

    def of(self, vtd: int) -> ClassLabel:
        if vtd <= self.goodware_max_vtd:
            return ClassLabel.GOODWARE
        if vtd >= self.malware_min_vtd:
            return ClassLabel.MALWARE
        return ClassLabel.GREYWARE


def label(records: list[AppRecord], policy: LabelingPolicy) -> dict[str, ClassLabel]:
    policy.check()
    return {r.id: policy.of(r.vtd) for r in records}


_LABEL_ORDER = (ClassLabel.GOODWARE, ClassLabel.GREYWARE, ClassLabel.MALWARE)


def label_swap_matrix(
    labels_a: dict[str, ClassLabel], labels_b: dict[str, ClassLabel]
) -> np.ndarray:
    """3x3 count matrix of label moves between two annotations (G, X, M order)."""
    if set(labels_a) != set(labels_b):
        raise ValueError("label swap matrix requires the same id universe on both sides")
    pos = {cls: i for i, cls in enumerate(_LABEL_ORDER)}
    matrix = np.zeros((3, 3), dtype=np.int64)
    for rid, la in labels_a.items():
        matrix[pos[la], pos[labels_b[rid]]] += 1
    return matrix


# --- deduplication --------------------------------------------------------

@dataclass(frozen=True)
class DedupConfig:
    epsilon: float = 0.0
    seed: int = 0

    def check(self) -> None:
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


def api_frequency_matrix(records: list[AppRecord]) -> tuple[np.ndarray, list[str]]:
    """Dense API-call frequency vectors over the union of API names."""
    names = sorted({api for r in records for api in r.api_calls})
    index = {n: i for i, n in enumerate(names)}
    X = np.zeros((len(records), len(names)), dtype=np.float64)
    for row, r in enumerate(records):
        for api, count in r.api_calls.items():
            X[row, index[api]] = count
    return X, names


def dedup(
    records: list[AppRecord], config: DedupConfig
) -> tuple[list[AppRecord], dict[str, list[str]]]:
    """Epsilon-neighborhood filtering over API-call frequency vectors.

    Repeatedly picks a random remaining sample and removes everything within
    Euclidean distance epsilon of it.  Kept representatives end up pairwise
    more than epsilon apart.  Apply per class; mixing classes collapses
    cross-class neighbors.
    """
    config.check()
    if not records:
        raise ValueError("dedup requires a non-empty record list")
    X, _ = api_frequency_matrix(records)
    n = len(records)
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(n)
    eps2 = config.epsilon ** 2

    alive = np.ones(n, dtype=bool)
    kept_idx: list[int] = []
    groups: dict[str, list[str]] = {}
    for idx in order:
        if not alive[idx]:
            continue
        alive_idx = np.flatnonzero(alive)
        diffs = X[alive_idx] - X[idx]
        d2 = np.einsum("ij,ij->i", diffs, diffs)
        members = alive_idx[d2 <= eps2]
        alive[members] = False
        kept_idx.append(int(idx))
        groups[records[idx].id] = sorted(records[m].id for m in members)
    kept_idx.sort()
    return [records[i] for i in kept_idx], groups


def group_size_histogram(groups: dict[str, list[str]]) -> dict[int, int]:
    hist: dict[int, int] = {}
    for members in groups.values():
        hist[len(members)] = hist.get(len(members), 0) + 1
    return dict(sorted(hist.items()))


# --- sampling and splits --------------------------------------------------

@dataclass(frozen=True)
class SamplingConfig:
    mode: str = "balanced"  # balanced | unbalanced
    train_fraction: float = 0.70
    unbalanced_ratio_mean: float = 0.1
    unbalanced_ratio_std: float = 0.02
    seed: int = 0

    def check(self) -> None:
        if self.mode not in ("balanced", "unbalanced"):
            raise ValueError(f"unknown sampling mode {self.mode!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0,1)")


@dataclass(frozen=True)
class SplitPlan:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    folds: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...] = ()
    time_aware: bool = False

    def check_disjoint(self) -> None:
        if set(self.train_ids) & set(self.test_ids):
            raise SplitError("train and test sets overlap")

    def with_folds(self, folds, time_aware: bool) -> "SplitPlan":
        return replace(
            self,
            folds=tuple((tuple(tr), tuple(va)) for tr, va in folds),
            time_aware=time_aware,
        )


def sample_split(
    records: list[AppRecord],
    labels: dict[str, ClassLabel],
    sampling: SamplingConfig,
    period: tuple[YearMonth, YearMonth] | None = None,
) -> SplitPlan:
    """Monthly class sampling plus a per-month train/test split.

    Balanced mode equalizes class counts per month; unbalanced mode keeps
    goodware in full and downsamples malware to a Gaussian-drawn ratio of it
    (truncated at zero).  Greyware never enters a split.
    """
    sampling.check()
    rng = np.random.default_rng(sampling.seed)

    eligible = []
    for r in records:
        lbl = labels.get(r.id)
        if lbl not in (ClassLabel.GOODWARE, ClassLabel.MALWARE):
            continue
        if period is not None and not (
            period[0].index() <= r.timestamp.index() <= period[1].index()
        ):
            continue
        eligible.append(r)
    if not eligible:
        raise SplitError("no labeled records in the requested period")

    months = sorted({r.timestamp for r in eligible}, key=lambda m: m.index())
    by_month: dict[YearMonth, dict[ClassLabel, list[str]]] = {
        m: {ClassLabel.GOODWARE: [], ClassLabel.MALWARE: []} for m in months
    }
    for r in eligible:
        by_month[r.timestamp][labels[r.id]].append(r.id)

    train: list[str] = []
    test: list[str] = []
    for m in months:
        good = sorted(by_month[m][ClassLabel.GOODWARE])
        mal = sorted(by_month[m][ClassLabel.MALWARE])
        if not good or not mal:
            missing = "goodware" if not good else "malware"
            raise SplitError(f"month {m} has no {missing} candidates")
        if sampling.mode == "balanced":
            k = min(len(good), len(mal))
            good = [good[i] for i in rng.choice(len(good), size=k, replace=False)]
            mal = [mal[i] for i in rng.choice(len(mal), size=k, replace=False)]
        else:
            ratio = max(0.0, rng.normal(sampling.unbalanced_ratio_mean,
                                        sampling.unbalanced_ratio_std))
            k = min(len(mal), round(len(good) * ratio))
            mal = [mal[i] for i in rng.choice(len(mal), size=k, replace=False)]
        for ids in (good, mal):
            ids = sorted(ids)
            n_train = round(sampling.train_fraction * len(ids))
            picked = rng.permutation(len(ids))
            train.extend(ids[i] for i in sorted(picked[:n_train]))
            test.extend(ids[i] for i in sorted(picked[n_train:]))

    plan = SplitPlan(train_ids=tuple(train), test_ids=tuple(test))
    plan.check_disjoint()
    return plan


def make_folds(
    train_ids: list[str],
    k: int,
    time_aware: bool,
    seed: int,
    labels: dict[str, ClassLabel] | None = None,
    timestamps: dict[str, YearMonth] | None = None,
) -> list[tuple[list[str], list[str]]]:
    """(train, validation) id pairs for model selection.

    Standard mode is class-ratio-stratified random k-fold.  Time-aware mode
    orders chronologically into k contiguous segments at month boundaries and
    validates each segment against everything strictly older (rolling
    origin), yielding k-1 usable pairs.
    """
    if k < 2:
        raise SplitError("k must be >= 2")
    ids = list(train_ids)
    if time_aware:
        if timestamps is None:
            raise SplitError("time-aware folds require timestamps")
        months = sorted({timestamps[i] for i in ids}, key=lambda m: m.index())
        if len(months) < k:
            raise SplitError(f"{k} time segments need at least {k} distinct months")
        by_month = {m: sorted(i for i in ids if timestamps[i] == m) for m in months}
        # Allocate contiguous months to k segments, balancing record counts.
        total = len(ids)
        segments: list[list[str]] = [[] for _ in range(k)]
        seg = 0
        for mi, m in enumerate(months):
            remaining_months = len(months) - mi
            remaining_segs = k - seg
            seg_full = len(segments[seg]) >= total / k
            if seg < k - 1 and seg_full and remaining_months >= remaining_segs:
                seg += 1
            segments[seg].extend(by_month[m])
        folds = []
        for i in range(1, k):
            tr = [rid for s in segments[:i] for rid in s]
            va = segments[i]
            if tr and va:
                folds.append((tr, va))
        if not folds:
            raise SplitError("time-aware folding produced no usable folds")
        return folds

    if labels is None:
        raise SplitError("stratified folds require labels")
    rng = np.random.default_rng(seed)
    by_class: dict[ClassLabel, list[str]] = {}
    for rid in sorted(ids):
        by_class.setdefault(labels[rid], []).append(rid)
    for cls, members in by_class.items():
        if len(members) < k:
            raise SplitError(
                f"k={k} exceeds {cls.name.lower()} count {len(members)}"
            )
    assignments: list[list[str]] = [[] for _ in range(k)]
    for cls in sorted(by_class, key=lambda c: c.value):
        members = by_class[cls]
        order = rng.permutation(len(members))
        for pos, idx in enumerate(order):
            assignments[pos % k].append(members[idx])
    folds = []
    all_ids = set(ids)
    for i in range(k):
        va = sorted(assignments[i])
        tr = sorted(all_ids - set(va))
        folds.append((tr, va))
    return folds


# --- persistence ----------------------------------------------------------

def split_to_dict(plan: SplitPlan) -> dict:
    return {
        "format": "droidlab-split",
        "version": 1,
        "train_ids": list(plan.train_ids),
        "test_ids": list(plan.test_ids),
        "folds": [[list(tr), list(va)] for tr, va in plan.folds],
        "time_aware": plan.time_aware,
    }


def split_from_dict(data: dict) -> SplitPlan:
    if data.get("format") != "droidlab-split":
        raise SplitError("not a droidlab split file")
    plan = SplitPlan(
        train_ids=tuple(data["train_ids"]),
        test_ids=tuple(data["test_ids"]),
        folds=tuple((tuple(tr), tuple(va)) for tr, va in data.get("folds", [])),
        time_aware=bool(data.get("time_aware", False)),
    )
    plan.check_disjoint()
    return plan


def save_split(plan: SplitPlan, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(split_to_dict(plan), fh, sort_keys=True)
        fh.write("\n")


def load_split(path) -> SplitPlan:
    with open(path, "r", encoding="utf-8") as fh:
        return split_from_dict(json.load(fh))
