"""Confusion counts and the derived evaluation metrics.

Ratios whose denominator is empty are reported as absent (None), never NaN
or silent zeros, so summary statistics over many runs stay honest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def p(self) -> int:
        return self.tp + self.fn

    @property
    def n(self) -> int:
        return self.tn + self.fp

    @property
    def total(self) -> int:
        return self.p + self.n

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionCounts":
        yt = np.asarray(y_true, dtype=np.int64)
        yp = np.asarray(y_pred, dtype=np.int64)
        if yt.shape != yp.shape:
            raise ValueError("label arrays differ in length")
        return cls(
            tp=int(((yt == 1) & (yp == 1)).sum()),
            fp=int(((yt == 0) & (yp == 1)).sum()),
            tn=int(((yt == 0) & (yp == 0)).sum()),
            fn=int(((yt == 1) & (yp == 0)).sum()),
        )


@dataclass(frozen=True)
class MetricsReport:
    counts: ConfusionCounts
    tpr: float | None
    fpr: float | None
    precision: float | None
    f1: float | None
    a_mean: float | None
    kappa: float | None

    def to_dict(self) -> dict:
        return {
            "tp": self.counts.tp,
            "fp": self.counts.fp,
            "tn": self.counts.tn,
            "fn": self.counts.fn,
            "tpr": self.tpr,
            "fpr": self.fpr,
            "precision": self.precision,
            "f1": self.f1,
            "a_mean": self.a_mean,
            "kappa": self.kappa,
        }


def metrics(counts: ConfusionCounts) -> MetricsReport:
    """TPR, FPR, precision, F1, A_mean and the kappa statistic."""
    p, n = counts.p, counts.n
    total = counts.total
    tpr = counts.tp / p if p > 0 else None
    fpr = counts.fp / n if n > 0 else None
    predicted_pos = counts.tp + counts.fp
    precision = counts.tp / predicted_pos if predicted_pos > 0 else None
    f1 = None
    if tpr is not None and precision is not None and (tpr + precision) > 0:
        f1 = 2.0 * tpr * precision / (tpr + precision)
    a_mean = (tpr + 1.0 - fpr) / 2.0 if tpr is not None and fpr is not None else None
    kappa = None
    if total > 0:
        p_o = (counts.tp + counts.tn) / total
        p_mal = p / total
        p_hat_mal = predicted_pos / total
        p_c = p_mal * p_hat_mal + (1.0 - p_mal) * (1.0 - p_hat_mal)
        if 1.0 - p_c > 0:
            kappa = (p_o - p_c) / (1.0 - p_c)
    return MetricsReport(
        counts=counts, tpr=tpr, fpr=fpr, precision=precision, f1=f1,
        a_mean=a_mean, kappa=kappa,
    )


def greyware_probe(vtds, predictions, buckets=range(1, 7)) -> dict[str, tuple[float, float]]:
    """Fraction predicted goodware/malware per VTD bucket and overall.

    Input is the greyware records' VTD values and the detector's hard labels
    (0 goodware / 1 malware), aligned by position.
    """
    vt = np.asarray(vtds, dtype=np.int64)
    pred = np.asarray(predictions, dtype=np.int64)
    if vt.shape != pred.shape:
        raise ValueError("vtd and prediction arrays differ in length")
    out: dict[str, tuple[float, float]] = {}
    for b in buckets:
        sel = pred[vt == b]
        if len(sel) == 0:
            continue
        m = float(sel.mean())
        out[f"vtd={b}"] = (1.0 - m, m)
    m = float(pred.mean()) if len(pred) else 0.0
    out["overall"] = (1.0 - m, m)
    return out
