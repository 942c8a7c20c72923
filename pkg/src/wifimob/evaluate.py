"""Train/test splitting, accuracy reports and stability-speed correlation."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np
from scipy.stats import rankdata

from .classify import Dataset, Model, predict_many
from .features import FeatureRecord, SpeedProvenance
from .trace import LABELS

REPORT_VERSION = 1


def split_half(records: Sequence, mode: str = "random", seed: int = 0, stratified: bool = False):
    """Partition records into (train, test) with ``len(train) == ceil(n / 2)``.

    ``mode`` is ``"random"`` (seeded shuffle) or ``"chrono"`` (earliest
    windows train). Stratified splits allocate each class its proportional
    share of the training half by largest remainder, so per-class counts are
    within one record of exact proportionality. Both halves keep input order.
    """
    n = len(records)
    if n < 2:
        raise ValueError(f"need at least 2 records to split, got {n}")
    if mode in ("chrono", "chronological"):
        order = sorted(range(n), key=lambda i: (_time(records[i]), i))
    elif mode == "random":
        order = list(np.random.default_rng(seed).permutation(n))
    else:
        raise ValueError(f"unknown split mode {mode!r}")
    n_train = math.ceil(n / 2)

    if not stratified:
        train_idx = set(int(i) for i in order[:n_train])
    else:
        by_class: dict = {}
        for i in order:
            by_class.setdefault(records[i].label, []).append(int(i))
        if None in by_class:
            raise ValueError("stratified split needs every record labeled")
        classes = sorted(by_class, key=lambda c: c.mobility)
        quota = {c: len(by_class[c]) * n_train / n for c in classes}
        alloc = {c: math.floor(quota[c]) for c in classes}
        rest = n_train - sum(alloc.values())
        for c in sorted(classes, key=lambda c: (-(quota[c] - alloc[c]), c.mobility))[:rest]:
            alloc[c] += 1
        empty = [c.value for c in classes if alloc[c] == 0]
        if empty:
            raise ValueError(f"stratified split leaves no training rows for {empty}")
        train_idx = {i for c in classes for i in by_class[c][: alloc[c]]}

    train = [records[i] for i in range(n) if i in train_idx]
    test = [records[i] for i in range(n) if i not in train_idx]
    return train, test


def _time(rec) -> float:
    return rec.window_start if hasattr(rec, "window_start") else rec.timestamp


@dataclass
class EvalReport:
    accuracy: float
    confusion: list[list[int]]  # [true][predicted], rows/cols in LABELS order
    precision: dict[str, float | None]
    recall: dict[str, float | None]
    n_train: int | None
    n_test: int
    split: dict = field(default_factory=dict)
    classifier: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "confusion": {
                "labels": [lab.value for lab in LABELS],
                "matrix": self.confusion,
            },
            "precision": self.precision,
            "recall": self.recall,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "split": self.split,
            "classifier": self.classifier,
        }


def confusion_report(true_labels, predicted_labels, **extra) -> EvalReport:
    index = {lab: i for i, lab in enumerate(LABELS)}
    k = len(LABELS)
    cm = np.zeros((k, k), dtype=int)
    for t, p in zip(true_labels, predicted_labels, strict=True):
        cm[index[t], index[p]] += 1
    n = int(cm.sum())
    if n == 0:
        raise ValueError("cannot evaluate on an empty test set")
    precision, recall = {}, {}
    for i, lab in enumerate(LABELS):
        col, row = cm[:, i].sum(), cm[i, :].sum()
        precision[lab.value] = float(cm[i, i] / col) if col else None
        recall[lab.value] = float(cm[i, i] / row) if row else None
    return EvalReport(
        accuracy=float(np.trace(cm) / n),
        confusion=cm.tolist(),
        precision=precision,
        recall=recall,
        n_test=n,
        n_train=extra.pop("n_train", None),
        **extra,
    )


def evaluate(model: Model, test: Dataset, n_train: int | None = None, split=None, classifier=None) -> EvalReport:
    """Accuracy, confusion matrix and per-class precision/recall on ``test``."""
    if len(test) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    predicted = predict_many(model, test.X)
    truth = [LABELS[i] for i in test.y]
    return confusion_report(truth, predicted, n_train=n_train, split=split or {}, classifier=classifier or {})


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da, db = a - a.mean(), b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    return max(-1.0, min(1.0, float(da @ db) / denom))


def stability_speed_correlation(records: Sequence[FeatureRecord]) -> tuple[float, float]:
    """(Pearson, Spearman) between stability_mean and observed speed.

    Imputed speeds are ignored so the regression cannot feed its own
    evidence. Spearman uses average ranks for ties.
    """
    pairs = [
        (r.stability_mean, r.speed)
        for r in records
        if r.stability_mean is not None and r.speed_provenance is SpeedProvenance.OBSERVED
    ]
    if len(pairs) < 3:
        raise ValueError(f"need at least 3 (stability, observed speed) pairs, got {len(pairs)}")
    a = np.array([p[0] for p in pairs], dtype=float)
    b = np.array([p[1] for p in pairs], dtype=float)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise ValueError("correlation undefined: zero variance")
    return _pearson(a, b), _pearson(rankdata(a), rankdata(b))


# -- report files ---------------------------------------------------------------


def write_report(fh: IO[str], reports: dict[str, EvalReport], extra: dict | None = None, config: dict | None = None):
    doc = {
        "format": "wifimob-report",
        "version": REPORT_VERSION,
        "config": config or {},
        "classifiers": {name: r.to_dict() for name, r in reports.items()},
    }
    doc.update(extra or {})
    json.dump(doc, fh, sort_keys=True, indent=1, allow_nan=False)
    fh.write("\n")


def write_comparison(fh: IO[str], reports: dict[str, EvalReport]) -> None:
    """Flat accuracy table, one row per classifier."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["classifier", "accuracy", "n_train", "n_test"])
    for name, r in reports.items():
        w.writerow([name, repr(r.accuracy), "" if r.n_train is None else r.n_train, r.n_test])


def write_metrics(fh: IO[str], reports: dict[str, EvalReport]) -> None:
    """Per-class precision/recall in long format for plotting."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["classifier", "label", "precision", "recall"])
    for name, r in reports.items():
        for lab in LABELS:
            p, rc = r.precision[lab.value], r.recall[lab.value]
            w.writerow([name, lab.value, "" if p is None else repr(p), "" if rc is None else repr(rc)])
