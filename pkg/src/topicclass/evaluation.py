"""Confusion matrices and precision/recall/F-score for the binary task.

"positive" is the positive class throughout. Zero denominators follow the
usual conventions: precision is 0 when nothing was predicted positive, recall
is 0 when nothing is actually positive, and the F-score is 0 when precision
and recall are both 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import LABELS, NEGATIVE, POSITIVE


class EvaluationError(ValueError):
    """Prediction/label lists that cannot be scored."""


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise EvaluationError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionMatrix":
        """The same outcomes with the negative class treated as positive."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    fscore: float


def confusion(predicted: Sequence[str], actual: Sequence[str]) -> ConfusionMatrix:
    """Count TP/FP/FN/TN over aligned prediction and truth lists."""
    if len(predicted) != len(actual):
        raise EvaluationError(
            f"predicted ({len(predicted)}) and actual ({len(actual)}) lengths differ"
        )
    if len(predicted) == 0:
        raise EvaluationError("cannot evaluate an empty prediction list")
    tp = fp = fn = tn = 0
    for pred, act in zip(predicted, actual):
        if pred not in LABELS or act not in LABELS:
            raise EvaluationError(f"labels must be in {LABELS}, got ({pred!r}, {act!r})")
        if act == POSITIVE:
            if pred == POSITIVE:
                tp += 1
            else:
                fn += 1
        else:
            if pred == POSITIVE:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def metrics(cm: ConfusionMatrix) -> Metrics:
    """Precision, recall, and their equally weighted harmonic mean."""
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else 0.0
    fscore = (
        2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    )
    return Metrics(precision=precision, recall=recall, fscore=fscore)


def macro_metrics(cm: ConfusionMatrix) -> Metrics:
    """Unweighted average of per-class metrics over both classes."""
    pos = metrics(cm)
    neg = metrics(cm.swapped())
    return Metrics(
        precision=(pos.precision + neg.precision) / 2.0,
        recall=(pos.recall + neg.recall) / 2.0,
        fscore=(pos.fscore + neg.fscore) / 2.0,
    )
