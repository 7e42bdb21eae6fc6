"""Micro/Macro F1 evaluation for single-label multiclass predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EvalReport:
    """Micro F1 (equals accuracy for single-label multiclass), Macro F1
    (unweighted mean of per-class F1 over classes present in gold or
    predictions), per-class scores, and the full confusion matrix
    (rows = gold, columns = predicted)."""

    micro_f1: float
    macro_f1: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    confusion: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.f1.shape[0]

    def present_classes(self) -> list[int]:
        """Classes that occur in gold or predictions."""
        in_gold = self.confusion.sum(axis=1) > 0
        in_pred = self.confusion.sum(axis=0) > 0
        return [c for c in range(self.num_classes) if in_gold[c] or in_pred[c]]

    def macro_f1_over(self, classes) -> float:
        """Macro F1 restricted to the intersection of ``classes`` with the
        classes present in gold or predictions."""
        keep = [c for c in self.present_classes() if c in set(classes)]
        if not keep:
            return 0.0
        return float(np.mean(self.f1[keep]))

    def to_dict(self) -> dict:
        return {
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "per_class": [
                {
                    "label": c,
                    "precision": float(self.precision[c]),
                    "recall": float(self.recall[c]),
                    "f1": float(self.f1[c]),
                    "support": int(self.support[c]),
                }
                for c in range(self.num_classes)
            ],
            "confusion": self.confusion.tolist(),
        }


def confusion_matrix(preds, golds, num_classes: int) -> np.ndarray:
    preds = np.asarray(preds, dtype=np.int64)
    golds = np.asarray(golds, dtype=np.int64)
    if preds.shape != golds.shape or preds.ndim != 1 or preds.size == 0:
        raise ValueError("preds and golds must be equal-length non-empty 1-D sequences")
    for name, arr in (("preds", preds), ("golds", golds)):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise ValueError(f"{name} contain labels outside [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (golds, preds), 1)
    return counts


def evaluate(preds, golds, num_classes: int) -> EvalReport:
    """Score predictions against gold labels.

    Per-class F1 = 2PR/(P+R) with 0/0 -> 0. Micro F1 = total true positives
    over total instances (accuracy). Macro F1 averages over classes present
    in gold or predictions; entirely absent classes are excluded.
    Permutation-invariant in instance order.
    """
    counts = confusion_matrix(preds, golds, num_classes)
    tp = np.diag(counts).astype(np.float64)
    pred_totals = counts.sum(axis=0).astype(np.float64)
    gold_totals = counts.sum(axis=1).astype(np.float64)

    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(pred_totals > 0, tp / pred_totals, 0.0)
        recall = np.where(gold_totals > 0, tp / gold_totals, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)

    present = (gold_totals > 0) | (pred_totals > 0)
    macro = float(f1[present].mean()) if present.any() else 0.0
    micro = float(tp.sum() / counts.sum())
    return EvalReport(
        micro_f1=micro,
        macro_f1=macro,
        precision=precision,
        recall=recall,
        f1=f1,
        support=gold_totals.astype(np.int64),
        confusion=counts,
    )
