"""Classification metrics: confusion matrix, accuracy, macro/micro
precision, recall, and F1 (0/0 convention: undefined ratios count as 0)."""

from dataclasses import dataclass

import numpy as np


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (K,K) ints, rows = true class
    normalized: np.ndarray  # rows sum to 1 where the row has samples


def confusion_matrix(y_true, y_pred, num_classes):
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    row_sums = counts.sum(axis=1, keepdims=True)
    normalized = np.divide(
        counts, row_sums, out=np.zeros((num_classes, num_classes)),
        where=row_sums > 0,
    )
    return ConfusionMatrix(counts=counts, normalized=normalized)


def _safe_div(a, b):
    return a / b if b > 0 else 0.0


def metrics_from_confusion(cm, average="macro"):
    """accuracy / precision / recall / f1 from a ConfusionMatrix."""
    counts = cm.counts
    total = counts.sum()
    accuracy = _safe_div(float(np.trace(counts)), float(total))
    k = counts.shape[0]
    tp = np.diag(counts).astype(np.float64)
    pred_per_class = counts.sum(axis=0).astype(np.float64)
    true_per_class = counts.sum(axis=1).astype(np.float64)
    if average == "micro":
        precision = _safe_div(tp.sum(), pred_per_class.sum())
        recall = _safe_div(tp.sum(), true_per_class.sum())
        f1 = _safe_div(2 * precision * recall, precision + recall)
    elif average == "macro":
        precs = [_safe_div(tp[i], pred_per_class[i]) for i in range(k)]
        recs = [_safe_div(tp[i], true_per_class[i]) for i in range(k)]
        f1s = [_safe_div(2 * p * r, p + r) for p, r in zip(precs, recs)]
        precision = sum(precs) / k
        recall = sum(recs) / k
        f1 = sum(f1s) / k
    else:
        raise ValueError(f"unknown averaging {average!r}")
    return {
        "accuracy": accuracy, "precision": precision,
        "recall": recall, "f1": f1,
    }


def format_matrix(matrix, fmt="{:.4f}"):
    return "\n".join("\t".join(fmt.format(v) for v in row) for row in matrix)
