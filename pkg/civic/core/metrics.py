"""Classification metrics shared by the name classifiers and the text categorizer."""

from typing import Optional, Sequence

import numpy as np
from sklearn.metrics import accuracy_score, confusion_matrix, precision_recall_fscore_support
from sklearn.model_selection import KFold

from .models import LabelMetrics, MetricsReport


def build_metrics_report(
    truth: Sequence[str],
    predicted: Sequence[str],
    labels: Sequence[str],
    fold_scores: Optional[list[float]] = None,
    oob_accuracy: Optional[float] = None,
) -> MetricsReport:
    """
    Computes accuracy, per-label precision/recall/F1/support, their macro averages and the confusion matrix.

    Labels that occur in `truth` or `predicted` but not in `labels` are appended in sorted order.
    Precision (recall) is 0 for a label that is never predicted (never true), and F1 is 0 when both are 0.
    """
    if len(truth) != len(predicted):
        raise ValueError("truth and predictions must have the same length")
    if len(truth) == 0:
        raise ValueError("cannot evaluate an empty set of examples")

    labels = list(labels)
    labels += sorted((set(truth) | set(predicted)) - set(labels))

    matrix = confusion_matrix(truth, predicted, labels=labels)
    precision, recall, f1, support = precision_recall_fscore_support(
        truth, predicted, labels=labels, zero_division=0
    )

    per_label = {
        label: LabelMetrics(
            precision=float(precision[i]),
            recall=float(recall[i]),
            f1=float(f1[i]),
            support=int(support[i]),
        )
        for i, label in enumerate(labels)
    }

    return MetricsReport(
        labels=labels,
        accuracy=float(accuracy_score(truth, predicted)),
        per_label=per_label,
        confusion=matrix.tolist(),
        macro_precision=float(np.mean(precision)),
        macro_recall=float(np.mean(recall)),
        macro_f1=float(np.mean(f1)),
        fold_scores=fold_scores,
        oob_accuracy=oob_accuracy,
    )


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Test indices of k near-equal folds over a seeded shuffle of range(n); the first n % k folds hold one extra."""
    if k < 2:
        raise ValueError("k-fold cross-validation needs k >= 2")
    if n < k:
        raise ValueError(f"cannot split {n} examples into {k} folds")
    folds = KFold(n_splits=k, shuffle=True, random_state=seed)
    return [test_index for _, test_index in folds.split(np.arange(n))]
