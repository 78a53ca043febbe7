"""
Binary classification metrics with fraud as the positive class.

Confusion counts stay Python ints so that MCC is computed exactly enough for the
sign to flip cleanly when predictions are inverted. Every 0/0 metric is 0.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from oneclass_fraud.errors import CalibrationError, ConfigError, InsufficientDataError, LabelError, ShapeError
from oneclass_fraud.models import ConfusionMatrix, MetricReport, RocCurve

logger = logging.getLogger(__name__)


def _binary_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values).reshape(-1)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise LabelError(f"{name} must contain only 0 and 1")
    return arr.astype(np.int64)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def confusion(predictions: Sequence[int], labels: Sequence[int]) -> ConfusionMatrix:
    """
    Count predictions against labels.

    Raises:
        ShapeError: If lengths differ or are zero
        LabelError: If an entry is not 0 or 1
    """
    pred = _binary_vector(predictions, "predictions")
    true = _binary_vector(labels, "labels")
    if pred.shape != true.shape:
        raise ShapeError(f"predictions ({pred.size}) and labels ({true.size}) differ in length")
    if pred.size == 0:
        raise ShapeError("cannot build a confusion matrix from zero predictions")
    return ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (true == 1))),
        fp=int(np.sum((pred == 1) & (true == 0))),
        tn=int(np.sum((pred == 0) & (true == 0))),
        fn=int(np.sum((pred == 0) & (true == 1))),
    )


def metric_report(cm: ConfusionMatrix) -> MetricReport:
    """Accuracy, precision, recall, F1 and MCC of a confusion matrix."""
    tp, fp, tn, fn = cm.tp, cm.fp, cm.tn, cm.fn
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(den) if den else 0.0
    return MetricReport(
        accuracy=_ratio(tp + tn, cm.total),
        precision=precision,
        recall=recall,
        f1=f1,
        mcc=max(-1.0, min(1.0, mcc)),
    )


def evaluate(predictions: Sequence[int], labels: Sequence[int]) -> Tuple[ConfusionMatrix, MetricReport]:
    cm = confusion(predictions, labels)
    return cm, metric_report(cm)


def _scores_and_labels(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = _binary_vector(labels, "labels")
    if s.shape != y.shape:
        raise ShapeError(f"scores ({s.size}) and labels ({y.size}) differ in length")
    if not np.all(np.isfinite(s)):
        raise ShapeError("scores must be finite")
    return s, y


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> RocCurve:
    """
    ROC curve over every distinct score and its trapezoidal AUC.

    A point is added per distinct score, highest first, so tied scores move both
    rates at once; the area then equals the Mann-Whitney statistic with half
    credit for ties.

    Raises:
        InsufficientDataError: If only one class is present
    """
    s, y = _scores_and_labels(scores, labels)
    positives = int(y.sum())
    negatives = int(y.size - positives)
    if positives == 0 or negatives == 0:
        raise InsufficientDataError("ROC needs both fraud and genuine labels")

    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    # Last index of each run of equal scores
    run_ends = np.flatnonzero(np.diff(s_sorted) != 0).tolist() + [s.size - 1]
    cum_tp = np.cumsum(y_sorted)

    fpr: List[float] = [0.0]
    tpr: List[float] = [0.0]
    thresholds: List[Optional[float]] = [None]
    twice_area = 0
    prev_tp = prev_fp = 0
    for end in run_ends:
        tp = int(cum_tp[end])
        fp = end + 1 - tp
        twice_area += (fp - prev_fp) * (tp + prev_tp)
        prev_tp, prev_fp = tp, fp
        fpr.append(fp / negatives)
        tpr.append(tp / positives)
        thresholds.append(float(s_sorted[end]))

    auc = twice_area / (2 * positives * negatives)
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, auc=auc)


def threshold_sweep(
    scores: Sequence[float], labels: Sequence[int], thresholds: Sequence[float]
) -> List[Tuple[float, MetricReport]]:
    """One (threshold, report) row per threshold, predicting fraud iff score > threshold."""
    s, y = _scores_and_labels(scores, labels)
    rows = []
    for t in thresholds:
        if not math.isfinite(t):
            raise ConfigError(f"threshold must be finite, got {t}")
        rows.append((float(t), metric_report(confusion((s > t).astype(np.int64), y))))
    return rows


def calibrate_threshold(scores: Sequence[float], labels: Sequence[int]) -> Tuple[float, MetricReport]:
    """
    Choose the threshold maximizing MCC on an evaluation set.

    Candidates are midpoints between consecutive distinct scores; among equal
    MCC values the smallest threshold wins.

    Returns:
        Tuple of (threshold, report at that threshold)

    Raises:
        CalibrationError: If one class is missing or all scores are equal
    """
    s, y = _scores_and_labels(scores, labels)
    if y.size == 0 or y.min() == y.max():
        raise CalibrationError("calibration needs both fraud and genuine examples")
    distinct = np.unique(s)
    if distinct.size < 2:
        raise CalibrationError("all evaluation scores are equal; no threshold separates them")
    candidates = (distinct[:-1] + distinct[1:]) / 2.0

    best_t, best_report = float(candidates[0]), None
    for t, report in threshold_sweep(s, y, candidates.tolist()):
        if best_report is None or report.mcc > best_report.mcc:
            best_t, best_report = t, report
    assert best_report is not None
    logger.info("Calibrated threshold %.6g (MCC %.4f)", best_t, best_report.mcc)
    return best_t, best_report
