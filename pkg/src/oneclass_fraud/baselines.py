"""
Comparators that need no external toolkit.

- OCNN: mean Euclidean distance to the k nearest genuine training points
- AEBaseline: an AutoEncoder trained on reconstruction loss alone, scored by
  its mean squared reconstruction error

Both decide fraud iff ``score > threshold`` with the threshold calibrated for
maximum MCC on a small labeled evaluation set.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from oneclass_fraud.config import FEATURE_NAMES, GENUINE
from oneclass_fraud.data import TransactionTable
from oneclass_fraud.detector import reconstruction_errors, reconstructor_specs
from oneclass_fraud.errors import ConfigError, InsufficientDataError, LabelError, UntrainedModelError
from oneclass_fraud.metrics import calibrate_threshold
from oneclass_fraud.models import BaselineConfig
from oneclass_fraud.nn_core import (
    AdamState,
    Matrix,
    NetworkParams,
    adam_step,
    as_matrix,
    backward,
    forward,
    init_network,
    reconstruction_loss,
)
from oneclass_fraud.seeding import SeedStreams

logger = logging.getLogger(__name__)

# Upper bound on query x training distance cells held at once
_DISTANCE_BLOCK = 1 << 23


def _genuine_features(records: Union[TransactionTable, Matrix], what: str) -> Tuple[Matrix, Tuple[str, ...]]:
    if isinstance(records, TransactionTable):
        if np.any(records.labels != GENUINE):
            raise LabelError(f"{what} must be genuine-only, found {records.fraud_count} fraud rows")
        return np.ascontiguousarray(records.features, dtype=np.float64), records.feature_names
    return as_matrix(records, len(FEATURE_NAMES), what), FEATURE_NAMES


# OCNN


@dataclass
class OCNNModel:
    """Genuine training points and the neighbor count of a k-NN outlier scorer."""

    k: int
    points: Optional[Matrix] = None
    threshold: Optional[float] = None
    feature_names: Tuple[str, ...] = FEATURE_NAMES

    @property
    def is_fitted(self) -> bool:
        return self.points is not None and len(self.points) > 0


def ocnn_fit(records: Union[TransactionTable, Matrix], k: int) -> OCNNModel:
    """
    Raises:
        ConfigError: If k is not in [1, training size]
        LabelError: If a fraud row is present
    """
    points, names = _genuine_features(records, "OCNN training set")
    if not 1 <= k <= len(points):
        raise ConfigError(f"k must lie in [1, {len(points)}], got {k}")
    logger.info("OCNN fitted on %d points with k=%d", len(points), k)
    return OCNNModel(k=k, points=points, feature_names=tuple(names))


def _require_fitted(model: OCNNModel) -> Matrix:
    if not model.is_fitted:
        raise UntrainedModelError("OCNN model has no training points")
    assert model.points is not None
    return model.points


def ocnn_scores(model: OCNNModel, features: Matrix) -> np.ndarray:
    """
    Mean distance from each row to its k nearest training points.

    Squared distances are summed feature by feature and neighbors are ranked by
    a stable sort, so equal distances go to the lower training index.
    """
    points = _require_fitted(model)
    queries = as_matrix(features, points.shape[1], "features")
    k = model.k
    block = max(1, _DISTANCE_BLOCK // len(points))
    out = np.empty(len(queries), dtype=np.float64)
    for start in range(0, len(queries), block):
        q = queries[start : start + block]
        acc = np.zeros((len(q), len(points)), dtype=np.float64)
        for j in range(points.shape[1]):
            diff = q[:, j : j + 1] - points[None, :, j]
            acc += diff * diff
        dist = np.sqrt(acc)
        nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
        for row in range(len(q)):
            out[start + row] = math.fsum(dist[row, nearest[row]].tolist()) / k
    return out


def ocnn_score(model: OCNNModel, x) -> float:
    points = _require_fitted(model)
    return float(ocnn_scores(model, as_matrix(x, points.shape[1], "x"))[0])


def ocnn_calibrate(model: OCNNModel, eval_set: TransactionTable) -> float:
    """
    Set and return the MCC-maximizing threshold on a labeled evaluation set.

    Raises:
        CalibrationError: If the evaluation set lacks a class
    """
    threshold, report = calibrate_threshold(ocnn_scores(model, eval_set.features), eval_set.labels)
    model.threshold = threshold
    logger.info("OCNN threshold %.6g, eval MCC %.4f", threshold, report.mcc)
    return threshold


# Plain AutoEncoder


@dataclass
class AEBaseline:
    """AutoEncoder trained without an adversary; scored by reconstruction error."""

    network: NetworkParams
    config: BaselineConfig
    threshold: Optional[float] = None
    feature_names: Tuple[str, ...] = FEATURE_NAMES
    data_fingerprint: Optional[str] = None
    history: List[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        n = len(self.feature_names)
        if self.network.in_features != n or self.network.out_features != n:
            raise ConfigError(f"baseline AutoEncoder must map {n} features to {n}")


def ae_baseline_train(records: TransactionTable, cfg: BaselineConfig) -> AEBaseline:
    """
    Train an AutoEncoder on genuine rows with reconstruction loss only.

    Raises:
        InsufficientDataError: If ``records`` is empty
        LabelError: If a fraud row is present
    """
    if len(records) == 0:
        raise InsufficientDataError("baseline training set is empty")
    features, names = _genuine_features(records, "baseline training set")
    streams = SeedStreams(cfg.seed)
    net = init_network(reconstructor_specs(len(names), cfg.hidden), streams.derive_seed("init.baseline"))
    optimizer = AdamState.for_network(net, cfg.learning_rate)
    shuffle = streams.generator("shuffle.baseline")
    model = AEBaseline(network=net, config=cfg, feature_names=tuple(names))

    n = len(features)
    for epoch in range(cfg.epochs):
        order = shuffle.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            if len(idx) < 2:
                continue
            batch = features[idx]
            out, cache = forward(net, batch, "train")
            value, grad = reconstruction_loss(cfg.loss_kind, out, batch)
            adam_step(optimizer, net, backward(net, cache, grad))
            losses.append(value)
        epoch_loss = math.fsum(losses) / len(losses) if losses else 0.0
        model.history.append(epoch_loss)
        logger.debug("baseline epoch %d: loss %.6f", epoch, epoch_loss)
    logger.info(
        "Baseline AutoEncoder trained on %d rows for %d epochs (final loss %.6f)",
        n,
        cfg.epochs,
        model.history[-1],
    )
    model.data_fingerprint = records.fingerprint()
    return model


def ae_baseline_scores(model: AEBaseline, features: Matrix) -> np.ndarray:
    return reconstruction_errors(model.network, features)


def ae_baseline_score(model: AEBaseline, x) -> float:
    """Mean squared reconstruction error of one transaction."""
    return float(ae_baseline_scores(model, as_matrix(x, model.network.in_features, "x"))[0])


def ae_baseline_calibrate(model: AEBaseline, eval_set: TransactionTable) -> float:
    threshold, report = calibrate_threshold(ae_baseline_scores(model, eval_set.features), eval_set.labels)
    model.threshold = threshold
    logger.info("AutoEncoder baseline threshold %.6g, eval MCC %.4f", threshold, report.mcc)
    return threshold


def predict(scores: np.ndarray, threshold: Optional[float]) -> np.ndarray:
    """Fraud iff score > threshold."""
    if threshold is None:
        raise UntrainedModelError("baseline threshold has not been calibrated")
    return (np.asarray(scores, dtype=np.float64) > threshold).astype(np.int64)
