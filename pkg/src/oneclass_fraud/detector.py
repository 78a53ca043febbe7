"""
Adversarially trained one-class fraud detector.

An AutoEncoder R reconstructs genuine transactions; a classifier C learns to tell
original rows (target 1) from reconstructions (target 0), while R learns to
reconstruct well *and* fool C. Both are trained on genuine rows only. Fraud rows,
never seen in training, reconstruct poorly and land away from C's equilibrium.

Per batch the schedule is one classifier step followed by one reconstructor step:

- classifier: minimize ``-log C(X) - log(1 - C(R(X)))`` with R frozen
- reconstructor: minimize ``loss(R(X), X) - log C(R(X))`` with C frozen

"Frozen" includes batchnorm buffers: the other network runs with batch
statistics but without updating its running mean/variance.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from oneclass_fraud.config import FEATURE_NAMES, GENUINE, N_FEATURES
from oneclass_fraud.data import TransactionTable
from oneclass_fraud.errors import (
    ConfigError,
    FingerprintMismatchError,
    InsufficientDataError,
    LabelError,
    UntrainedModelError,
)
from oneclass_fraud.models import (
    SCORE_MODES,
    DetectionResult,
    EpochSummary,
    LossKind,
    ScoreMode,
    TrainConfig,
    TrainStepReport,
)
from oneclass_fraud.nn_core import (
    AdamState,
    Gradients,
    Matrix,
    NetworkParams,
    adam_step,
    as_matrix,
    backward,
    bce,
    forward,
    init_network,
    mlp_specs,
    reconstruction_loss,
)
from oneclass_fraud.seeding import SeedStreams

logger = logging.getLogger(__name__)


def reconstructor_specs(n_features: int = N_FEATURES, hidden: Sequence[int] = (16, 8)):
    """Encoder through ``hidden`` to the latent width, mirrored decoder, linear output."""
    widths = list(hidden) + list(reversed(hidden[:-1]))
    return mlp_specs(n_features, widths, n_features, final="linear")


def classifier_specs(n_features: int = N_FEATURES, hidden: Sequence[int] = (32, 16)):
    return mlp_specs(n_features, list(hidden), 1, final="sigmoid")


@dataclass
class DetectorModel:
    """Reconstructor R and classifier C with their training metadata."""

    reconstructor: NetworkParams
    classifier: NetworkParams
    train_config: TrainConfig
    feature_names: Tuple[str, ...] = FEATURE_NAMES
    data_fingerprint: Optional[str] = None
    history: List[EpochSummary] = field(default_factory=list)

    def __post_init__(self) -> None:
        n = len(self.feature_names)
        if self.reconstructor.in_features != n or self.reconstructor.out_features != n:
            raise ConfigError(f"reconstructor must map {n} features to {n}")
        if self.classifier.in_features != n or self.classifier.out_features != 1:
            raise ConfigError(f"classifier must map {n} features to 1 output")

    @classmethod
    def initialize(
        cls, cfg: TrainConfig, feature_names: Tuple[str, ...] = FEATURE_NAMES
    ) -> "DetectorModel":
        """Untrained model with both networks initialized from the config seed."""
        streams = SeedStreams(cfg.seed)
        n = len(feature_names)
        return cls(
            reconstructor=init_network(
                reconstructor_specs(n, cfg.reconstructor_hidden),
                streams.derive_seed("init.reconstructor"),
            ),
            classifier=init_network(
                classifier_specs(n, cfg.classifier_hidden), streams.derive_seed("init.classifier")
            ),
            train_config=cfg,
            feature_names=tuple(feature_names),
        )

    @property
    def loss_kind(self) -> LossKind:
        return self.train_config.loss_kind

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def is_trained(self) -> bool:
        return self.data_fingerprint is not None


def require_trained(model: DetectorModel, expected_fingerprint: Optional[str] = None) -> None:
    """
    Raises:
        UntrainedModelError: If the model carries no training fingerprint
        FingerprintMismatchError: If it was trained on other data than expected
    """
    if not model.is_trained:
        raise UntrainedModelError("model has not been trained")
    if expected_fingerprint is not None and model.data_fingerprint != expected_fingerprint:
        raise FingerprintMismatchError(
            "model was trained on a different split",
            {"model": model.data_fingerprint, "expected": expected_fingerprint},
        )


# Inference


def reconstruction_errors(net: NetworkParams, features: Matrix) -> np.ndarray:
    """Per-row mean squared difference between R(x) and x over all features."""
    x = as_matrix(features, net.in_features, "features")
    out, _ = forward(net, x, "eval")
    d = out - x
    return np.mean(d * d, axis=1)


def reconstruct_batch(model: DetectorModel, features: Matrix) -> Matrix:
    x = as_matrix(features, model.n_features, "features")
    out, _ = forward(model.reconstructor, x, "eval")
    return out


def classify_batch(model: DetectorModel, features: Matrix) -> np.ndarray:
    x = as_matrix(features, model.n_features, "features")
    out, _ = forward(model.classifier, x, "eval")
    return out[:, 0]


def reconstruct(model: DetectorModel, x) -> np.ndarray:
    """Eval-mode reconstruction R(x) of one transaction."""
    return reconstruct_batch(model, as_matrix(x, model.n_features, "x"))[0]


def classify(model: DetectorModel, x) -> float:
    """Eval-mode classifier output C(x) in (0, 1) for one transaction."""
    return float(classify_batch(model, as_matrix(x, model.n_features, "x"))[0])


def score_batch(model: DetectorModel, features: Matrix, mode: ScoreMode) -> np.ndarray:
    """
    Anomaly score of each row.

    - ``classify_reconstructed``: C(R(x))
    - ``classify_raw``: C(x)
    - ``distance_from_half``: |C(R(x)) - 0.5| * 2
    """
    if mode == "classify_reconstructed":
        return classify_batch(model, reconstruct_batch(model, features))
    if mode == "classify_raw":
        return classify_batch(model, features)
    if mode == "distance_from_half":
        return np.abs(classify_batch(model, reconstruct_batch(model, features)) - 0.5) * 2.0
    raise ConfigError(f"unknown score mode {mode!r}; expected one of {SCORE_MODES}")


def score(model: DetectorModel, x, mode: ScoreMode = "classify_reconstructed") -> float:
    return float(score_batch(model, as_matrix(x, model.n_features, "x"), mode)[0])


def detect(
    score: float, threshold: float, score_mode: ScoreMode = "classify_reconstructed"
) -> DetectionResult:
    """Fraud iff ``score > threshold`` (strict)."""
    if not math.isfinite(score):
        raise ConfigError(f"score must be finite, got {score}")
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must lie in (0, 1), got {threshold}")
    return DetectionResult(
        score=score, label=int(score > threshold), threshold=threshold, score_mode=score_mode
    )


def detect_batch(scores: np.ndarray, threshold: float) -> np.ndarray:
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must lie in (0, 1), got {threshold}")
    return (np.asarray(scores, dtype=np.float64) > threshold).astype(np.int64)


# Training


def count_steps(n_rows: int, batch_size: int, epochs: int) -> int:
    """Optimization steps of the schedule; a last batch of one row is dropped."""
    full, rest = divmod(n_rows, batch_size)
    return epochs * (full + (1 if rest >= 2 else 0))


def _add_gradients(a: Gradients, b: Gradients) -> Gradients:
    return Gradients(params={k: a.params[k] + b.params[k] for k in a.params}, input=a.input + b.input)


def classifier_step(
    model: DetectorModel, optimizer: AdamState, batch: Matrix
) -> Tuple[float, float, float]:
    """
    One update of C on real rows (target 1) and their reconstructions (target 0).

    R is evaluated with batch statistics and is left untouched.

    Returns:
        Tuple of (L_C^GAN, mean C(X), mean C(R(X)))
    """
    rows = batch.shape[0]
    x_hat, _ = forward(model.reconstructor, batch, "train", track_stats=False)
    p_real, cache_real = forward(model.classifier, batch, "train")
    p_fake, cache_fake = forward(model.classifier, x_hat, "train")
    loss_real, grad_real = bce(p_real, 1.0)
    loss_fake, grad_fake = bce(p_fake, 0.0)
    grads = _add_gradients(
        backward(model.classifier, cache_real, grad_real / rows),
        backward(model.classifier, cache_fake, grad_fake / rows),
    )
    adam_step(optimizer, model.classifier, grads)
    return (
        float(loss_real.mean() + loss_fake.mean()),
        float(p_real.mean()),
        float(p_fake.mean()),
    )


def reconstructor_step(
    model: DetectorModel, optimizer: AdamState, batch: Matrix
) -> Tuple[float, float]:
    """
    One update of R on reconstruction loss plus ``-log C(R(X))``.

    C is evaluated with batch statistics and is left untouched.

    Returns:
        Tuple of (L_R, L_R^GAN)
    """
    rows = batch.shape[0]
    x_hat, cache_r = forward(model.reconstructor, batch, "train")
    rec_value, rec_grad = reconstruction_loss(model.loss_kind, x_hat, batch)
    p, cache_c = forward(model.classifier, x_hat, "train", track_stats=False)
    adv_values, adv_grad = bce(p, 1.0)
    through_c = backward(model.classifier, cache_c, adv_grad / rows)
    grads = backward(model.reconstructor, cache_r, rec_grad + through_c.input)
    adam_step(optimizer, model.reconstructor, grads)
    return rec_value, float(adv_values.mean())


def summarize_epoch(epoch: int, reports: Sequence[TrainStepReport]) -> EpochSummary:
    if not reports:
        logger.warning("Epoch %d ran no training step; its summary holds no means", epoch)
        return EpochSummary(epoch=epoch, steps=0)

    def mean(attr: str) -> float:
        return math.fsum(getattr(r, attr) for r in reports) / len(reports)

    c_real, c_fake = mean("mean_c_real"), mean("mean_c_reconstructed")
    return EpochSummary(
        epoch=epoch,
        steps=len(reports),
        loss_reconstruction=mean("loss_reconstruction"),
        loss_adversarial=mean("loss_adversarial"),
        loss_classifier=mean("loss_classifier"),
        mean_c_real=c_real,
        mean_c_reconstructed=c_fake,
        equilibrium_gap=max(abs(c_real - 0.5), abs(c_fake - 0.5)),
    )


def train(
    dataset: TransactionTable, cfg: TrainConfig, fingerprint: Optional[str] = None
) -> Tuple[DetectorModel, List[TrainStepReport]]:
    """
    Train R and C adversarially on genuine transactions.

    Rows are reshuffled every epoch from the ``shuffle`` sub-stream of
    ``cfg.seed``; a final batch of a single row is skipped because batchnorm
    needs batch statistics.

    Args:
        dataset: Genuine-only training rows
        cfg: Optimization settings
        fingerprint: Identity to bind the model to (defaults to the dataset's own)

    Returns:
        Tuple of (trained model, one report per step)

    Raises:
        InsufficientDataError: If the dataset is empty
        LabelError: If any row is labeled fraud
    """
    if len(dataset) == 0:
        raise InsufficientDataError("training set is empty")
    if np.any(dataset.labels != GENUINE):
        raise LabelError(
            f"training set must be genuine-only, found {dataset.fraud_count} fraud rows"
        )

    model = DetectorModel.initialize(cfg, dataset.feature_names)
    opt_r = AdamState.for_network(model.reconstructor, cfg.learning_rate)
    opt_c = AdamState.for_network(model.classifier, cfg.learning_rate)
    shuffle = SeedStreams(cfg.seed).generator("shuffle")
    features = np.ascontiguousarray(dataset.features, dtype=np.float64)
    n = len(dataset)

    logger.info(
        "Training on %d genuine rows: %d epochs, batch %d, lr %g, %s loss (%d steps)",
        n,
        cfg.epochs,
        cfg.batch_size,
        cfg.learning_rate,
        cfg.loss_kind,
        count_steps(n, cfg.batch_size, cfg.epochs),
    )
    reports: List[TrainStepReport] = []
    for epoch in range(cfg.epochs):
        order = shuffle.permutation(n)
        epoch_reports: List[TrainStepReport] = []
        for batch_index, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            if len(idx) < 2:
                logger.debug("Skipping single-row final batch of epoch %d", epoch)
                continue
            batch = features[idx]
            loss_c, c_real, c_fake = classifier_step(model, opt_c, batch)
            loss_r, loss_adv = reconstructor_step(model, opt_r, batch)
            report = TrainStepReport(
                epoch=epoch,
                batch=batch_index,
                rows=len(idx),
                loss_reconstruction=loss_r,
                loss_adversarial=loss_adv,
                loss_classifier=loss_c,
                mean_c_real=c_real,
                mean_c_reconstructed=c_fake,
            )
            logger.debug("epoch %d batch %d: %s", epoch, batch_index, report.model_dump())
            epoch_reports.append(report)
        summary = summarize_epoch(epoch, epoch_reports)
        model.history.append(summary)
        reports.extend(epoch_reports)
        if not summary.steps:
            continue
        logger.info(
            "Epoch %d: L_R=%.6f L_R_GAN=%.6f L_C_GAN=%.6f C(X)=%.4f C(R(X))=%.4f gap=%.4f",
            epoch,
            summary.loss_reconstruction,
            summary.loss_adversarial,
            summary.loss_classifier,
            summary.mean_c_real,
            summary.mean_c_reconstructed,
            summary.equilibrium_gap,
        )

    model.data_fingerprint = fingerprint if fingerprint is not None else dataset.fingerprint()
    return model, reports
