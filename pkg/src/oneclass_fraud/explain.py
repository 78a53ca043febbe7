"""
Local surrogate explanations.

A single transaction is explained by perturbing it, labeling the perturbations
with a black box, weighting them by proximity and fitting a weighted ridge
regression on z-standardized features. Three black boxes are offered:

- ``ae``: reconstruction error of the detector's AutoEncoder
- ``c``: classifier output, explained over the reconstructed feature vector
- ``general``: the end-to-end detection score

Usage:
    >>> stats = feature_stats(test_table)
    >>> result = explain("general", model, test_table.features[0], stats, ExplainConfig(seed=0))
    >>> print(format_explanation(top_k(result, 6)))
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from oneclass_fraud.config import STD_FLOOR
from oneclass_fraud.detector import (
    DetectorModel,
    classify_batch,
    reconstruct_batch,
    reconstruction_errors,
    require_trained,
    score_batch,
)
from oneclass_fraud.errors import (
    ConfigError,
    FingerprintMismatchError,
    InsufficientDataError,
    ShapeError,
    SingularSystemError,
)
from oneclass_fraud.models import (
    EXPLAINER_KINDS,
    ExplainConfig,
    Explanation,
    ExplanationEntry,
    ExplainerKind,
    FeatureStats,
    LinearSurrogate,
    SamplerKind,
)
from oneclass_fraud.nn_core import Matrix, as_matrix
from oneclass_fraud.seeding import SeedStreams

logger = logging.getLogger(__name__)

BlackBox = Callable[[Matrix], np.ndarray]

MIN_SURROGATE_SAMPLES = 30


@dataclass
class PerturbationSet:
    """Perturbed copies of one instance; row 0 is the instance itself."""

    instance: np.ndarray
    samples: Matrix
    seed: int
    sampler: SamplerKind
    labels: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.samples.shape[0]


def sample_perturbations(
    instance,
    ref_stats: FeatureStats,
    n: int,
    seed: int,
    sampler: SamplerKind = "gaussian",
    reference: Optional[Matrix] = None,
) -> PerturbationSet:
    """
    Draw ``n`` samples around ``instance`` from the reference distribution.

    The gaussian sampler draws each feature independently from
    Normal(mean_j, std_j); a feature whose std is at or below the floor is set
    to its mean. The bootstrap sampler draws whole rows of ``reference`` with
    replacement. Row 0 is always the instance.

    Raises:
        ConfigError: If ``n < 2`` or the sampler is unknown
        InsufficientDataError: If bootstrap sampling has no reference rows
    """
    if n < 2:
        raise ConfigError(f"need at least 2 perturbation samples, got {n}")
    mean = np.asarray(ref_stats.mean, dtype=np.float64)
    x = as_matrix(instance, mean.size, "instance")[0]
    rng = SeedStreams(seed).generator("perturb")

    if sampler == "gaussian":
        std = np.asarray(ref_stats.std, dtype=np.float64)
        std = np.where(std <= STD_FLOOR, 0.0, std)
        drawn = mean + rng.standard_normal((n - 1, mean.size)) * std
    elif sampler == "bootstrap":
        if reference is None or len(reference) == 0:
            raise InsufficientDataError("bootstrap sampling needs a non-empty reference matrix")
        ref = as_matrix(reference, mean.size, "reference")
        drawn = ref[rng.integers(0, ref.shape[0], size=n - 1)]
    else:
        raise ConfigError(f"unknown sampler {sampler!r}")

    samples = np.vstack([x[None, :], drawn])
    return PerturbationSet(instance=x, samples=samples, seed=seed, sampler=sampler)


def kernel_weight(d, width: float):
    """Exponential kernel exp(-d^2 / width^2); scalar in, scalar out."""
    if width <= 0:
        raise ConfigError(f"kernel width must be positive, got {width}")
    dist = np.asarray(d, dtype=np.float64)
    if np.any(dist < 0):
        raise ConfigError("kernel distances must be non-negative")
    w = np.exp(-(dist**2) / width**2)
    return float(w) if w.ndim == 0 else w


def standardized(samples: Matrix, ref_stats: FeatureStats) -> Matrix:
    """
    z-score ``samples`` with the reference statistics.

    Features whose std is at or below the floor carry no spread and map to 0.
    """
    mean = np.asarray(ref_stats.mean, dtype=np.float64)
    std = np.asarray(ref_stats.std, dtype=np.float64)
    live = std > STD_FLOOR
    z = np.zeros_like(samples, dtype=np.float64)
    z[:, live] = (samples[:, live] - mean[live]) / std[live]
    return z


def fit_weighted_ridge(design: Matrix, labels, weights, ridge: float) -> LinearSurrogate:
    """
    Weighted ridge regression with an unpenalized intercept.

    Minimizes ``sum_i w_i (y_i - b0 - b.z_i)^2 + ridge * |b|^2`` through the
    normal equations of the design augmented with a column of ones.

    Args:
        design: Standardized features, shape (m, d)
        labels: Black-box outputs, shape (m,)
        weights: Non-negative sample weights, shape (m,)
        ridge: Penalty on the slope coefficients

    Returns:
        LinearSurrogate with its weighted R^2 on the fitting data

    Raises:
        InsufficientDataError: With fewer than 30 samples
        SingularSystemError: If the unpenalized system cannot be solved
    """
    z = np.asarray(design, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if z.ndim != 2 or z.shape[0] != y.size or y.size != w.size:
        raise ShapeError(f"design {z.shape}, labels {y.shape} and weights {w.shape} disagree")
    if z.shape[0] < MIN_SURROGATE_SAMPLES:
        raise InsufficientDataError(
            f"surrogate fit needs at least {MIN_SURROGATE_SAMPLES} samples, got {z.shape[0]}"
        )
    if ridge < 0:
        raise ConfigError(f"ridge must be non-negative, got {ridge}")
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(y)) and np.all(np.isfinite(w))):
        raise ShapeError("surrogate inputs must be finite")
    if np.any(w < 0):
        raise ConfigError("sample weights must be non-negative")

    a = np.hstack([np.ones((z.shape[0], 1)), z])
    aw = a * w[:, None]
    lhs = aw.T @ a
    penalty = np.full(lhs.shape[0], ridge)
    penalty[0] = 0.0
    lhs = lhs + np.diag(penalty)
    rhs = aw.T @ y

    if ridge == 0 and np.linalg.cond(lhs) > 1.0 / np.finfo(np.float64).eps:
        raise SingularSystemError("normal equations are singular at ridge=0; pass a ridge strength > 0")
    try:
        beta = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"normal equations are singular ({exc}); pass a ridge strength > 0") from exc

    fitted = a @ beta
    y_bar = np.sum(w * y) / np.sum(w) if np.sum(w) > 0 else float(np.mean(y))
    ss_res = float(np.sum(w * (y - fitted) ** 2))
    ss_tot = float(np.sum(w * (y - y_bar) ** 2))
    fidelity = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return LinearSurrogate(
        intercept=float(beta[0]),
        coefficients=beta[1:].tolist(),
        ridge=ridge,
        fidelity=min(fidelity, 1.0),
    )


def ae_label(model: DetectorModel, x) -> float:
    """Mean squared reconstruction error of one transaction."""
    return float(reconstruction_errors(model.reconstructor, as_matrix(x, model.n_features, "x"))[0])


def explain_function(
    fn: BlackBox,
    instance,
    ref_stats: FeatureStats,
    cfg: ExplainConfig,
    kind: ExplainerKind = "general",
    reference: Optional[Matrix] = None,
) -> Explanation:
    """
    Explain any batch function around ``instance``.

    Args:
        fn: Maps an (m, d) matrix to m outputs
        instance: Point to explain, in the domain of ``fn``
        ref_stats: Distribution the perturbations are drawn from and standardized by
        cfg: Sampling, kernel and surrogate settings
        kind: Label recorded on the explanation
        reference: Reference rows for the bootstrap sampler

    Returns:
        Explanation with every feature, ranked by |contribution|
    """
    pset = sample_perturbations(instance, ref_stats, cfg.n_samples, cfg.seed, cfg.sampler, reference)
    labels = np.asarray(fn(pset.samples), dtype=np.float64).reshape(-1)
    if labels.size != len(pset):
        raise ShapeError(f"black box returned {labels.size} outputs for {len(pset)} samples")
    if not np.all(np.isfinite(labels)):
        raise ShapeError("black box returned non-finite outputs")

    z = standardized(pset.samples, ref_stats)
    distances = np.sqrt(np.sum((z - z[0]) ** 2, axis=1))
    weights = kernel_weight(distances, cfg.kernel.width)
    pset.labels, pset.weights = labels, weights

    surrogate = fit_weighted_ridge(z, labels, weights, cfg.ridge)
    contributions = np.asarray(surrogate.coefficients) * z[0]
    order = sorted(range(contributions.size), key=lambda j: (-abs(contributions[j]), j))
    entries = [
        ExplanationEntry(
            feature=ref_stats.feature_names[j],
            index=j,
            contribution=float(contributions[j]),
            value=float(pset.instance[j]),
        )
        for j in order
    ]
    predicted = surrogate.intercept + math.fsum(contributions.tolist())
    logger.info(
        "%s explanation: model %.6g, surrogate %.6g, fidelity %.4f, top feature %s",
        kind,
        labels[0],
        predicted,
        surrogate.fidelity,
        entries[0].feature,
    )
    return Explanation(
        kind=kind,
        predicted_value=predicted,
        intercept=surrogate.intercept,
        model_value=float(labels[0]),
        fidelity=surrogate.fidelity,
        entries=entries,
        seed=cfg.seed,
        n_samples=cfg.n_samples,
        kernel_width=cfg.kernel.width,
        ridge=cfg.ridge,
        sampler=cfg.sampler,
    )


def black_box(kind: ExplainerKind, model: DetectorModel, cfg: ExplainConfig) -> BlackBox:
    if kind == "ae":
        return lambda batch: reconstruction_errors(model.reconstructor, batch)
    if kind == "c":
        return lambda batch: classify_batch(model, batch)
    if kind == "general":
        return lambda batch: score_batch(model, batch, cfg.score_mode)
    raise ConfigError(f"unknown explainer kind {kind!r}; expected one of {EXPLAINER_KINDS}")


def reference_matrix(kind: ExplainerKind, model: DetectorModel, features: Matrix) -> Matrix:
    """Reference rows in the explainer's input domain: R(features) for ``c``, else raw."""
    if kind == "c":
        return reconstruct_batch(model, features)
    return as_matrix(features, model.n_features, "features")


def explain(
    kind: ExplainerKind,
    model: DetectorModel,
    instance,
    ref_stats: FeatureStats,
    cfg: ExplainConfig,
    reference: Optional[Matrix] = None,
) -> Explanation:
    """
    Explain one transaction with the chosen detector explainer.

    For ``c`` the instance is the reconstructed feature vector R(x) and
    ``ref_stats`` describe reconstructed reference rows (see :func:`reference_matrix`).

    Raises:
        UntrainedModelError: If the model was never trained
        FingerprintMismatchError: If ``ref_stats`` use other features than the model
    """
    require_trained(model)
    if tuple(ref_stats.feature_names) != tuple(model.feature_names):
        raise FingerprintMismatchError(
            "reference statistics describe different features than the model",
            {"model": list(model.feature_names), "stats": ref_stats.feature_names},
        )
    return explain_function(black_box(kind, model, cfg), instance, ref_stats, cfg, kind, reference)


def top_k(explanation: Explanation, k: int) -> Explanation:
    """First ``k`` entries by |contribution|, ties by feature index."""
    if not 1 <= k <= len(explanation.entries):
        raise ConfigError(f"k must lie in [1, {len(explanation.entries)}], got {k}")
    ranked = sorted(explanation.entries, key=lambda e: (-abs(e.contribution), e.index))
    return explanation.model_copy(update={"entries": ranked[:k]})
