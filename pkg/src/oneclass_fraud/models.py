"""
Pydantic models for configuration, data manifests, reports and explanations.

This module provides validated value types shared by the library and the CLI.
Every configuration model forbids unknown fields, so a typo in a flag override or
a stale key in a config file fails loudly instead of silently using a default.
Array-carrying runtime objects (networks, detector models) live next to their
algorithms; everything here serializes to plain JSON.
"""

import hashlib
import math
from typing import Dict, List, Literal, Optional

import orjson
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from oneclass_fraud.config import (
    CLASSIFIER_HIDDEN,
    DEFAULT_BASELINE_EVAL_SIZE,
    DEFAULT_BASELINE_TRAIN_SIZE,
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_N_SAMPLES,
    DEFAULT_OCNN_K,
    DEFAULT_RIDGE,
    DEFAULT_THRESHOLD,
    DEFAULT_TOP_K,
    FEATURE_NAMES,
    N_FEATURES,
    RECONSTRUCTOR_HIDDEN,
    default_kernel_width,
)


# Enumerations
LossKind = Literal["l1", "smoothl1", "l2"]
ScoreMode = Literal["classify_reconstructed", "classify_raw", "distance_from_half"]
LayerKind = Literal["linear", "batchnorm", "relu", "sigmoid"]
ExplainerKind = Literal["ae", "c", "general"]
SamplerKind = Literal["gaussian", "bootstrap"]
BaselineMethod = Literal["ocnn", "ae"]
Subcommand = Literal["split", "train", "eval", "explain", "baseline", "ablation"]

LOSS_KINDS: tuple[str, ...] = ("l1", "smoothl1", "l2")
SCORE_MODES: tuple[str, ...] = ("classify_reconstructed", "classify_raw", "distance_from_half")
EXPLAINER_KINDS: tuple[str, ...] = ("ae", "c", "general")


class LayerSpec(BaseModel):
    """
    One layer of a dense network.

    ``in_features``/``out_features`` are required for linear layers; batchnorm uses
    ``in_features == out_features`` as its width; relu and sigmoid are
    shape-preserving and carry no dimensions.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: LayerKind = Field(..., description="Layer kind")
    in_features: Optional[int] = Field(None, ge=1, description="Input width")
    out_features: Optional[int] = Field(None, ge=1, description="Output width")

    @model_validator(mode="after")
    def check_dimensions(self) -> "LayerSpec":
        if self.kind == "linear":
            if self.in_features is None or self.out_features is None:
                raise ValueError("linear layer needs in_features and out_features")
        elif self.kind == "batchnorm":
            if self.in_features is None or self.out_features != self.in_features:
                raise ValueError("batchnorm layer needs in_features == out_features")
        elif self.in_features is not None or self.out_features is not None:
            raise ValueError(f"{self.kind} layer takes no dimensions")
        return self

    @classmethod
    def linear(cls, in_features: int, out_features: int) -> "LayerSpec":
        return cls(kind="linear", in_features=in_features, out_features=out_features)

    @classmethod
    def batchnorm(cls, dim: int) -> "LayerSpec":
        return cls(kind="batchnorm", in_features=dim, out_features=dim)

    @classmethod
    def relu(cls) -> "LayerSpec":
        return cls(kind="relu")

    @classmethod
    def sigmoid(cls) -> "LayerSpec":
        return cls(kind="sigmoid")


class TrainConfig(BaseModel):
    """Optimization hyperparameters of the adversarial detector."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(DEFAULT_EPOCHS, ge=1, description="Passes over the training set")
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=2, description="Rows per optimization step")
    learning_rate: float = Field(DEFAULT_LEARNING_RATE, gt=0, description="Adam step size")
    loss_kind: LossKind = Field("l2", description="Reconstruction loss")
    threshold: float = Field(DEFAULT_THRESHOLD, gt=0, lt=1, description="Fraud decision threshold")
    score_mode: ScoreMode = Field("classify_reconstructed", description="Inference score")
    seed: int = Field(0, ge=0, description="Root seed for init and shuffling")
    zscore: bool = Field(False, description="Train on features z-scored with training-set statistics")
    reconstructor_hidden: List[int] = Field(
        default_factory=lambda: list(RECONSTRUCTOR_HIDDEN),
        min_length=1,
        description="Encoder widths; the decoder mirrors them",
    )
    classifier_hidden: List[int] = Field(
        default_factory=lambda: list(CLASSIFIER_HIDDEN),
        min_length=1,
        description="Classifier hidden widths",
    )

    @field_validator("reconstructor_hidden", "classifier_hidden")
    @classmethod
    def validate_widths(cls, v: List[int]) -> List[int]:
        if any(width < 1 for width in v):
            raise ValueError("hidden widths must be positive")
        return v


class TrainStepReport(BaseModel):
    """Losses and classifier means of one optimization step."""

    epoch: int = Field(..., ge=0)
    batch: int = Field(..., ge=0)
    rows: int = Field(..., ge=2, description="Rows in this batch")
    loss_reconstruction: float = Field(..., ge=0, description="L_R")
    loss_adversarial: float = Field(..., ge=0, description="L_R^GAN = -log C(R(X))")
    loss_classifier: float = Field(..., ge=0, description="L_C^GAN")
    mean_c_real: float = Field(..., gt=0, lt=1, description="mean C(X)")
    mean_c_reconstructed: float = Field(..., gt=0, lt=1, description="mean C(R(X))")


class EpochSummary(BaseModel):
    """Per-epoch means of the step reports plus the distance from equilibrium."""

    epoch: int = Field(..., ge=0)
    steps: int = Field(..., ge=0)
    # None when the epoch ran no step
    loss_reconstruction: Optional[float] = None
    loss_adversarial: Optional[float] = None
    loss_classifier: Optional[float] = None
    mean_c_real: Optional[float] = None
    mean_c_reconstructed: Optional[float] = None
    equilibrium_gap: Optional[float] = Field(
        None, ge=0, description="max(|C(X)-0.5|, |C(R(X))-0.5|); 0 at equilibrium"
    )


class DetectionResult(BaseModel):
    """Decision for one transaction."""

    score: float
    label: Literal[0, 1] = Field(..., description="0 genuine, 1 fraud")
    threshold: float = Field(..., gt=0, lt=1)
    score_mode: ScoreMode

    @model_validator(mode="after")
    def check_label(self) -> "DetectionResult":
        if self.label != int(self.score > self.threshold):
            raise ValueError("label must be fraud iff score > threshold")
        return self


class TransactionRecord(BaseModel):
    """One labeled transaction."""

    features: List[float] = Field(..., min_length=N_FEATURES, max_length=N_FEATURES)
    time: float = Field(..., description="Seconds since first transaction (not modeled)")
    amount: float = Field(..., description="Transaction amount (not modeled)")
    label: Literal[0, 1]

    @field_validator("features")
    @classmethod
    def validate_finite(cls, v: List[float]) -> List[float]:
        if not all(math.isfinite(x) for x in v):
            raise ValueError("features must be finite")
        return v


class DatasetSchema(BaseModel):
    """Shape and class balance of a loaded table."""

    feature_names: List[str] = Field(default_factory=lambda: list(FEATURE_NAMES))
    n_features: int = Field(N_FEATURES)
    row_count: int = Field(..., ge=0)
    class_counts: Dict[int, int] = Field(..., description="label -> count")

    @model_validator(mode="after")
    def check_counts(self) -> "DatasetSchema":
        if self.n_features != len(self.feature_names):
            raise ValueError("n_features must equal the number of feature names")
        if sum(self.class_counts.values()) != self.row_count:
            raise ValueError("class counts must sum to row count")
        return self


class DataSplit(BaseModel):
    """
    Row-index manifest of the train/test protocol.

    Indices are 0-based data-row positions in the source CSV (header excluded).
    The training set holds genuine rows only; the test set is class-balanced; the
    discarded list holds the fraud rows left out of the test set.
    """

    seed: int = Field(..., ge=0)
    source_rows: int = Field(..., ge=0)
    train_indices: List[int]
    test_indices: List[int]
    discarded_indices: List[int]
    test_fraud_count: int = Field(..., ge=0)
    test_genuine_count: int = Field(..., ge=0)

    @model_validator(mode="after")
    def check_partition(self) -> "DataSplit":
        train, test, discarded = (
            set(self.train_indices),
            set(self.test_indices),
            set(self.discarded_indices),
        )
        if train & test or train & discarded or test & discarded:
            raise ValueError("train, test and discarded indices must be disjoint")
        if len(self.test_indices) != self.test_fraud_count + self.test_genuine_count:
            raise ValueError("test size must equal fraud + genuine counts")
        return self

    def fingerprint(self) -> str:
        """SHA-256 over the training manifest, the identity a model is bound to."""
        payload = orjson.dumps({"train": self.train_indices, "rows": self.source_rows})
        return hashlib.sha256(payload).hexdigest()


class FeatureStats(BaseModel):
    """Per-feature population mean and standard deviation of a reference set."""

    feature_names: List[str] = Field(default_factory=lambda: list(FEATURE_NAMES))
    mean: List[float]
    std: List[float]

    @model_validator(mode="after")
    def check_lengths(self) -> "FeatureStats":
        if not len(self.feature_names) == len(self.mean) == len(self.std):
            raise ValueError("feature_names, mean and std must have equal length")
        if any(s < 0 for s in self.std):
            raise ValueError("std entries must be non-negative")
        return self


class ConfusionMatrix(BaseModel):
    """Binary confusion counts with fraud as the positive class."""

    tp: int = Field(..., ge=0)
    fp: int = Field(..., ge=0)
    tn: int = Field(..., ge=0)
    fn: int = Field(..., ge=0)

    @model_validator(mode="after")
    def check_total(self) -> "ConfusionMatrix":
        if self.total == 0:
            raise ValueError("confusion matrix must count at least one case")
        return self

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class MetricReport(BaseModel):
    """Accuracy, precision, recall, F1 and MCC."""

    accuracy: float = Field(..., ge=0, le=1)
    precision: float = Field(..., ge=0, le=1)
    recall: float = Field(..., ge=0, le=1)
    f1: float = Field(..., ge=0, le=1)
    mcc: float = Field(..., ge=-1, le=1)


class RocCurve(BaseModel):
    """ROC points from (0,0) to (1,1) and the trapezoidal area under them."""

    fpr: List[float]
    tpr: List[float]
    thresholds: List[Optional[float]] = Field(
        ..., description="Score at which each point is reached; None for the origin"
    )
    auc: float = Field(..., ge=0, le=1)

    @model_validator(mode="after")
    def check_points(self) -> "RocCurve":
        if not len(self.fpr) == len(self.tpr) == len(self.thresholds):
            raise ValueError("fpr, tpr and thresholds must have equal length")
        return self


class KernelConfig(BaseModel):
    """Exponential kernel over z-standardized Euclidean distance."""

    model_config = ConfigDict(extra="forbid")

    width: float = Field(default_factory=default_kernel_width, gt=0)


class ExplainConfig(BaseModel):
    """Perturbation, kernel and surrogate settings of the explainers."""

    model_config = ConfigDict(extra="forbid")

    n_samples: int = Field(DEFAULT_N_SAMPLES, ge=2)
    ridge: float = Field(DEFAULT_RIDGE, ge=0)
    sampler: SamplerKind = Field("gaussian")
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    score_mode: ScoreMode = Field("classify_reconstructed", description="General explainer target")
    top_k: int = Field(DEFAULT_TOP_K, ge=1, le=N_FEATURES)
    seed: int = Field(0, ge=0)


class LinearSurrogate(BaseModel):
    """Weighted ridge fit over standardized features."""

    intercept: float
    coefficients: List[float]
    ridge: float = Field(..., ge=0)
    fidelity: float = Field(..., le=1, description="Weighted R^2 on the perturbation set")

    @field_validator("coefficients")
    @classmethod
    def validate_finite(cls, v: List[float]) -> List[float]:
        if not all(math.isfinite(c) for c in v):
            raise ValueError("coefficients must be finite")
        return v


class ExplanationEntry(BaseModel):
    """Contribution of one feature to the surrogate prediction."""

    feature: str
    index: int = Field(..., ge=0)
    contribution: float = Field(..., description="coefficient x standardized value")
    value: float = Field(..., description="Raw feature value of the explained instance")


class Explanation(BaseModel):
    """Local explanation of one instance."""

    kind: ExplainerKind
    predicted_value: float = Field(..., description="Surrogate prediction at the instance")
    intercept: float
    model_value: float = Field(..., description="Black-box output at the instance")
    fidelity: float = Field(..., le=1)
    entries: List[ExplanationEntry]
    seed: int
    n_samples: int
    kernel_width: float
    ridge: float
    sampler: SamplerKind

    @field_validator("entries")
    @classmethod
    def validate_order(cls, v: List[ExplanationEntry]) -> List[ExplanationEntry]:
        keys = [(-abs(e.contribution), e.index) for e in v]
        if keys != sorted(keys):
            raise ValueError("entries must be sorted by |contribution| descending")
        return v

    def prediction_without(self, feature: str) -> float:
        """Surrogate prediction with one feature's contribution removed."""
        for entry in self.entries:
            if entry.feature == feature:
                return self.predicted_value - entry.contribution
        raise KeyError(feature)


class BaselineConfig(BaseModel):
    """Settings of the OCNN and plain AutoEncoder comparators."""

    model_config = ConfigDict(extra="forbid")

    method: BaselineMethod = "ocnn"
    k: int = Field(DEFAULT_OCNN_K, ge=1)
    train_size: int = Field(DEFAULT_BASELINE_TRAIN_SIZE, ge=1)
    eval_size: int = Field(DEFAULT_BASELINE_EVAL_SIZE, ge=1, description="Per class")
    epochs: int = Field(100, ge=1)
    batch_size: int = Field(32, ge=2)
    learning_rate: float = Field(1e-3, gt=0)
    loss_kind: LossKind = "l2"
    hidden: List[int] = Field(default_factory=lambda: list(RECONSTRUCTOR_HIDDEN), min_length=1)
    seed: int = Field(0, ge=0)


class RunConfig(BaseModel):
    """Resolved command-line invocation."""

    model_config = ConfigDict(extra="forbid")

    command: Subcommand
    data: Optional[str] = None
    out: str
    seed: Optional[int] = Field(None, ge=0)
    train: Optional[TrainConfig] = None
    explain: Optional[ExplainConfig] = None
    baseline: Optional[BaselineConfig] = None

    @model_validator(mode="after")
    def check_seed(self) -> "RunConfig":
        if self.command != "eval" and self.seed is None:
            raise ValueError(f"{self.command} is stochastic and requires a seed")
        return self
