"""
One-class credit card fraud detection

An AutoEncoder and a classifier trained adversarially on genuine transactions,
local surrogate explanations of its decisions, and the data, metric and
baseline tooling to evaluate it.

This package provides:
- A numpy dense-network substrate with exact backpropagation
- The adversarial detector and its decision rule
- AE, classifier and end-to-end explainers
- CSV ingestion, the balanced split protocol and reference statistics
- Confusion metrics, ROC/AUC and OCNN / AutoEncoder baselines
- The ``oneclass-fraud`` command-line tool
"""

__version__ = "1.0.0"
__author__ = "oneclass-fraud contributors"

from oneclass_fraud.data import TransactionTable, load_csv, split_benchmark
from oneclass_fraud.detector import DetectorModel, detect, score, train
from oneclass_fraud.explain import explain, top_k
from oneclass_fraud.metrics import metric_report, roc_auc
from oneclass_fraud.models import ExplainConfig, Explanation, TrainConfig
from oneclass_fraud.storage import load_model, save_model

__all__ = [
    "DetectorModel",
    "ExplainConfig",
    "Explanation",
    "TrainConfig",
    "TransactionTable",
    "detect",
    "explain",
    "load_csv",
    "load_model",
    "metric_report",
    "roc_auc",
    "save_model",
    "score",
    "split_benchmark",
    "top_k",
    "train",
    "__version__",
]
