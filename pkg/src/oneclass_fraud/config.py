"""
Constants, environment lookup and logging setup for oneclass-fraud.

Feature layout and the expected CSV header of the transaction benchmark live here
so that ingestion, models and reports agree on one definition.
"""

import logging
import os
from pathlib import Path
from typing import Optional

# Environment variable naming the default benchmark CSV
DATA_PATH_ENV = "ONECLASS_FRAUD_DATA"

FEATURE_NAMES: tuple[str, ...] = tuple(f"V{i}" for i in range(1, 29))
N_FEATURES = len(FEATURE_NAMES)
EXPECTED_HEADER: tuple[str, ...] = ("Time", *FEATURE_NAMES, "Amount", "Class")

GENUINE = 0
FRAUD = 1

# Split protocol
TEST_FRAUD_COUNT = 490
TEST_GENUINE_COUNT = 490
# Genuine row count printed in the published dataset description; the public
# file has 284,315 genuine rows, so a mismatch is logged rather than raised.
PUBLISHED_GENUINE_COUNT = 234_315
BENCHMARK_ROWS = 284_807

# Detector defaults
DEFAULT_EPOCHS = 2
DEFAULT_BATCH_SIZE = 4096
DEFAULT_LEARNING_RATE = 2e-4
DEFAULT_THRESHOLD = 0.7
RECONSTRUCTOR_HIDDEN: tuple[int, ...] = (16, 8)
CLASSIFIER_HIDDEN: tuple[int, ...] = (32, 16)

# Explainer defaults
DEFAULT_N_SAMPLES = 5000
DEFAULT_TOP_K = 6
DEFAULT_RIDGE = 1.0
STD_FLOOR = 1e-12

# Baseline defaults
DEFAULT_OCNN_K = 5
DEFAULT_BASELINE_TRAIN_SIZE = 700
DEFAULT_BASELINE_EVAL_SIZE = 25

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def default_kernel_width(n_features: int = N_FEATURES) -> float:
    """Exponential-kernel width 0.75 * sqrt(n_features)."""
    return 0.75 * n_features**0.5


def default_data_path() -> Optional[Path]:
    """Return the benchmark CSV path from the environment, if set."""
    value = os.getenv(DATA_PATH_ENV)
    return Path(value) if value else None


def configure_logging(verbosity: int = 0) -> None:
    """
    Configure root logging once for command-line use.

    Args:
        verbosity: -1 for warnings only, 0 for info, 1 or more for debug
    """
    if verbosity < 0:
        level = logging.WARNING
    elif verbosity == 0:
        level = logging.INFO
    else:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT)
