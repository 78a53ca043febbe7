"""Shared pytest fixtures and configuration."""

import csv
from pathlib import Path

import numpy as np
import pytest

from oneclass_fraud.config import EXPECTED_HEADER, N_FEATURES
from oneclass_fraud.data import TransactionTable
from oneclass_fraud.detector import train
from oneclass_fraud.models import TrainConfig


def make_table(n_genuine: int, n_fraud: int, seed: int = 0) -> TransactionTable:
    """
    Benchmark-shaped synthetic transactions.

    Genuine rows are standard normal with a little correlation between
    neighboring features; fraud rows are shifted on V1..V4 and widened.
    Fraud and genuine rows are interleaved as in a real export.
    """
    rng = np.random.default_rng(seed)
    genuine = rng.standard_normal((n_genuine, N_FEATURES))
    genuine[:, 1:] += 0.3 * genuine[:, :-1]
    fraud = 2.0 * rng.standard_normal((n_fraud, N_FEATURES))
    fraud[:, :4] += 4.0
    features = np.vstack([genuine, fraud])
    labels = np.array([0] * n_genuine + [1] * n_fraud)
    order = rng.permutation(len(labels))
    return TransactionTable.from_arrays(
        features[order],
        labels[order],
        time=np.arange(len(labels), dtype=np.float64),
        amount=np.round(rng.uniform(1.0, 500.0, len(labels)), 2),
    )


def write_csv(path: Path, table: TransactionTable) -> Path:
    """Write ``table`` in the benchmark file layout (quoted header, 31 columns)."""
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        handle.write(",".join(f'"{h}"' for h in EXPECTED_HEADER) + "\n")
        for i in range(len(table)):
            writer.writerow(
                [repr(float(table.time[i]))]
                + [repr(float(v)) for v in table.features[i]]
                + [repr(float(table.amount[i])), str(int(table.labels[i]))]
            )
    return path


@pytest.fixture
def synthetic_table():
    """300 genuine and 40 fraud transactions."""
    return make_table(300, 40, seed=7)


@pytest.fixture
def genuine_table(synthetic_table):
    return synthetic_table.take(np.flatnonzero(synthetic_table.labels == 0))


@pytest.fixture
def small_config():
    """A quick schedule on narrow networks."""
    return TrainConfig(
        epochs=3,
        batch_size=64,
        learning_rate=1e-3,
        seed=3,
        reconstructor_hidden=[8, 4],
        classifier_hidden=[8, 4],
    )


@pytest.fixture
def trained(genuine_table, small_config):
    """(model, step reports) trained on the synthetic genuine rows."""
    return train(genuine_table, small_config)


@pytest.fixture
def trained_model(trained):
    return trained[0]


@pytest.fixture
def benchmark_csv(tmp_path):
    """CSV with 320 genuine and 30 fraud rows in the benchmark layout."""
    return write_csv(tmp_path / "creditcard.csv", make_table(320, 30, seed=11))
