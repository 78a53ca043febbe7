"""
Ingestion of the credit card transaction benchmark.

This module provides:
- A column-wise transaction table (28 PCA features, time, amount, label)
- CSV loading with row-addressed parse errors
- The balanced train/test split protocol and its manifest
- Reference feature statistics and seeded class-wise subsets
"""

import csv
import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
import pandas as pd

from oneclass_fraud.config import (
    BENCHMARK_ROWS,
    EXPECTED_HEADER,
    FEATURE_NAMES,
    FRAUD,
    GENUINE,
    N_FEATURES,
    PUBLISHED_GENUINE_COUNT,
    STD_FLOOR,
    TEST_FRAUD_COUNT,
    TEST_GENUINE_COUNT,
)
from oneclass_fraud.errors import (
    CsvParseError,
    FingerprintMismatchError,
    InsufficientDataError,
    LabelError,
    SchemaError,
    ShapeError,
)
from oneclass_fraud.models import DatasetSchema, DataSplit, FeatureStats, TransactionRecord
from oneclass_fraud.seeding import SeedStreams

logger = logging.getLogger(__name__)

Matrix = npt.NDArray[np.float64]
IndexArray = npt.NDArray[np.int64]


@dataclass(frozen=True)
class TransactionTable:
    """
    Labeled transactions held column-wise.

    ``row_ids`` are the 0-based data-row positions in the source file (sorted,
    unique); split manifests refer to rows by these ids.
    """

    features: Matrix
    labels: IndexArray
    time: Matrix
    amount: Matrix
    row_ids: IndexArray
    feature_names: Tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self) -> None:
        m = self.features.shape[0]
        if self.features.ndim != 2 or self.features.shape[1] != len(self.feature_names):
            raise ShapeError(
                f"features must have shape (rows, {len(self.feature_names)}), got {self.features.shape}"
            )
        for name in ("labels", "time", "amount", "row_ids"):
            if getattr(self, name).shape != (m,):
                raise ShapeError(f"{name} must have shape ({m},)")
        if not np.all(np.isfinite(self.features)):
            raise ShapeError("features must be finite")
        if not np.all(np.isin(self.labels, (GENUINE, FRAUD))):
            raise LabelError("labels must be 0 (genuine) or 1 (fraud)")

    @classmethod
    def from_arrays(
        cls,
        features: Union[Matrix, Iterable[Iterable[float]]],
        labels: Iterable[int],
        time: Optional[Iterable[float]] = None,
        amount: Optional[Iterable[float]] = None,
        row_ids: Optional[Iterable[int]] = None,
    ) -> "TransactionTable":
        feats = np.asarray(features, dtype=np.float64)
        if feats.ndim == 1:
            feats = feats.reshape(1, -1)
        m = feats.shape[0]
        return cls(
            features=feats,
            labels=np.asarray(list(labels), dtype=np.int64).reshape(m),
            time=np.zeros(m) if time is None else np.asarray(list(time), dtype=np.float64),
            amount=np.zeros(m) if amount is None else np.asarray(list(amount), dtype=np.float64),
            row_ids=np.arange(m, dtype=np.int64) if row_ids is None else np.asarray(list(row_ids), dtype=np.int64),
        )

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def fraud_count(self) -> int:
        return int(np.count_nonzero(self.labels == FRAUD))

    @property
    def genuine_count(self) -> int:
        return int(np.count_nonzero(self.labels == GENUINE))

    def take(self, positions: Union[IndexArray, Iterable[int]]) -> "TransactionTable":
        """Rows at the given positions (not row ids), in the given order."""
        pos = np.asarray(positions, dtype=np.int64).reshape(-1)
        return TransactionTable(
            features=self.features[pos],
            labels=self.labels[pos],
            time=self.time[pos],
            amount=self.amount[pos],
            row_ids=self.row_ids[pos],
            feature_names=self.feature_names,
        )

    def select(self, row_ids: Union[IndexArray, Iterable[int]]) -> "TransactionTable":
        """Rows with the given row ids, in the given order."""
        ids = np.asarray(row_ids, dtype=np.int64).reshape(-1)
        pos = np.searchsorted(self.row_ids, ids)
        found = pos < len(self)
        if not found.all() or not np.array_equal(self.row_ids[pos], ids):
            raise InsufficientDataError("manifest refers to rows absent from the table")
        return self.take(pos)

    def record(self, position: int) -> TransactionRecord:
        return TransactionRecord(
            features=self.features[position].tolist(),
            time=float(self.time[position]),
            amount=float(self.amount[position]),
            label=int(self.labels[position]),
        )

    def schema(self) -> DatasetSchema:
        return DatasetSchema(
            feature_names=list(self.feature_names),
            n_features=len(self.feature_names),
            row_count=len(self),
            class_counts={GENUINE: self.genuine_count, FRAUD: self.fraud_count},
        )

    def fingerprint(self) -> str:
        """SHA-256 over feature names, feature bytes and labels."""
        digest = hashlib.sha256()
        digest.update("|".join(self.feature_names).encode("utf-8"))
        digest.update(np.ascontiguousarray(self.features).tobytes())
        digest.update(np.ascontiguousarray(self.labels).tobytes())
        return digest.hexdigest()


def _check_header(header: Optional[list], path: Path) -> None:
    if header is None:
        raise SchemaError(f"{path}: file is empty")
    found = tuple(h.strip() for h in header)
    if found == EXPECTED_HEADER:
        return
    if sorted(found) == sorted(EXPECTED_HEADER):
        raise SchemaError(f"{path}: header columns are permuted", {"header": list(found)})
    missing = [c for c in EXPECTED_HEADER if c not in found]
    unexpected = [c for c in found if c not in EXPECTED_HEADER]
    raise SchemaError(
        f"{path}: unexpected header (missing {missing}, unexpected {unexpected})",
        {"missing": missing, "unexpected": unexpected},
    )


def _locate_bad_row(path: Path) -> Optional[CsvParseError]:
    """Scan the file row by row for the first malformed data row."""
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        next(reader, None)
        for row_num, row in enumerate(reader, start=2):  # Start at 2 (1 is header)
            if not row:
                continue
            if len(row) != len(EXPECTED_HEADER):
                return CsvParseError(
                    row_num, f"expected {len(EXPECTED_HEADER)} columns, found {len(row)}"
                )
            for column, cell in zip(EXPECTED_HEADER, row):
                try:
                    float(cell)
                except ValueError:
                    return CsvParseError(row_num, f"non-numeric value {cell!r}", column)
    return None


def load_csv(path: Union[str, Path]) -> Tuple[TransactionTable, DatasetSchema]:
    """
    Load the benchmark CSV.

    The header must be exactly ``"Time","V1",...,"V28","Amount","Class"``. Every
    cell is parsed to a 64-bit float with round-trip precision. Time and Amount are
    kept for reports but are not model inputs.

    Args:
        path: CSV file path

    Returns:
        Tuple of (table, schema)

    Raises:
        FileNotFoundError: If the file does not exist
        SchemaError: If the file is empty or the header is wrong
        CsvParseError: For a short/long row, a non-numeric cell or a bad label;
            ``row`` is the line number in the file (header = 1)
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as handle:
        _check_header(next(csv.reader(handle), None), path)

    try:
        frame = pd.read_csv(path, dtype=np.float64, float_precision="round_trip")
    except (ValueError, pd.errors.ParserError) as exc:
        located = _locate_bad_row(path)
        if located is not None:
            raise located from exc
        raise SchemaError(f"{path}: {exc}") from exc

    values = frame.to_numpy(dtype=np.float64)
    finite = np.isfinite(values)
    if not finite.all():
        located = _locate_bad_row(path)
        if located is not None:
            raise located
        r, c = np.argwhere(~finite)[0]
        raise CsvParseError(int(r) + 2, "missing or non-finite value", EXPECTED_HEADER[c])
    raw_labels = values[:, -1]
    bad_label = ~np.isin(raw_labels, (GENUINE, FRAUD))
    if bad_label.any():
        r = int(np.argmax(bad_label))
        raise CsvParseError(r + 2, f"label must be 0 or 1, got {raw_labels[r]!r}", "Class")

    m = values.shape[0]
    table = TransactionTable(
        features=np.ascontiguousarray(values[:, 1 : 1 + N_FEATURES]),
        labels=raw_labels.astype(np.int64),
        time=values[:, 0].copy(),
        amount=values[:, 1 + N_FEATURES].copy(),
        row_ids=np.arange(m, dtype=np.int64),
    )
    schema = table.schema()
    logger.info(
        "Loaded %d transactions from %s (%d genuine, %d fraud)",
        m,
        path,
        table.genuine_count,
        table.fraud_count,
    )
    if m == BENCHMARK_ROWS and table.genuine_count != PUBLISHED_GENUINE_COUNT:
        logger.warning(
            "Genuine count in file (%d) differs from the published dataset description (%d); "
            "using the file's counts",
            table.genuine_count,
            PUBLISHED_GENUINE_COUNT,
        )
    return table, schema


def split_benchmark(
    table: TransactionTable,
    seed: int,
    fraud_count: int = TEST_FRAUD_COUNT,
    genuine_count: int = TEST_GENUINE_COUNT,
) -> DataSplit:
    """
    Draw the balanced test set and the genuine-only training set.

    ``fraud_count`` fraud and ``genuine_count`` genuine rows are chosen uniformly
    without replacement for the test set; every other genuine row forms the
    training set; unchosen fraud rows are discarded.

    Raises:
        InsufficientDataError: If fewer than ``fraud_count`` fraud or fewer than
            ``2 * genuine_count`` genuine rows are available
    """
    fraud_ids = table.row_ids[table.labels == FRAUD]
    genuine_ids = table.row_ids[table.labels == GENUINE]
    if len(fraud_ids) < fraud_count or len(genuine_ids) < 2 * genuine_count:
        raise InsufficientDataError(
            f"split needs >= {fraud_count} fraud and >= {2 * genuine_count} genuine rows, "
            f"found {len(fraud_ids)} and {len(genuine_ids)}"
        )
    rng = SeedStreams(seed).generator("split")
    test_fraud = np.sort(rng.choice(fraud_ids, size=fraud_count, replace=False))
    test_genuine = np.sort(rng.choice(genuine_ids, size=genuine_count, replace=False))
    train = np.setdiff1d(genuine_ids, test_genuine)
    discarded = np.setdiff1d(fraud_ids, test_fraud)

    split = DataSplit(
        seed=seed,
        source_rows=len(table),
        train_indices=train.tolist(),
        test_indices=np.union1d(test_fraud, test_genuine).tolist(),
        discarded_indices=discarded.tolist(),
        test_fraud_count=fraud_count,
        test_genuine_count=genuine_count,
    )
    logger.info(
        "Split seed=%d: train=%d genuine, test=%d (%d fraud + %d genuine), discarded=%d fraud",
        seed,
        len(train),
        len(split.test_indices),
        fraud_count,
        genuine_count,
        len(discarded),
    )
    return split


def apply_split(table: TransactionTable, split: DataSplit) -> Tuple[TransactionTable, TransactionTable]:
    """Materialize (training, test) tables from a manifest."""
    if split.source_rows != len(table):
        raise FingerprintMismatchError(
            f"manifest was drawn from {split.source_rows} rows, table has {len(table)}"
        )
    return table.select(split.train_indices), table.select(split.test_indices)


def feature_stats(
    records: Union[TransactionTable, Matrix], feature_names: Tuple[str, ...] = FEATURE_NAMES
) -> FeatureStats:
    """Population mean and standard deviation per feature."""
    if isinstance(records, TransactionTable):
        features, feature_names = records.features, records.feature_names
    else:
        features = np.asarray(records, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise InsufficientDataError("feature statistics need at least one record")
    mean = features.mean(axis=0)
    std = np.sqrt(((features - mean) ** 2).mean(axis=0))
    return FeatureStats(feature_names=list(feature_names), mean=mean.tolist(), std=std.tolist())


def floored_std(stats: FeatureStats) -> Matrix:
    return np.maximum(np.asarray(stats.std, dtype=np.float64), STD_FLOOR)


def standardize(table: TransactionTable, stats: FeatureStats) -> TransactionTable:
    """Copy of ``table`` with z-scored features."""
    z = (table.features - np.asarray(stats.mean)) / floored_std(stats)
    return TransactionTable(
        features=z,
        labels=table.labels,
        time=table.time,
        amount=table.amount,
        row_ids=table.row_ids,
        feature_names=table.feature_names,
    )


def sample_subset(
    table: TransactionTable,
    label: int,
    count: int,
    seed: int,
    exclude: Optional[Iterable[int]] = None,
    stream: str = "subset",
) -> TransactionTable:
    """
    Uniform sample without replacement of ``count`` rows of one class.

    Args:
        table: Source rows
        label: Class to draw from
        count: Number of rows (0 gives an empty table)
        seed: Root seed
        exclude: Row ids that must not be drawn
        stream: Name of the random sub-stream, so independent draws stay independent

    Raises:
        InsufficientDataError: If fewer than ``count`` eligible rows exist
    """
    if label not in (GENUINE, FRAUD):
        raise LabelError(f"unknown class {label}")
    if count < 0:
        raise InsufficientDataError(f"count must be non-negative, got {count}")
    eligible = table.row_ids[table.labels == label]
    if exclude is not None:
        eligible = np.setdiff1d(eligible, np.fromiter(exclude, dtype=np.int64), assume_unique=False)
    if count > len(eligible):
        raise InsufficientDataError(f"requested {count} rows of class {label}, only {len(eligible)} available")
    rng = SeedStreams(seed).generator(stream)
    chosen = np.sort(rng.choice(eligible, size=count, replace=False))
    return table.select(chosen)
