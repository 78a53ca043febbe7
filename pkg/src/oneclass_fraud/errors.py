"""
Exception hierarchy for oneclass-fraud.

Every error carries a stable machine-readable ``code`` and the process exit code
the CLI should return for it (1 = user error, do not retry; 2 = system error).
"""

from typing import Any, Optional

EXIT_USER_ERROR = 1
EXIT_SYSTEM_ERROR = 2


class OneClassFraudError(ValueError):
    """Base class for all library errors."""

    code = "ONECLASS_FRAUD_ERROR"
    exit_code = EXIT_USER_ERROR

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ConfigError(OneClassFraudError):
    """Invalid configuration value or combination."""

    code = "CONFIG_ERROR"


class ShapeError(OneClassFraudError):
    """Array dimensions do not match what an operation requires."""

    code = "SHAPE_ERROR"


class NetworkMismatchError(OneClassFraudError):
    """An activation cache, gradient record or optimizer state belongs to another network."""

    code = "NETWORK_MISMATCH"


class SchemaError(OneClassFraudError):
    """Input file is empty or its header is not the expected benchmark header."""

    code = "SCHEMA_ERROR"


class CsvParseError(OneClassFraudError):
    """A data row could not be parsed."""

    code = "CSV_PARSE_ERROR"

    def __init__(self, row: int, reason: str, column: Optional[str] = None):
        where = f"row {row}" if column is None else f"row {row}, column {column!r}"
        super().__init__(f"{where}: {reason}", {"row": row, "column": column})
        self.row = row
        self.column = column


class InsufficientDataError(OneClassFraudError):
    """Not enough records (of a class, or in total) for the requested operation."""

    code = "INSUFFICIENT_DATA"


class LabelError(OneClassFraudError):
    """A record carries a label the operation does not accept."""

    code = "LABEL_ERROR"


class ModelFileError(OneClassFraudError):
    """Base class for model file problems."""

    code = "MODEL_FILE_ERROR"


class CorruptModelError(ModelFileError):
    """Model file is truncated, not JSON, or structurally invalid."""

    code = "CORRUPT_MODEL"


class ModelVersionError(ModelFileError):
    """Model file was written with an unsupported format version."""

    code = "MODEL_VERSION"


class FingerprintMismatchError(OneClassFraudError):
    """Model and data (or reference statistics) come from different schemas or splits."""

    code = "FINGERPRINT_MISMATCH"


class UntrainedModelError(FingerprintMismatchError):
    """Model carries no training fingerprint."""

    code = "UNTRAINED_MODEL"


class SingularSystemError(OneClassFraudError):
    """Normal equations are singular."""

    code = "SINGULAR_SYSTEM"


class CalibrationError(OneClassFraudError):
    """Threshold calibration is impossible on the given evaluation set."""

    code = "CALIBRATION_ERROR"
