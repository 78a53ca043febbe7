"""
Artifact storage for oneclass-fraud.

This module provides:
- An artifact store that stages every output in memory and commits them with
  atomic replaces, so a failing command leaves no partial files
- Versioned JSON model files for the detector and both baselines
- Split manifests for exact replay of the train/test protocol

JSON is written with orjson using sorted keys and two-space indentation; float
values use the shortest repr that round-trips, so a model file re-serializes
byte for byte.
"""

import csv
import io
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import orjson
from pydantic import BaseModel, ValidationError

from oneclass_fraud.baselines import AEBaseline, OCNNModel
from oneclass_fraud.detector import DetectorModel
from oneclass_fraud.errors import (
    ConfigError,
    CorruptModelError,
    FingerprintMismatchError,
    ModelFileError,
    ModelVersionError,
)
from oneclass_fraud.models import BaselineConfig, DataSplit, EpochSummary, LayerSpec, TrainConfig
from oneclass_fraud.nn_core import NetworkParams, init_network

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS

AnyModel = Union[DetectorModel, OCNNModel, AEBaseline]
PathLike = Union[str, Path]


def dumps_json(payload: Any) -> bytes:
    """Serialize a JSON value or pydantic model deterministically."""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return orjson.dumps(payload, option=JSON_OPTIONS) + b"\n"


def atomic_write(path: PathLike, data: bytes) -> Path:
    """Write ``data`` to a sibling temp file, then rename it over ``path``."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return target


def csv_bytes(rows: Sequence[Mapping[str, Any]], fieldnames: Sequence[str]) -> bytes:
    """Render rows with ``csv.DictWriter``; floats use ``repr`` for exact round trips."""
    output = io.StringIO()
    writer = csv.DictWriter(output, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return output.getvalue().encode("utf-8")


class ArtifactStore:
    """
    Staged outputs of one command under an output directory.

    Nothing touches the filesystem until :meth:`commit`; a command that fails
    halfway therefore writes nothing.
    """

    def __init__(self, root: PathLike):
        self.root = Path(root)
        self._pending: Dict[str, bytes] = {}

    def add_bytes(self, name: str, data: bytes) -> None:
        if name in self._pending:
            raise ConfigError(f"artifact {name!r} staged twice")
        self._pending[name] = data

    def add_json(self, name: str, payload: Any) -> None:
        self.add_bytes(name, dumps_json(payload))

    def add_text(self, name: str, text: str) -> None:
        self.add_bytes(name, text.encode("utf-8"))

    def add_csv(self, name: str, rows: Sequence[Mapping[str, Any]], fieldnames: Sequence[str]) -> None:
        self.add_bytes(name, csv_bytes(rows, fieldnames))

    @property
    def pending(self) -> List[str]:
        return sorted(self._pending)

    def commit(self) -> List[Path]:
        """
        Write every staged artifact atomically.

        Returns:
            Written paths in name order
        """
        written = []
        for name in sorted(self._pending):
            path = atomic_write(self.root / name, self._pending[name])
            logger.info("Wrote %s (%d bytes)", path, len(self._pending[name]))
            written.append(path)
        self._pending.clear()
        return written


# Networks


def network_to_dict(net: NetworkParams) -> Dict[str, Any]:
    return {
        "specs": [spec.model_dump(mode="json") for spec in net.specs],
        "params": {k: v.tolist() for k, v in net.params.items()},
        "buffers": {k: v.tolist() for k, v in net.buffers.items()},
        "momentum": net.momentum,
    }


def _mapping(payload: Any, key: str) -> Mapping[str, Any]:
    value = payload[key]
    if not isinstance(value, Mapping):
        raise CorruptModelError(f"{key} must be a mapping, got {type(value).__name__}")
    return value


def network_from_dict(payload: Mapping[str, Any]) -> NetworkParams:
    """
    Rebuild a network, checking every array against the shapes its specs imply.

    Raises:
        CorruptModelError: On missing arrays, extra arrays or wrong shapes
    """
    try:
        specs = [LayerSpec(**s) for s in payload["specs"]]
        template = init_network(specs, 0)
        params = {k: np.asarray(v, dtype=np.float64) for k, v in _mapping(payload, "params").items()}
        buffers = {k: np.asarray(v, dtype=np.float64) for k, v in _mapping(payload, "buffers").items()}
        momentum = float(payload["momentum"])
    except ModelFileError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModelError(f"invalid network entry: {exc}") from exc
    for kind, arrays, expected in (
        ("parameter", params, template.params),
        ("buffer", buffers, template.buffers),
    ):
        if set(arrays) != set(expected):
            raise CorruptModelError(f"{kind} names {sorted(arrays)} do not match the layer specs")
        for name, ref in expected.items():
            if arrays[name].shape != ref.shape:
                raise CorruptModelError(
                    f"{kind} {name} has shape {arrays[name].shape}, expected {ref.shape}"
                )
    if any(np.any(v <= 0) for k, v in buffers.items() if k.endswith("running_var")):
        raise CorruptModelError("batchnorm running variance must be positive")
    return NetworkParams(
        specs=specs,
        params={k: params[k] for k in template.params},
        buffers={k: buffers[k] for k in template.buffers},
        momentum=momentum,
    )


# Model files


def model_to_document(model: AnyModel) -> Dict[str, Any]:
    """Versioned JSON document of a detector or baseline model."""
    if isinstance(model, DetectorModel):
        return {
            "version": MODEL_FORMAT_VERSION,
            "kind": "detector",
            "arch": {
                "reconstructor": [s.model_dump(mode="json") for s in model.reconstructor.specs],
                "classifier": [s.model_dump(mode="json") for s in model.classifier.specs],
            },
            "weights": {
                "reconstructor": network_to_dict(model.reconstructor),
                "classifier": network_to_dict(model.classifier),
            },
            "train_config": model.train_config.model_dump(mode="json"),
            "seed": model.train_config.seed,
            "data_fingerprint": model.data_fingerprint,
            "feature_names": list(model.feature_names),
            "loss_kind": model.loss_kind,
            "history": [h.model_dump(mode="json") for h in model.history],
        }
    if isinstance(model, AEBaseline):
        return {
            "version": MODEL_FORMAT_VERSION,
            "kind": "ae_baseline",
            "arch": {"network": [s.model_dump(mode="json") for s in model.network.specs]},
            "weights": {"network": network_to_dict(model.network)},
            "train_config": model.config.model_dump(mode="json"),
            "seed": model.config.seed,
            "data_fingerprint": model.data_fingerprint,
            "feature_names": list(model.feature_names),
            "loss_kind": model.config.loss_kind,
            "threshold": model.threshold,
            "history": list(model.history),
        }
    if isinstance(model, OCNNModel):
        if model.points is None:
            raise ConfigError("cannot save an unfitted OCNN model")
        return {
            "version": MODEL_FORMAT_VERSION,
            "kind": "ocnn",
            "arch": {"k": model.k},
            "weights": {"points": model.points.tolist()},
            "feature_names": list(model.feature_names),
            "threshold": model.threshold,
        }
    raise ConfigError(f"cannot serialize {type(model).__name__}")


def model_from_document(doc: Any, expected_fingerprint: Optional[str] = None) -> AnyModel:
    """
    Raises:
        CorruptModelError: If the document is not a valid model
        ModelVersionError: If it was written by another format version
        FingerprintMismatchError: If its data fingerprint differs from the expected one
    """
    if not isinstance(doc, dict) or "version" not in doc:
        raise CorruptModelError("model file is not a versioned model document")
    # bool is an int subclass; true must not pass for version 1
    if type(doc["version"]) is not int or doc["version"] != MODEL_FORMAT_VERSION:
        raise ModelVersionError(
            f"model format version {doc['version']!r} is not supported (expected {MODEL_FORMAT_VERSION})",
            {"version": doc["version"]},
        )
    try:
        kind = doc["kind"]
        names = tuple(doc["feature_names"])
        if kind == "detector":
            model: AnyModel = DetectorModel(
                reconstructor=network_from_dict(doc["weights"]["reconstructor"]),
                classifier=network_from_dict(doc["weights"]["classifier"]),
                train_config=TrainConfig(**doc["train_config"]),
                feature_names=names,
                data_fingerprint=doc["data_fingerprint"],
                history=[EpochSummary(**h) for h in doc["history"]],
            )
        elif kind == "ae_baseline":
            model = AEBaseline(
                network=network_from_dict(doc["weights"]["network"]),
                config=BaselineConfig(**doc["train_config"]),
                threshold=doc["threshold"],
                feature_names=names,
                data_fingerprint=doc["data_fingerprint"],
                history=[float(h) for h in doc["history"]],
            )
        elif kind == "ocnn":
            points = np.asarray(doc["weights"]["points"], dtype=np.float64)
            if points.ndim != 2 or points.shape[1] != len(names):
                raise CorruptModelError(f"OCNN points have shape {points.shape}")
            k = doc["arch"]["k"]
            if type(k) is not int or not 1 <= k <= len(points):
                raise CorruptModelError(f"OCNN k must be an integer in [1, {len(points)}], got {k!r}")
            model = OCNNModel(k=k, points=points, threshold=doc["threshold"], feature_names=names)
        else:
            raise CorruptModelError(f"unknown model kind {kind!r}")
    except ModelFileError:
        raise
    except ConfigError as exc:
        raise CorruptModelError(f"model document is inconsistent: {exc.message}") from exc
    except (KeyError, TypeError, ValueError, ValidationError) as exc:
        raise CorruptModelError(f"model document is incomplete: {exc}") from exc

    fingerprint = getattr(model, "data_fingerprint", None)
    if expected_fingerprint is not None and fingerprint != expected_fingerprint:
        raise FingerprintMismatchError(
            "model was trained on different data than the given split",
            {"model": fingerprint, "expected": expected_fingerprint},
        )
    return model


def serialize_model(model: AnyModel) -> bytes:
    return dumps_json(model_to_document(model))


def deserialize_model(data: bytes, expected_fingerprint: Optional[str] = None) -> AnyModel:
    try:
        doc = orjson.loads(data)
    except orjson.JSONDecodeError as exc:
        raise CorruptModelError(f"model file is not valid JSON: {exc}") from exc
    return model_from_document(doc, expected_fingerprint)


def save_model(model: AnyModel, path: PathLike) -> Path:
    """Atomically write ``model`` as a versioned JSON file."""
    target = atomic_write(path, serialize_model(model))
    logger.info("Saved model to %s", target)
    return target


def load_model(path: PathLike, expected_fingerprint: Optional[str] = None) -> AnyModel:
    """
    Load a model file written by :func:`save_model`.

    Args:
        path: Model file
        expected_fingerprint: Refuse models trained on other data

    Raises:
        ModelFileError: If the file does not exist
        CorruptModelError: If it is truncated or malformed
        ModelVersionError: If its format version is unsupported
        FingerprintMismatchError: If the fingerprints differ
    """
    source = Path(path)
    try:
        data = source.read_bytes()
    except FileNotFoundError as exc:
        raise ModelFileError(f"model file not found: {source}") from exc
    return deserialize_model(data, expected_fingerprint)


def load_detector(path: PathLike, expected_fingerprint: Optional[str] = None) -> DetectorModel:
    model = load_model(path, expected_fingerprint)
    if not isinstance(model, DetectorModel):
        raise ModelFileError(f"{path} holds a {type(model).__name__}, not a detector")
    return model


# Split manifests


def save_manifest(split: DataSplit, path: PathLike) -> Path:
    return atomic_write(path, dumps_json(split))


def load_manifest(path: PathLike) -> DataSplit:
    """
    Raises:
        ConfigError: If the manifest is missing or invalid
    """
    source = Path(path)
    try:
        return DataSplit(**orjson.loads(source.read_bytes()))
    except FileNotFoundError as exc:
        raise ConfigError(f"split manifest not found: {source}") from exc
    except (orjson.JSONDecodeError, TypeError, ValidationError) as exc:
        raise ConfigError(f"invalid split manifest {source}: {exc}") from exc
