"""Tests for model files, split manifests and staged artifact writes."""

import numpy as np
import orjson
import pytest

from oneclass_fraud.baselines import ae_baseline_train, ocnn_fit
from oneclass_fraud.data import split_benchmark
from oneclass_fraud.detector import DetectorModel, score_batch
from oneclass_fraud.errors import (
    ConfigError,
    CorruptModelError,
    FingerprintMismatchError,
    ModelFileError,
    ModelVersionError,
)
from oneclass_fraud.models import BaselineConfig
from oneclass_fraud.storage import (
    ArtifactStore,
    atomic_write,
    csv_bytes,
    deserialize_model,
    load_detector,
    load_manifest,
    load_model,
    save_manifest,
    save_model,
    serialize_model,
)


class TestDetectorFiles:
    """Versioned detector model files."""

    def test_parameters_restored_bit_exactly(self, trained_model, tmp_path):
        path = save_model(trained_model, tmp_path / "model.json")
        loaded = load_detector(path)
        assert isinstance(loaded, DetectorModel)
        for original, restored in (
            (trained_model.reconstructor, loaded.reconstructor),
            (trained_model.classifier, loaded.classifier),
        ):
            for name, value in {**original.params, **original.buffers}.items():
                other = restored.params.get(name, restored.buffers.get(name))
                assert other.tobytes() == value.tobytes(), name
        assert loaded.train_config == trained_model.train_config
        assert loaded.history == trained_model.history
        assert loaded.data_fingerprint == trained_model.data_fingerprint

    def test_reserialization_is_byte_identical(self, trained_model, tmp_path):
        path = save_model(trained_model, tmp_path / "model.json")
        assert serialize_model(load_model(path)) == path.read_bytes()

    def test_loaded_model_scores_identically(self, trained_model, synthetic_table, tmp_path):
        loaded = load_detector(save_model(trained_model, tmp_path / "model.json"))
        np.testing.assert_array_equal(
            score_batch(loaded, synthetic_table.features, "classify_reconstructed"),
            score_batch(trained_model, synthetic_table.features, "classify_reconstructed"),
        )

    def test_file_layout(self, trained_model, tmp_path):
        path = save_model(trained_model, tmp_path / "model.json")
        doc = orjson.loads(path.read_bytes())
        assert doc["version"] == 1
        assert doc["kind"] == "detector"
        assert doc["loss_kind"] == trained_model.loss_kind
        assert doc["seed"] == trained_model.train_config.seed
        assert path.read_bytes().endswith(b"\n")

    def test_truncated_file(self, trained_model, tmp_path):
        path = save_model(trained_model, tmp_path / "model.json")
        path.write_bytes(path.read_bytes()[: len(path.read_bytes()) // 2])
        with pytest.raises(CorruptModelError):
            load_model(path)

    def test_unknown_version(self, trained_model, tmp_path):
        doc = orjson.loads(serialize_model(trained_model))
        doc["version"] = 999
        path = tmp_path / "model.json"
        path.write_bytes(orjson.dumps(doc))
        with pytest.raises(ModelVersionError):
            load_model(path)

    def test_wrong_weight_shape(self, trained_model, tmp_path):
        doc = orjson.loads(serialize_model(trained_model))
        doc["weights"]["classifier"]["params"]["0.weight"] = [[0.0]]
        path = tmp_path / "model.json"
        path.write_bytes(orjson.dumps(doc))
        with pytest.raises(CorruptModelError):
            load_model(path)

    @pytest.mark.parametrize("section", ["params", "buffers"])
    @pytest.mark.parametrize("value", [[], "oops", 3])
    def test_weight_section_not_a_mapping(self, trained_model, section, value):
        doc = orjson.loads(serialize_model(trained_model))
        doc["weights"]["classifier"][section] = value
        with pytest.raises(CorruptModelError):
            deserialize_model(orjson.dumps(doc))

    @pytest.mark.parametrize("version", [True, 1.0, "1"])
    def test_version_must_be_an_integer(self, trained_model, version):
        doc = orjson.loads(serialize_model(trained_model))
        doc["version"] = version
        with pytest.raises(ModelVersionError):
            deserialize_model(orjson.dumps(doc))

    def test_missing_section(self, trained_model, tmp_path):
        doc = orjson.loads(serialize_model(trained_model))
        del doc["train_config"]
        path = tmp_path / "model.json"
        path.write_bytes(orjson.dumps(doc))
        with pytest.raises(CorruptModelError):
            load_model(path)

    def test_fingerprint_mismatch(self, trained_model, tmp_path):
        path = save_model(trained_model, tmp_path / "model.json")
        load_model(path, expected_fingerprint=trained_model.data_fingerprint)
        with pytest.raises(FingerprintMismatchError):
            load_model(path, expected_fingerprint="f" * 64)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelFileError):
            load_model(tmp_path / "absent.json")

    def test_baseline_is_not_a_detector(self, genuine_table, tmp_path):
        path = save_model(ocnn_fit(genuine_table, k=3), tmp_path / "ocnn.json")
        with pytest.raises(ModelFileError):
            load_detector(path)


class TestBaselineFiles:
    """OCNN and AutoEncoder baseline files."""

    def test_ocnn(self, genuine_table, tmp_path):
        model = ocnn_fit(genuine_table, k=4)
        model.threshold = 3.25
        loaded = load_model(save_model(model, tmp_path / "ocnn.json"))
        assert loaded.k == 4
        assert loaded.threshold == 3.25
        np.testing.assert_array_equal(loaded.points, model.points)

    @pytest.mark.parametrize("k", [0, -1, 2.0, True, 10_000])
    def test_ocnn_k_out_of_range(self, genuine_table, k):
        doc = orjson.loads(serialize_model(ocnn_fit(genuine_table, k=3)))
        doc["arch"]["k"] = k
        with pytest.raises(CorruptModelError):
            deserialize_model(orjson.dumps(doc))

    def test_ae_baseline(self, genuine_table, tmp_path):
        model = ae_baseline_train(genuine_table, BaselineConfig(method="ae", epochs=2, hidden=[8, 4]))
        path = save_model(model, tmp_path / "ae.json")
        loaded = load_model(path)
        assert loaded.history == model.history
        assert serialize_model(loaded) == path.read_bytes()


class TestManifest:
    """Split manifests."""

    def test_round_trip(self, synthetic_table, tmp_path):
        split = split_benchmark(synthetic_table, seed=1, fraud_count=10, genuine_count=10)
        assert load_manifest(save_manifest(split, tmp_path / "split.json")) == split

    def test_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            load_manifest(tmp_path / "split.json")

    def test_invalid(self, tmp_path):
        path = tmp_path / "split.json"
        path.write_bytes(b'{"seed": 0}')
        with pytest.raises(ConfigError):
            load_manifest(path)


class TestArtifactStore:
    """Staged, atomic output."""

    def test_nothing_written_before_commit(self, tmp_path):
        store = ArtifactStore(tmp_path / "out")
        store.add_json("a.json", {"x": 1})
        store.add_text("b.txt", "hello\n")
        assert store.pending == ["a.json", "b.txt"]
        assert not (tmp_path / "out").exists()

    def test_commit_writes_everything(self, tmp_path):
        store = ArtifactStore(tmp_path / "out")
        store.add_json("a.json", {"b": 2, "a": 1})
        store.add_csv("c.csv", [{"n": 1, "v": 0.1}], ["n", "v"])
        written = store.commit()
        assert [p.name for p in written] == ["a.json", "c.csv"]
        assert (tmp_path / "out" / "a.json").read_bytes() == b'{\n  "a": 1,\n  "b": 2\n}\n'
        assert (tmp_path / "out" / "c.csv").read_text() == "n,v\n1,0.1\n"
        assert store.pending == []

    def test_duplicate_name(self, tmp_path):
        store = ArtifactStore(tmp_path)
        store.add_text("x.txt", "1")
        with pytest.raises(ConfigError):
            store.add_text("x.txt", "2")

    def test_atomic_write_leaves_no_temp_files(self, tmp_path):
        atomic_write(tmp_path / "f.bin", b"one")
        atomic_write(tmp_path / "f.bin", b"two")
        assert [p.name for p in tmp_path.iterdir()] == ["f.bin"]
        assert (tmp_path / "f.bin").read_bytes() == b"two"

    def test_csv_floats_round_trip(self):
        value = 0.1 + 0.2
        text = csv_bytes([{"v": value}], ["v"]).decode()
        assert float(text.splitlines()[1]) == value
