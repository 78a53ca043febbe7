"""
End-to-end tests of the oneclass-fraud command line.

A small benchmark-shaped CSV is split and trained once per module; each test
then drives one subcommand through ``main`` and inspects its artifacts.
"""

import csv

import orjson
import pytest

from oneclass_fraud.cli.fraud_cli import build_parser, main, resolve_run
from oneclass_fraud.config import DATA_PATH_ENV
from tests.conftest import make_table, write_csv

pytestmark = pytest.mark.integration

FAST_TRAIN = ["--epochs", "2", "--batch", "64", "--lr", "1e-3"]


def split_args(data, out, seed="0"):
    return ["split", "--data", str(data), "--out", str(out), "--seed", seed, "--test-fraud", "20", "--test-genuine", "20"]


def train_args(data, manifest, out, seed="0"):
    return ["train", "--data", str(data), "--manifest", str(manifest), "--out", str(out), "--seed", seed] + FAST_TRAIN


def envelope(capsys):
    return orjson.loads(capsys.readouterr().out)


def error_envelope(capsys):
    """Error envelope from stderr, skipping any log lines before it."""
    err = capsys.readouterr().err
    return orjson.loads(err[err.index("{\n") :])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Benchmark CSV, split manifest and trained model shared by the module."""
    root = tmp_path_factory.mktemp("cli")
    data = write_csv(root / "creditcard.csv", make_table(320, 30, seed=11))
    run = root / "run"
    assert main(split_args(data, run)) == 0
    assert main(train_args(data, run / "split.json", run)) == 0
    return {"data": data, "run": run, "manifest": run / "split.json", "model": run / "model.json"}


class TestSplitCommand:
    """split"""

    def test_writes_manifest(self, workspace):
        doc = orjson.loads(workspace["manifest"].read_bytes())
        assert len(doc["test_indices"]) == 40
        assert len(doc["train_indices"]) == 300
        assert len(doc["discarded_indices"]) == 10
        assert doc["seed"] == 0

    def test_same_seed_same_bytes(self, workspace, tmp_path):
        assert main(split_args(workspace["data"], tmp_path)) == 0
        assert (tmp_path / "split.json").read_bytes() == workspace["manifest"].read_bytes()

    def test_envelope(self, workspace, tmp_path, capsys):
        capsys.readouterr()
        assert main(split_args(workspace["data"], tmp_path, seed="1")) == 0
        out = envelope(capsys)
        assert out["success"] is True
        assert out["result"]["test"] == 40
        assert out["metadata"]["run"]["seed"] == 1

    def test_data_path_from_environment(self, workspace, tmp_path, monkeypatch):
        monkeypatch.setenv(DATA_PATH_ENV, str(workspace["data"]))
        args = ["split", "--out", str(tmp_path), "--seed", "0", "--test-fraud", "20", "--test-genuine", "20"]
        assert main(args) == 0
        assert (tmp_path / "split.json").read_bytes() == workspace["manifest"].read_bytes()


class TestTrainCommand:
    """train"""

    def test_artifacts(self, workspace):
        run = workspace["run"]
        doc = orjson.loads(workspace["model"].read_bytes())
        assert doc["kind"] == "detector"
        assert doc["train_config"]["epochs"] == 2
        with (run / "train_log.csv").open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2 * 5
        assert len(orjson.loads((run / "train_summary.json").read_bytes())) == 2

    def test_reproducible(self, workspace, tmp_path):
        assert main(train_args(workspace["data"], workspace["manifest"], tmp_path)) == 0
        assert (tmp_path / "model.json").read_bytes() == workspace["model"].read_bytes()
        assert (tmp_path / "train_log.csv").read_bytes() == (workspace["run"] / "train_log.csv").read_bytes()

    def test_missing_seed(self, workspace, tmp_path, capsys):
        capsys.readouterr()
        args = ["train", "--data", str(workspace["data"]), "--manifest", str(workspace["manifest"]), "--out", str(tmp_path)]
        assert main(args) == 1
        assert error_envelope(capsys)["error"]["code"] == "CONFIG_ERROR"
        assert list(tmp_path.iterdir()) == []

    def test_bad_data_path(self, workspace, tmp_path, capsys):
        capsys.readouterr()
        out = tmp_path / "out"
        args = train_args(tmp_path / "absent.csv", workspace["manifest"], out)
        assert main(args) == 1
        assert error_envelope(capsys)["success"] is False
        assert not out.exists()

    def test_unknown_flag(self, workspace, tmp_path):
        assert main(train_args(workspace["data"], workspace["manifest"], tmp_path) + ["--bogus"]) == 1


class TestEvalCommand:
    """eval"""

    def test_metrics_and_roc(self, workspace, tmp_path, capsys):
        capsys.readouterr()
        args = [
            "eval",
            "--data", str(workspace["data"]),
            "--manifest", str(workspace["manifest"]),
            "--model", str(workspace["model"]),
            "--out", str(tmp_path),
        ]
        assert main(args) == 0
        result = envelope(capsys)["result"]
        metrics = orjson.loads((tmp_path / "metrics.json").read_bytes())
        assert metrics["threshold"] == 0.7
        assert sum(metrics["confusion"].values()) == 40
        assert 0.0 <= metrics["auc"] <= 1.0
        assert result["auc"] == metrics["auc"]
        roc = (tmp_path / "roc.csv").read_text().splitlines()
        assert roc[0] == "fpr,tpr,threshold"
        assert roc[-1].startswith("1.0,1.0,")
        assert (tmp_path / "roc.svg").read_bytes().lstrip().startswith(b"<?xml")

    def test_sweep(self, workspace, tmp_path):
        args = [
            "eval",
            "--data", str(workspace["data"]),
            "--manifest", str(workspace["manifest"]),
            "--model", str(workspace["model"]),
            "--out", str(tmp_path),
            "--sweep",
        ]
        assert main(args) == 0
        with (tmp_path / "sweep.csv").open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 19
        recalls = [float(r["recall"]) for r in rows]
        assert recalls == sorted(recalls, reverse=True)

    def test_model_from_other_split(self, workspace, tmp_path, capsys):
        other = tmp_path / "other"
        assert main(split_args(workspace["data"], other, seed="5")) == 0
        capsys.readouterr()
        args = [
            "eval",
            "--data", str(workspace["data"]),
            "--manifest", str(other / "split.json"),
            "--model", str(workspace["model"]),
            "--out", str(tmp_path / "eval"),
        ]
        assert main(args) == 1
        assert error_envelope(capsys)["error"]["code"] == "FINGERPRINT_MISMATCH"
        assert not (tmp_path / "eval").exists()

    def test_corrupt_model(self, workspace, tmp_path, capsys):
        doc = orjson.loads(workspace["model"].read_bytes())
        doc["weights"]["reconstructor"]["buffers"] = "oops"
        model = tmp_path / "model.json"
        model.write_bytes(orjson.dumps(doc))
        capsys.readouterr()
        args = [
            "eval",
            "--data", str(workspace["data"]),
            "--manifest", str(workspace["manifest"]),
            "--model", str(model),
            "--out", str(tmp_path / "eval"),
        ]
        assert main(args) == 1
        assert error_envelope(capsys)["error"]["code"] == "CORRUPT_MODEL"
        assert not (tmp_path / "eval").exists()

    def test_missing_model(self, workspace, tmp_path):
        args = [
            "eval",
            "--data", str(workspace["data"]),
            "--manifest", str(workspace["manifest"]),
            "--model", str(tmp_path / "absent.json"),
            "--out", str(tmp_path),
        ]
        assert main(args) == 1


class TestExplainCommand:
    """explain"""

    def _args(self, workspace, out, kind):
        return [
            "explain",
            "--data", str(workspace["data"]),
            "--manifest", str(workspace["manifest"]),
            "--model", str(workspace["model"]),
            "--out", str(out),
            "--seed", "0",
            "--kind", kind,
            "--samples", "300",
            "--topk", "6",
        ]

    @pytest.mark.parametrize("kind", ["ae", "c", "general"])
    def test_each_kind(self, workspace, tmp_path, kind):
        assert main(self._args(workspace, tmp_path, kind)) == 0
        doc = orjson.loads((tmp_path / f"explanation_{kind}.json").read_bytes())
        assert doc["kind"] == kind
        assert len(doc["entries"]) == 6
        with (tmp_path / f"explanation_{kind}_features.csv").open(newline="") as fh:
            assert len(list(csv.DictReader(fh))) == 28
        assert (tmp_path / f"explanation_{kind}.txt").exists()

    def test_default_instance_is_fraud(self, workspace, tmp_path, capsys):
        capsys.readouterr()
        assert main(self._args(workspace, tmp_path, "general")) == 0
        assert envelope(capsys)["result"]["label"] == 1

    def test_reproducible_with_svg(self, workspace, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(self._args(workspace, first, "ae") + ["--svg"]) == 0
        assert main(self._args(workspace, second, "ae") + ["--svg"]) == 0
        for name in ("explanation_ae.json", "explanation_ae_features.csv", "explanation_ae.svg"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_score_mode_defaults_to_the_models(self, workspace, tmp_path, capsys):
        run = tmp_path / "raw"
        args = train_args(workspace["data"], workspace["manifest"], run) + ["--score-mode", "classify_raw"]
        assert main(args) == 0
        capsys.readouterr()
        explain_args = self._args(workspace, tmp_path / "explain", "general")
        explain_args[explain_args.index("--model") + 1] = str(run / "model.json")
        assert main(explain_args) == 0
        out = envelope(capsys)
        assert out["result"]["score_mode"] == "classify_raw"
        assert out["metadata"]["run"]["explain"]["score_mode"] == "classify_raw"

    def test_explicit_score_mode_wins(self, workspace, tmp_path, capsys):
        capsys.readouterr()
        assert main(self._args(workspace, tmp_path, "general") + ["--score-mode", "distance_from_half"]) == 0
        assert envelope(capsys)["result"]["score_mode"] == "distance_from_half"

    def test_instance_out_of_range(self, workspace, tmp_path):
        assert main(self._args(workspace, tmp_path, "ae") + ["--instance", "40"]) == 1


class TestBaselineCommand:
    """baseline"""

    def _args(self, workspace, out, method):
        return [
            "baseline",
            "--data", str(workspace["data"]),
            "--manifest", str(workspace["manifest"]),
            "--out", str(out),
            "--seed", "0",
            "--method", method,
            "--train-size", "100",
            "--eval-size", "5",
            "--k", "5",
            "--epochs", "2",
        ]

    @pytest.mark.parametrize("method", ["ocnn", "ae"])
    def test_method(self, workspace, tmp_path, method):
        assert main(self._args(workspace, tmp_path, method)) == 0
        metrics = orjson.loads((tmp_path / f"metrics_{method}.json").read_bytes())
        assert sum(metrics["confusion"].values()) == 40
        assert len(metrics["train_rows"]) == 100
        assert len(metrics["eval_rows"]) == 10
        assert not set(metrics["train_rows"]) & set(metrics["eval_rows"])
        assert (tmp_path / f"baseline_{method}.json").exists()

    def test_reports_calibration_rows_from_test_set(self, workspace, tmp_path):
        assert main(self._args(workspace, tmp_path, "ocnn")) == 0
        metrics = orjson.loads((tmp_path / "metrics_ocnn.json").read_bytes())
        test_rows = set(orjson.loads(workspace["manifest"].read_bytes())["test_indices"])
        overlap = metrics["calibrated_on_test_rows"]
        assert overlap == sorted(set(metrics["eval_rows"]) & test_rows)
        assert len(overlap) == 5

    def test_reproducible(self, workspace, tmp_path):
        assert main(self._args(workspace, tmp_path / "a", "ocnn")) == 0
        assert main(self._args(workspace, tmp_path / "b", "ocnn")) == 0
        name = "metrics_ocnn.json"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestAblationCommand:
    """ablation"""

    def test_grid(self, workspace, tmp_path, capsys):
        capsys.readouterr()
        args = [
            "ablation",
            "--data", str(workspace["data"]),
            "--manifest", str(workspace["manifest"]),
            "--out", str(tmp_path),
            "--seed", "0",
            "--losses", "l1", "l2",
            "--seeds", "0", "1",
            "--epochs", "1",
            "--batch", "64",
        ]
        assert main(args) == 0
        rows = orjson.loads((tmp_path / "ablation.json").read_bytes())
        assert len(rows) == 4 + 2
        assert [r["seed"] for r in rows[-2:]] == ["mean", "mean"]
        assert envelope(capsys)["result"]["best"] in ("l1", "l2")


class TestResolveRun:
    """Flag validation."""

    def test_eval_needs_no_seed(self):
        args = build_parser().parse_args(["eval", "--manifest", "m", "--model", "x", "--out", "o"])
        assert resolve_run(args).seed is None

    def test_train_config_from_flags(self):
        args = build_parser().parse_args(
            ["train", "--manifest", "m", "--out", "o", "--seed", "3", "--loss", "smoothl1", "--zscore"]
        )
        run = resolve_run(args)
        assert run.train.seed == 3
        assert run.train.loss_kind == "smoothl1"
        assert run.train.zscore is True
        assert run.train.batch_size == 4096

    def test_no_command_prints_help(self, capsys):
        assert main([]) == 0
        assert "oneclass-fraud" in capsys.readouterr().out
