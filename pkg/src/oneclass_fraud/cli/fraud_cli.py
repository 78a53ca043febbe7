#!/usr/bin/env python3
"""
oneclass-fraud - command-line interface for the one-class fraud detector

Runs the whole protocol from the benchmark CSV: draw the split, train the
adversarial detector, evaluate it (metrics, ROC, threshold sweep), explain
single transactions, run the OCNN / AutoEncoder baselines and the
reconstruction-loss ablation.

Every command prints a structured JSON envelope on stdout (errors on stderr)
and writes its artifacts under --out only after the whole computation
succeeded.

Exit Codes:
  0 - Success, all artifacts written
  1 - User error (bad flags, bad input file, mismatched model) - do not retry
  2 - System error (I/O failure) - retry possible
"""

import argparse
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict, List, NoReturn, Optional, Sequence, Tuple

import numpy as np
import orjson
from pydantic import ValidationError

from oneclass_fraud import __version__
from oneclass_fraud.baselines import (
    ae_baseline_calibrate,
    ae_baseline_scores,
    ae_baseline_train,
    ocnn_calibrate,
    ocnn_fit,
    ocnn_scores,
    predict,
)
from oneclass_fraud.config import (
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
    FRAUD,
    GENUINE,
    TEST_FRAUD_COUNT,
    TEST_GENUINE_COUNT,
    configure_logging,
    default_data_path,
)
from oneclass_fraud.data import (
    TransactionTable,
    apply_split,
    feature_stats,
    load_csv,
    sample_subset,
    split_benchmark,
    standardize,
)
from oneclass_fraud.detector import DetectorModel, reconstruct, score_batch, train
from oneclass_fraud.errors import (
    EXIT_SYSTEM_ERROR,
    EXIT_USER_ERROR,
    ConfigError,
    OneClassFraudError,
)
from oneclass_fraud.explain import explain, reference_matrix, top_k
from oneclass_fraud.metrics import evaluate, roc_auc, threshold_sweep
from oneclass_fraud.models import (
    EXPLAINER_KINDS,
    LOSS_KINDS,
    SCORE_MODES,
    BaselineConfig,
    DataSplit,
    ExplainConfig,
    ExplainerKind,
    KernelConfig,
    RunConfig,
    TrainConfig,
)
from oneclass_fraud.reports import (
    ABLATION_FIELDS,
    METRIC_FIELDS,
    ROC_FIELDS,
    TRAIN_LOG_FIELDS,
    explanation_svg,
    format_explanation,
    format_metrics,
    format_table,
    metrics_row,
    roc_rows,
    roc_svg,
    train_log_rows,
)
from oneclass_fraud.storage import ArtifactStore, load_detector, load_manifest, serialize_model

logger = logging.getLogger(__name__)

EXIT_SUCCESS = 0

DEFAULT_SWEEP = tuple(round(0.05 * i, 2) for i in range(1, 20))


class StructuredResponse:
    """Machine-readable response envelopes."""

    @staticmethod
    def _dump(payload: Dict[str, Any]) -> str:
        return orjson.dumps(payload, option=orjson.OPT_INDENT_2).decode("utf-8")

    @staticmethod
    def success(result: Any, metadata: Optional[Dict] = None) -> Tuple[str, int]:
        """
        Format a successful response.

        Args:
            result: Result data
            metadata: Optional metadata to include

        Returns:
            Tuple of (formatted_output, exit_code)
        """
        response = {
            "success": True,
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "result": result,
        }
        if metadata:
            response["metadata"] = metadata
        return StructuredResponse._dump(response), EXIT_SUCCESS

    @staticmethod
    def error(
        code: str, message: str, details: Optional[Dict] = None, exit_code: int = EXIT_USER_ERROR
    ) -> Tuple[str, int]:
        """
        Format an error response.

        Args:
            code: Error code (e.g. CSV_PARSE_ERROR, FINGERPRINT_MISMATCH)
            message: Human-readable error message
            details: Additional error details
            exit_code: Process exit code to return

        Returns:
            Tuple of (formatted_output, exit_code)
        """
        response = {
            "success": False,
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "error": {"code": code, "message": message, "details": details or {}},
        }
        return StructuredResponse._dump(response), exit_code


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as user errors instead of exiting."""

    def error(self, message: str) -> NoReturn:
        raise ConfigError(f"{self.prog}: {message}")


class FraudCLI:
    """Runs one subcommand and stages its artifacts under the output directory."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.store = ArtifactStore(out_dir)
        self.response = StructuredResponse()

    def _output(self, content: str, exit_code: int = EXIT_SUCCESS) -> int:
        if exit_code == EXIT_SUCCESS:
            print(content)
        else:
            print(content, file=sys.stderr)
        return exit_code

    def _finish(self, run: RunConfig, result: Dict[str, Any]) -> int:
        written = self.store.commit()
        result["artifacts"] = [str(p) for p in written]
        output, code = self.response.success(result, metadata={"run": run.model_dump(mode="json")})
        return self._output(output, code)

    # Inputs

    @staticmethod
    def _load(data: Optional[str]) -> TransactionTable:
        path = data or default_data_path()
        if path is None:
            raise ConfigError("no data file: pass --data or set ONECLASS_FRAUD_DATA")
        table, _ = load_csv(path)
        return table

    @staticmethod
    def _split_tables(
        table: TransactionTable, manifest: str
    ) -> Tuple[DataSplit, TransactionTable, TransactionTable]:
        split = load_manifest(manifest)
        train_table, test_table = apply_split(table, split)
        return split, train_table, test_table

    @staticmethod
    def _model_inputs(
        model_cfg: TrainConfig, train_table: TransactionTable, *tables: TransactionTable
    ) -> List[TransactionTable]:
        """Tables in the detector's input domain (z-scored by training stats if configured)."""
        if not model_cfg.zscore:
            return list(tables)
        stats = feature_stats(train_table)
        return [standardize(t, stats) for t in tables]

    # Commands

    def cmd_split(self, run: RunConfig, fraud_count: int, genuine_count: int) -> int:
        """Draw the balanced test set and write the manifest."""
        assert run.seed is not None
        table = self._load(run.data)
        split = split_benchmark(table, run.seed, fraud_count, genuine_count)
        self.store.add_json("split.json", split)
        return self._finish(
            run,
            {
                "rows": len(table),
                "fraud": table.fraud_count,
                "genuine": table.genuine_count,
                "train": len(split.train_indices),
                "test": len(split.test_indices),
                "discarded": len(split.discarded_indices),
                "fingerprint": split.fingerprint(),
            },
        )

    def _train_detector(
        self, split: DataSplit, train_table: TransactionTable, cfg: TrainConfig
    ) -> Tuple[DetectorModel, list]:
        (inputs,) = self._model_inputs(cfg, train_table, train_table)
        return train(inputs, cfg, fingerprint=split.fingerprint())

    def cmd_train(self, run: RunConfig, manifest: str) -> int:
        """Train the detector on the manifest's training rows."""
        assert run.train is not None
        split, train_table, _ = self._split_tables(self._load(run.data), manifest)
        model, reports = self._train_detector(split, train_table, run.train)
        self.store.add_bytes("model.json", serialize_model(model))
        self.store.add_csv("train_log.csv", train_log_rows(reports), TRAIN_LOG_FIELDS)
        self.store.add_json("train_summary.json", [h.model_dump(mode="json") for h in model.history])
        last = model.history[-1]
        return self._finish(
            run,
            {
                "steps": len(reports),
                "final_epoch": last.model_dump(mode="json"),
                "fingerprint": model.data_fingerprint,
            },
        )

    def _evaluate(
        self, model: DetectorModel, train_table: TransactionTable, test_table: TransactionTable, mode, threshold
    ):
        (inputs,) = self._model_inputs(model.train_config, train_table, test_table)
        scores = score_batch(model, inputs.features, mode)
        cm, report = evaluate((scores > threshold).astype(np.int64), test_table.labels)
        curve = roc_auc(scores, test_table.labels)
        return scores, cm, report, curve

    def cmd_eval(
        self,
        run: RunConfig,
        manifest: str,
        model_path: str,
        threshold: Optional[float],
        score_mode: Optional[str],
        sweep: Optional[Sequence[float]],
    ) -> int:
        """Score the test set, write metrics, ROC points and an optional sweep."""
        split, train_table, test_table = self._split_tables(self._load(run.data), manifest)
        model = load_detector(model_path, expected_fingerprint=split.fingerprint())
        mode = score_mode or model.train_config.score_mode
        t = threshold if threshold is not None else model.train_config.threshold
        if not 0.0 < t < 1.0:
            raise ConfigError(f"threshold must lie in (0, 1), got {t}")
        scores, cm, report, curve = self._evaluate(model, train_table, test_table, mode, t)
        row = metrics_row("detector", report, cm, t)

        self.store.add_json(
            "metrics.json",
            {
                "threshold": t,
                "score_mode": mode,
                "confusion": cm.model_dump(),
                "metrics": report.model_dump(),
                "auc": curve.auc,
            },
        )
        self.store.add_csv("metrics.csv", [row], METRIC_FIELDS)
        self.store.add_text("metrics.txt", format_metrics([row]) + f"\nAUC {curve.auc:.4f}\n")
        self.store.add_csv("roc.csv", roc_rows(curve), ROC_FIELDS)
        self.store.add_bytes("roc.svg", roc_svg(curve))
        if sweep is not None:
            rows = [
                metrics_row("detector", r, threshold=th)
                for th, r in threshold_sweep(scores, test_table.labels, sweep or DEFAULT_SWEEP)
            ]
            self.store.add_csv("sweep.csv", rows, METRIC_FIELDS)
            self.store.add_text("sweep.txt", format_metrics(rows))
        logger.info("AUC %.4f, MCC %.4f at threshold %.3f (%s)", curve.auc, report.mcc, t, mode)
        return self._finish(run, {"auc": curve.auc, "metrics": report.model_dump(), "confusion": cm.model_dump()})

    def cmd_explain(
        self,
        run: RunConfig,
        manifest: str,
        model_path: str,
        kind: ExplainerKind,
        instance: Optional[int],
        svg: bool,
        score_mode: Optional[str] = None,
    ) -> int:
        """Explain one test transaction with the chosen explainer."""
        assert run.explain is not None
        split, train_table, test_table = self._split_tables(self._load(run.data), manifest)
        model = load_detector(model_path, expected_fingerprint=split.fingerprint())
        if score_mode is None:
            run = run.model_copy(
                update={"explain": run.explain.model_copy(update={"score_mode": model.train_config.score_mode})}
            )
        cfg = run.explain
        assert cfg is not None
        (inputs,) = self._model_inputs(model.train_config, train_table, test_table)

        if instance is None:
            frauds = np.flatnonzero(test_table.labels == FRAUD)
            if frauds.size == 0:
                raise ConfigError("test set holds no fraud case to explain")
            instance = int(frauds[0])
        if not 0 <= instance < len(test_table):
            raise ConfigError(f"instance must lie in [0, {len(test_table)}), got {instance}")

        reference = reference_matrix(kind, model, inputs.features)
        stats = feature_stats(reference, model.feature_names)
        x = inputs.features[instance]
        point = reconstruct(model, x) if kind == "c" else x
        full = explain(kind, model, point, stats, cfg, reference)
        shown = top_k(full, cfg.top_k)

        stem = f"explanation_{kind}"
        self.store.add_json(f"{stem}.json", shown)
        self.store.add_csv(
            f"{stem}_features.csv",
            [e.model_dump() for e in full.entries],
            ("feature", "index", "contribution", "value"),
        )
        self.store.add_text(f"{stem}.txt", format_explanation(shown))
        if svg:
            self.store.add_bytes(f"{stem}.svg", explanation_svg(shown))
        return self._finish(
            run,
            {
                "instance": instance,
                "row_id": int(test_table.row_ids[instance]),
                "label": int(test_table.labels[instance]),
                "score_mode": cfg.score_mode,
                "model_value": shown.model_value,
                "predicted_value": shown.predicted_value,
                "fidelity": shown.fidelity,
                "top_features": [e.feature for e in shown.entries],
            },
        )

    def cmd_baseline(self, run: RunConfig, manifest: str) -> int:
        """Train, calibrate and evaluate the OCNN or AutoEncoder baseline."""
        assert run.baseline is not None
        cfg = run.baseline
        split, train_table, test_table = self._split_tables(self._load(run.data), manifest)

        fit_rows = sample_subset(train_table, GENUINE, cfg.train_size, cfg.seed, stream="baseline.train")
        eval_genuine = sample_subset(
            train_table, GENUINE, cfg.eval_size, cfg.seed, exclude=fit_rows.row_ids, stream="baseline.eval.genuine"
        )
        # Only the test set holds enough fraud rows for the evaluation set
        eval_fraud = sample_subset(test_table, FRAUD, cfg.eval_size, cfg.seed, stream="baseline.eval.fraud")
        eval_set = _concat(eval_genuine, eval_fraud)
        calibrated_on_test = sorted(set(eval_set.row_ids.tolist()) & set(test_table.row_ids.tolist()))
        if calibrated_on_test:
            logger.warning("%d calibration rows are also scored in the test metrics", len(calibrated_on_test))

        if cfg.method == "ocnn":
            ocnn = ocnn_fit(fit_rows, cfg.k)
            threshold = ocnn_calibrate(ocnn, eval_set)
            scores = ocnn_scores(ocnn, test_table.features)
            self.store.add_bytes("baseline_ocnn.json", serialize_model(ocnn))
        else:
            ae = ae_baseline_train(fit_rows, cfg)
            threshold = ae_baseline_calibrate(ae, eval_set)
            scores = ae_baseline_scores(ae, test_table.features)
            self.store.add_bytes("baseline_ae.json", serialize_model(ae))

        cm, report = evaluate(predict(scores, threshold), test_table.labels)
        curve = roc_auc(scores, test_table.labels)
        row = metrics_row(cfg.method, report, cm, threshold)
        self.store.add_json(
            f"metrics_{cfg.method}.json",
            {
                "method": cfg.method,
                "threshold": threshold,
                "confusion": cm.model_dump(),
                "metrics": report.model_dump(),
                "auc": curve.auc,
                "train_rows": fit_rows.row_ids.tolist(),
                "eval_rows": eval_set.row_ids.tolist(),
                "calibrated_on_test_rows": calibrated_on_test,
            },
        )
        self.store.add_csv(f"metrics_{cfg.method}.csv", [row], METRIC_FIELDS)
        self.store.add_text(f"metrics_{cfg.method}.txt", format_metrics([row]))
        self.store.add_csv(f"roc_{cfg.method}.csv", roc_rows(curve), ROC_FIELDS)
        return self._finish(run, {"threshold": threshold, "auc": curve.auc, "metrics": report.model_dump()})

    def cmd_ablation(self, run: RunConfig, manifest: str, losses: Sequence[str], seeds: Sequence[int]) -> int:
        """Train and evaluate every reconstruction loss for each seed."""
        assert run.train is not None
        split, train_table, test_table = self._split_tables(self._load(run.data), manifest)
        rows: List[Dict[str, Any]] = []
        for loss in losses:
            for seed in seeds:
                cfg = run.train.model_copy(update={"loss_kind": loss, "seed": seed})
                model, _ = self._train_detector(split, train_table, cfg)
                _, _, report, curve = self._evaluate(model, train_table, test_table, cfg.score_mode, cfg.threshold)
                rows.append(
                    {
                        "loss_kind": loss,
                        "seed": seed,
                        "mcc": report.mcc,
                        "f1": report.f1,
                        "accuracy": report.accuracy,
                        "auc": curve.auc,
                    }
                )
        means = []
        for loss in losses:
            mine = [r for r in rows if r["loss_kind"] == loss]
            means.append(
                {
                    "loss_kind": loss,
                    "seed": "mean",
                    **{k: float(np.mean([r[k] for r in mine])) for k in ("mcc", "f1", "accuracy", "auc")},
                }
            )
        table_rows = rows + means
        self.store.add_json("ablation.json", table_rows)
        self.store.add_csv("ablation.csv", table_rows, ABLATION_FIELDS)
        self.store.add_text(
            "ablation.txt", format_table(ABLATION_FIELDS, [[r[f] for f in ABLATION_FIELDS] for r in table_rows])
        )
        best = max(means, key=lambda r: r["mcc"])
        return self._finish(run, {"mean_mcc": {m["loss_kind"]: m["mcc"] for m in means}, "best": best["loss_kind"]})


def _concat(a: TransactionTable, b: TransactionTable) -> TransactionTable:
    """Rows of ``a`` followed by rows of ``b``."""
    return TransactionTable(
        features=np.vstack([a.features, b.features]),
        labels=np.concatenate([a.labels, b.labels]),
        time=np.concatenate([a.time, b.time]),
        amount=np.concatenate([a.amount, b.amount]),
        row_ids=np.concatenate([a.row_ids, b.row_ids]),
        feature_names=a.feature_names,
    )


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="oneclass-fraud",
        description="oneclass-fraud - adversarial one-class credit card fraud detection",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Draw the balanced split
  %(prog)s split --data creditcard.csv --seed 0 --out runs/s0

  # Train with the default schedule (2 epochs, batch 4096, lr 2e-4, L2)
  %(prog)s train --manifest runs/s0/split.json --seed 0 --out runs/s0

  # Evaluate, with a threshold sweep
  %(prog)s eval --manifest runs/s0/split.json --model runs/s0/model.json --sweep --out runs/s0

  # Explain the first fraud case of the test set
  %(prog)s explain --manifest runs/s0/split.json --model runs/s0/model.json --kind ae --seed 0 --svg --out runs/s0

  # Baselines and the loss ablation
  %(prog)s baseline --method ocnn --manifest runs/s0/split.json --seed 0 --out runs/s0
  %(prog)s ablation --manifest runs/s0/split.json --seeds 0 1 2 3 4 --seed 0 --out runs/ablation

The data path defaults to $ONECLASS_FRAUD_DATA.
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More log output (repeatable)")
    parser.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")

    common = ArgumentParser(add_help=False)
    common.add_argument("--data", help="Benchmark CSV (default: $ONECLASS_FRAUD_DATA)")
    common.add_argument("--out", required=True, help="Output directory")
    common.add_argument("--seed", type=int, help="Root seed")

    with_manifest = ArgumentParser(add_help=False)
    with_manifest.add_argument("--manifest", required=True, help="Split manifest written by 'split'")

    training = ArgumentParser(add_help=False)
    training.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS, help="Training epochs")
    training.add_argument("--batch", "--batch-size", dest="batch_size", type=int, default=DEFAULT_BATCH_SIZE)
    training.add_argument("--lr", type=float, default=DEFAULT_LEARNING_RATE, help="Adam learning rate")
    training.add_argument("--loss", choices=LOSS_KINDS, default="l2", help="Reconstruction loss")
    training.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD, help="Decision threshold stored with the model")
    training.add_argument("--score-mode", choices=SCORE_MODES, default="classify_reconstructed")
    training.add_argument("--zscore", action="store_true", help="z-score features with training-set statistics")

    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    split_parser = subparsers.add_parser("split", parents=[common], help="Draw the train/test split")
    split_parser.add_argument("--test-fraud", type=int, default=TEST_FRAUD_COUNT, help="Fraud rows in the test set")
    split_parser.add_argument("--test-genuine", type=int, default=TEST_GENUINE_COUNT, help="Genuine rows in the test set")

    subparsers.add_parser("train", parents=[common, with_manifest, training], help="Train the detector")

    eval_parser = subparsers.add_parser("eval", parents=[common, with_manifest], help="Evaluate a trained detector")
    eval_parser.add_argument("--model", required=True, help="Model file written by 'train'")
    eval_parser.add_argument("--threshold", type=float, help="Decision threshold (default: the model's)")
    eval_parser.add_argument("--score-mode", choices=SCORE_MODES, help="Score mode (default: the model's)")
    eval_parser.add_argument(
        "--sweep", type=float, nargs="*", help="Also report these thresholds (default grid 0.05..0.95)"
    )

    explain_parser = subparsers.add_parser("explain", parents=[common, with_manifest], help="Explain one test case")
    explain_parser.add_argument("--model", required=True, help="Model file written by 'train'")
    explain_parser.add_argument("--kind", choices=EXPLAINER_KINDS, default="general", help="Explainer")
    explain_parser.add_argument("--instance", type=int, help="Test-set position (default: first fraud case)")
    explain_parser.add_argument("--samples", type=int, default=DEFAULT_N_SAMPLES, help="Perturbation count")
    explain_parser.add_argument("--topk", type=int, default=DEFAULT_TOP_K, help="Features to report")
    explain_parser.add_argument("--ridge", type=float, default=DEFAULT_RIDGE, help="Surrogate ridge strength")
    explain_parser.add_argument("--kernel-width", type=float, help="Kernel width (default 0.75*sqrt(28))")
    explain_parser.add_argument("--sampler", choices=("gaussian", "bootstrap"), default="gaussian")
    explain_parser.add_argument(
        "--score-mode", choices=SCORE_MODES, help="General explainer target (default: the model's)"
    )
    explain_parser.add_argument("--svg", action="store_true", help="Also write an SVG bar chart")

    baseline_parser = subparsers.add_parser("baseline", parents=[common, with_manifest], help="Run a baseline")
    baseline_parser.add_argument("--method", choices=("ocnn", "ae"), default="ocnn")
    baseline_parser.add_argument("--k", type=int, default=DEFAULT_OCNN_K, help="OCNN neighbor count")
    baseline_parser.add_argument("--train-size", type=int, default=DEFAULT_BASELINE_TRAIN_SIZE)
    baseline_parser.add_argument("--eval-size", type=int, default=DEFAULT_BASELINE_EVAL_SIZE, help="Per class")
    baseline_parser.add_argument("--epochs", type=int, default=100, help="AutoEncoder epochs")
    baseline_parser.add_argument("--batch", "--batch-size", dest="batch_size", type=int, default=32)
    baseline_parser.add_argument("--lr", type=float, default=1e-3, help="AutoEncoder learning rate")
    baseline_parser.add_argument("--loss", choices=LOSS_KINDS, default="l2")

    ablation_parser = subparsers.add_parser(
        "ablation", parents=[common, with_manifest, training], help="MCC of every reconstruction loss"
    )
    ablation_parser.add_argument("--losses", nargs="+", choices=LOSS_KINDS, default=list(LOSS_KINDS))
    ablation_parser.add_argument("--seeds", nargs="+", type=int, help="Seeds to train (default: --seed)")
    return parser


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        loss_kind=args.loss,
        threshold=args.threshold,
        score_mode=args.score_mode,
        seed=args.seed if args.seed is not None else 0,
        zscore=args.zscore,
    )


def resolve_run(args: argparse.Namespace) -> RunConfig:
    """Validate the parsed flags into a RunConfig."""
    fields: Dict[str, Any] = {"command": args.command, "data": args.data, "out": args.out, "seed": args.seed}
    if args.command in ("train", "ablation"):
        fields["train"] = _train_config(args)
    elif args.command == "explain":
        fields["explain"] = ExplainConfig(
            n_samples=args.samples,
            ridge=args.ridge,
            sampler=args.sampler,
            kernel=KernelConfig(width=args.kernel_width) if args.kernel_width is not None else KernelConfig(),
            **({"score_mode": args.score_mode} if args.score_mode else {}),
            top_k=args.topk,
            seed=args.seed if args.seed is not None else 0,
        )
    elif args.command == "baseline":
        fields["baseline"] = BaselineConfig(
            method=args.method,
            k=args.k,
            train_size=args.train_size,
            eval_size=args.eval_size,
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.lr,
            loss_kind=args.loss,
            seed=args.seed if args.seed is not None else 0,
        )
    return RunConfig(**fields)


def run_command(args: argparse.Namespace) -> int:
    run = resolve_run(args)
    cli = FraudCLI(args.out)
    if args.command == "split":
        return cli.cmd_split(run, args.test_fraud, args.test_genuine)
    if args.command == "train":
        return cli.cmd_train(run, args.manifest)
    if args.command == "eval":
        return cli.cmd_eval(run, args.manifest, args.model, args.threshold, args.score_mode, args.sweep)
    if args.command == "explain":
        return cli.cmd_explain(run, args.manifest, args.model, args.kind, args.instance, args.svg, args.score_mode)
    if args.command == "baseline":
        return cli.cmd_baseline(run, args.manifest)
    if args.command == "ablation":
        seeds = args.seeds if args.seeds else [args.seed]
        return cli.cmd_ablation(run, args.manifest, args.losses, seeds)
    raise ConfigError(f"unknown command: {args.command}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point."""
    response = StructuredResponse()
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return EXIT_SUCCESS
        configure_logging(-1 if args.quiet else args.verbose)
        return run_command(args)
    except OneClassFraudError as exc:
        output, code = response.error(exc.code, exc.message, exc.details, exc.exit_code)
    except ValidationError as exc:
        output, code = response.error(
            "CONFIG_ERROR", "invalid configuration", {"errors": orjson.loads(exc.json())}, EXIT_USER_ERROR
        )
    except FileNotFoundError as exc:
        output, code = response.error("FILE_NOT_FOUND", str(exc), {"path": str(exc.filename)}, EXIT_USER_ERROR)
    except OSError as exc:
        output, code = response.error("IO_ERROR", str(exc), {}, EXIT_SYSTEM_ERROR)
    print(output, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
