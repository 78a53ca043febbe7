"""
Report rendering: CSV rows, aligned text tables and SVG charts.

Row builders return plain dicts keyed by the ``*_FIELDS`` tuples so the CLI can
hand them to :meth:`ArtifactStore.add_csv`. SVG output is deterministic: the
hash salt is fixed, text stays text, and no creation date is written.
"""

import io
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import matplotlib
from matplotlib.figure import Figure

from oneclass_fraud.models import (
    ConfusionMatrix,
    Explanation,
    MetricReport,
    RocCurve,
    TrainStepReport,
)

METRIC_FIELDS: Tuple[str, ...] = (
    "name",
    "threshold",
    "tp",
    "fp",
    "tn",
    "fn",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "mcc",
)
TRAIN_LOG_FIELDS: Tuple[str, ...] = tuple(TrainStepReport.model_fields)
ROC_FIELDS: Tuple[str, ...] = ("fpr", "tpr", "threshold")
ABLATION_FIELDS: Tuple[str, ...] = ("loss_kind", "seed", "mcc", "f1", "accuracy", "auc")

_SVG_RC = {"svg.hashsalt": "oneclass-fraud", "svg.fonttype": "none"}


def metrics_row(
    name: str, report: MetricReport, cm: Optional[ConfusionMatrix] = None, threshold: Optional[float] = None
) -> Dict[str, Any]:
    row: Dict[str, Any] = {"name": name, "threshold": "" if threshold is None else threshold}
    counts = cm.model_dump() if cm is not None else {"tp": "", "fp": "", "tn": "", "fn": ""}
    row.update(counts)
    row.update(report.model_dump())
    return row


def train_log_rows(reports: Iterable[TrainStepReport]) -> List[Dict[str, Any]]:
    return [r.model_dump() for r in reports]


def roc_rows(curve: RocCurve) -> List[Dict[str, Any]]:
    return [
        {"fpr": f, "tpr": t, "threshold": "" if th is None else th}
        for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds)
    ]


def format_number(value: Any, digits: int = 4) -> str:
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def format_table(headers: Sequence[str], rows: Sequence[Sequence[Any]], digits: int = 4) -> str:
    """
    Aligned plain-text table; numbers right-aligned, text left-aligned.

    Args:
        headers: Column titles
        rows: Cell values, floats rendered with ``digits`` decimals
        digits: Decimal places for floats

    Returns:
        Table text ending in a newline
    """
    cells = [[format_number(v, digits) for v in row] for row in rows]
    numeric = [all(isinstance(row[i], (int, float)) for row in rows) if rows else False for i in range(len(headers))]
    widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(headers)]

    def line(values: Sequence[str]) -> str:
        parts = [v.rjust(w) if num else v.ljust(w) for v, w, num in zip(values, widths, numeric)]
        return "  ".join(parts).rstrip()

    out = [line(list(headers)), "  ".join("-" * w for w in widths)]
    out.extend(line(r) for r in cells)
    return "\n".join(out) + "\n"


def format_metrics(rows: Sequence[Dict[str, Any]]) -> str:
    headers = ("name", "threshold", "accuracy", "precision", "recall", "f1", "mcc")
    return format_table(headers, [[r[h] for h in headers] for r in rows])


def format_explanation(explanation: Explanation) -> str:
    """Summary block followed by a feature / contribution / value table."""
    summary = format_table(
        ("field", "value"),
        [
            ("explainer", explanation.kind),
            ("model value", explanation.model_value),
            ("predicted value", explanation.predicted_value),
            ("intercept", explanation.intercept),
            ("fidelity", explanation.fidelity),
            ("samples", explanation.n_samples),
            ("seed", explanation.seed),
        ],
        digits=6,
    )
    features = format_table(
        ("feature", "contribution", "value"),
        [(e.feature, e.contribution, e.value) for e in explanation.entries],
        digits=6,
    )
    return summary + "\n" + features


def _svg_bytes(fig: Figure) -> bytes:
    buffer = io.BytesIO()
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def explanation_svg(explanation: Explanation) -> bytes:
    """Horizontal bar chart of contributions, largest at the top."""
    entries = list(reversed(explanation.entries))
    with matplotlib.rc_context(_SVG_RC):
        fig = Figure(figsize=(6.0, 0.4 * len(entries) + 1.2))
        ax = fig.add_subplot()
        colors = ["tab:red" if e.contribution > 0 else "tab:blue" for e in entries]
        ax.barh([f"{e.feature} = {e.value:.2f}" for e in entries], [e.contribution for e in entries], color=colors)
        ax.axvline(0.0, color="black", linewidth=0.8)
        ax.set_xlabel("contribution")
        ax.set_title(f"{explanation.kind} explainer: predicted {explanation.predicted_value:.4f}")
        fig.tight_layout()
    return _svg_bytes(fig)


def roc_svg(curve: RocCurve, label: str = "detector") -> bytes:
    with matplotlib.rc_context(_SVG_RC):
        fig = Figure(figsize=(5.0, 5.0))
        ax = fig.add_subplot()
        ax.plot(curve.fpr, curve.tpr, label=f"{label} (AUC = {curve.auc:.4f})")
        ax.plot([0.0, 1.0], [0.0, 1.0], linestyle="--", color="grey", label="naive (AUC = 0.5)")
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("true positive rate")
        ax.legend(loc="lower right")
        fig.tight_layout()
    return _svg_bytes(fig)
