"""Stratified splitting, confusion matrices, and consolidated reporting.

The report mirrors the usual condition-monitoring summary: one metrics row
per (approach, dataset, parameter) in CSV, and a human-readable table
grouping each (approach, dataset) into min-max metric ranges with remarks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .domain import LABELS, HealthLabel, ParameterKind
from .errors import ContractError, ValidationError
from .models.dataset import Dataset
from .seeds import derive_seed

N_CLASSES = 3


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """3x3 count matrix; rows are true labels, columns predictions, both
    in (Normal, EarlyWarning, CriticalAlert) order."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=np.int64)
        object.__setattr__(self, "matrix", matrix)
        if matrix.shape != (N_CLASSES, N_CLASSES):
            raise ValidationError(f"confusion matrix must be 3x3, got {matrix.shape}")
        if (matrix < 0).any():
            raise ValidationError("confusion matrix entries must be >= 0")
        if matrix.sum() == 0:
            raise ValidationError("confusion matrix must count at least one sample")

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    @property
    def supports(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def accuracy(self) -> float:
        return float(np.trace(self.matrix) / self.total)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ConfusionMatrix) and np.array_equal(
            self.matrix, other.matrix
        )


@dataclass(frozen=True)
class ClassMetrics:
    label: HealthLabel
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricReport:
    per_class: tuple[ClassMetrics, ClassMetrics, ClassMetrics]
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float


def stratified_split(
    data: Dataset, test_fraction: float = 0.25, seed: int = 42
) -> tuple[Dataset, Dataset]:
    """Partition rows per class: each class contributes
    round(support * test_fraction) rows to test (banker's rounding), the
    rest to train; a single-sample class always stays in train. Row order
    within each part follows the original dataset."""
    if data.n < 4:
        raise ValidationError(f"need at least 4 rows to split, got {data.n}")
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError(
            f"test_fraction must lie in (0, 1), got {test_fraction}"
        )
    rng = np.random.default_rng(derive_seed(seed, "split", data.target_parameter.key))
    test_parts: list[np.ndarray] = []
    for label in LABELS:
        rows = np.flatnonzero(data.targets == label.value)
        if rows.size == 0:
            continue
        n_test = 0 if rows.size == 1 else round(rows.size * test_fraction)
        shuffled = rng.permutation(rows)
        test_parts.append(shuffled[:n_test])
    test_idx = np.sort(np.concatenate(test_parts)) if test_parts else np.array([], int)
    mask = np.zeros(data.n, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    if len(train_idx) == 0 or len(test_idx) == 0:
        raise ValidationError(
            f"split left an empty part (train {len(train_idx)}, test {len(test_idx)})"
        )
    return data.subset(train_idx), data.subset(test_idx)


def confusion(
    y_true: Sequence[int] | np.ndarray, y_pred: Sequence[int] | np.ndarray
) -> ConfusionMatrix:
    true = np.asarray(y_true, dtype=np.int64)
    pred = np.asarray(y_pred, dtype=np.int64)
    if true.shape != pred.shape or true.ndim != 1:
        raise ContractError(
            f"label vectors must be 1-D with equal lengths, got {true.shape} vs {pred.shape}"
        )
    if true.size == 0:
        raise ContractError("cannot build a confusion matrix from zero samples")
    matrix = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(matrix, (true, pred), 1)
    return ConfusionMatrix(matrix=matrix)


def _safe_div(num: float, den: float) -> float:
    return 0.0 if den == 0 else num / den


def metrics(cm: ConfusionMatrix) -> MetricReport:
    """Per-class precision/recall/F1 with the 0/0 -> 0 convention.

    Macro averages run over classes that occur in the truth or the
    predictions; classes entirely absent from both are skipped so perfect
    predictions always score 1.0. Weighted averages use supports.
    """
    m = cm.matrix
    total = cm.total
    per_class = []
    involved = []
    for c in range(N_CLASSES):
        tp = float(m[c, c])
        support = int(m[c].sum())
        predicted = float(m[:, c].sum())
        precision = _safe_div(tp, predicted)
        recall = _safe_div(tp, float(support))
        f1 = _safe_div(2.0 * precision * recall, precision + recall)
        per_class.append(
            ClassMetrics(
                label=LABELS[c],
                precision=precision,
                recall=recall,
                f1=f1,
                support=support,
            )
        )
        if support > 0 or predicted > 0:
            involved.append(per_class[-1])
    supports = np.array([c.support for c in per_class], dtype=float)

    def weighted(values: list[float]) -> float:
        # divide once at the end so perfect scores stay exactly 1.0
        return float(np.dot(supports, values) / total)

    return MetricReport(
        per_class=tuple(per_class),
        accuracy=float(np.trace(m) / total),
        macro_precision=float(np.mean([c.precision for c in involved])),
        macro_recall=float(np.mean([c.recall for c in involved])),
        macro_f1=float(np.mean([c.f1 for c in involved])),
        weighted_precision=weighted([c.precision for c in per_class]),
        weighted_recall=weighted([c.recall for c in per_class]),
        weighted_f1=weighted([c.f1 for c in per_class]),
    )


def default_remarks(report: MetricReport) -> str:
    """Deterministic one-liner pointing at the weakest supported class."""
    supported = [c for c in report.per_class if c.support > 0]
    worst = min(supported, key=lambda c: (c.recall, -c.label.value))
    if worst.recall >= 0.95:
        return "consistent across all classes"
    return f"weak recall {worst.recall:.2f} on {worst.label.token}"


@dataclass(frozen=True)
class EvaluationCell:
    approach: str
    dataset: str
    parameter: ParameterKind
    matrix: ConfusionMatrix
    metrics: MetricReport
    remarks: str = ""


REPORT_CSV_COLUMNS = (
    ["approach", "dataset", "parameter", "accuracy", "precision_macro", "recall_macro", "f1_macro"]
    + [
        f"{metric}_{label.token.lower()}"
        for label in LABELS
        for metric in ("precision", "recall", "f1")
    ]
    + ["remarks"]
)

CONFUSION_CSV_COLUMNS = ["approach", "dataset", "parameter", "true_label"] + [
    f"pred_{label.token.lower()}" for label in LABELS
]


@dataclass(frozen=True)
class EvaluationReport:
    cells: tuple[EvaluationCell, ...]

    def __post_init__(self) -> None:
        if not self.cells:
            raise ValidationError("evaluation report needs at least one cell")

    def approaches(self) -> list[tuple[str, str]]:
        seen: list[tuple[str, str]] = []
        for cell in self.cells:
            key = (cell.approach, cell.dataset)
            if key not in seen:
                seen.append(key)
        return seen

    def group(self, approach: str, dataset: str) -> list[EvaluationCell]:
        return [
            c for c in self.cells if c.approach == approach and c.dataset == dataset
        ]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPORT_CSV_COLUMNS)
            for cell in self.cells:
                row = [
                    cell.approach,
                    cell.dataset,
                    cell.parameter.key,
                    f"{cell.metrics.accuracy:.6f}",
                    f"{cell.metrics.macro_precision:.6f}",
                    f"{cell.metrics.macro_recall:.6f}",
                    f"{cell.metrics.macro_f1:.6f}",
                ]
                for per_class in cell.metrics.per_class:
                    row += [
                        f"{per_class.precision:.6f}",
                        f"{per_class.recall:.6f}",
                        f"{per_class.f1:.6f}",
                    ]
                row.append(cell.remarks)
                writer.writerow(row)

    def write_confusion_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CONFUSION_CSV_COLUMNS)
            for cell in self.cells:
                for i, label in enumerate(LABELS):
                    writer.writerow(
                        [cell.approach, cell.dataset, cell.parameter.key, label.token]
                        + [int(v) for v in cell.matrix.matrix[i]]
                    )

    def render_text(self, extra_rows: Iterable[tuple[str, str, str]] = ()) -> str:
        """Consolidated table: one row per (approach, dataset) with metric
        ranges across parameters. extra_rows inserts metric-free rows
        (approach, dataset, remarks), e.g. for the thresholding channels."""
        header = ("Approach", "Dataset", "Accuracy (%)", "Precision", "Recall", "F1-score", "Remarks")
        rows = [header]
        for approach, dataset, remarks in extra_rows:
            rows.append((approach, dataset, "--", "--", "--", "--", remarks))
        for approach, dataset in self.approaches():
            cells = self.group(approach, dataset)
            accuracy = _span([c.metrics.accuracy * 100 for c in cells], "{:.1f}")
            precision = _span([c.metrics.macro_precision for c in cells], "{:.2f}")
            recall = _span([c.metrics.macro_recall for c in cells], "{:.2f}")
            f1 = _span([c.metrics.macro_f1 for c in cells], "{:.2f}")
            remark = next((c.remarks for c in cells if c.remarks), "")
            rows.append((approach, dataset, accuracy, precision, recall, f1, remark))
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = []
        for i, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _span(values: list[float], fmt: str) -> str:
    lo, hi = min(values), max(values)
    if fmt.format(lo) == fmt.format(hi):
        return fmt.format(hi)
    return f"{fmt.format(lo)}-{fmt.format(hi)}"


def build_report(cells: Iterable[EvaluationCell]) -> EvaluationReport:
    """Validate and assemble cells; every cell's metrics must be
    recomputable from its stored matrix."""
    cells = tuple(cells)
    for cell in cells:
        if metrics(cell.matrix) != cell.metrics:
            raise ContractError(
                f"metrics for {cell.approach}/{cell.parameter.key} do not match "
                "their confusion matrix"
            )
    return EvaluationReport(cells=cells)
