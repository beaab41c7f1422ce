"""Confusion matrix and derived rates; the positive class (1) is codeleted."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricsReport:
    """Rates in [0, 1]; ``None`` marks a metric whose denominator is zero."""

    sensitivity: float | None
    specificity: float | None
    accuracy: float | None
    precision: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def confusion_matrix(predicted, actual) -> ConfusionMatrix:
    pred = np.asarray(predicted).astype(np.int64).ravel()
    act = np.asarray(actual).astype(np.int64).ravel()
    if pred.shape != act.shape:
        raise LengthMismatch(f"{pred.size} predictions for {act.size} labels")
    for name, v in (("predicted", pred), ("actual", act)):
        if not np.isin(v, (0, 1)).all():
            raise ValueError(f"{name} labels must be 0 or 1")
    return ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (act == 1))),
        fp=int(np.sum((pred == 1) & (act == 0))),
        fn=int(np.sum((pred == 0) & (act == 1))),
        tn=int(np.sum((pred == 0) & (act == 0))),
    )


def _rate(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    return MetricsReport(
        sensitivity=_rate(cm.tp, cm.tp + cm.fn),
        specificity=_rate(cm.tn, cm.tn + cm.fp),
        accuracy=_rate(cm.tp + cm.tn, cm.total),
        precision=_rate(cm.tp, cm.tp + cm.fp),
    )


def format_tables(cm: ConfusionMatrix, report: MetricsReport) -> str:
    """Plain-text rates table and confusion matrix (predicted rows, actual columns)."""

    def pct(v):
        return "   n/a" if v is None else f"{100 * v:5.1f}%"

    lines = [
        f"{'precision':>10} {'specificity':>12} {'sensitivity':>12} {'accuracy':>9}",
        f"{pct(report.precision):>10} {pct(report.specificity):>12} "
        f"{pct(report.sensitivity):>12} {pct(report.accuracy):>9}",
        "",
        f"{f'cases = {cm.total}':<26}{'codeleted (actual)':>20}{'non-codeleted (actual)':>24}",
        f"{'codeleted (predicted)':<26}{cm.tp:>20}{cm.fp:>24}",
        f"{'non-codeleted (predicted)':<26}{cm.fn:>20}{cm.tn:>24}",
    ]
    return "\n".join(lines)
