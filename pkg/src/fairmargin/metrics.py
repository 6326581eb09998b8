"""Model evaluation on a labeled split: accuracy, the fairness and
robustness indices, per-group confusion counts, and error-rate gaps.

Gap metrics can be genuinely undefined (a group without positives has no
TPR); those come back as None and serializers write them as "n/a" rather
than smuggling in a zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fairloss import fairness_loss, robustness_index
from .net import Network, forward, predict_from_logits

__all__ = [
    "CSV_COLUMNS",
    "GroupConfusion",
    "MetricReport",
    "fairness_index",
    "error_rate_gaps",
    "evaluate",
    "report_row",
    "report_to_dict",
]

CSV_COLUMNS = (
    "dataset",
    "lambda_f",
    "lambda_r",
    "seed",
    "accuracy",
    "i_fair",
    "i_robust",
    "delta_tpr",
    "delta_fpr",
    "delta_burden",
)


@dataclass(frozen=True)
class GroupConfusion:
    """Confusion counts for one group; rates are None when undefined."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def tpr(self):
        pos = self.tp + self.fn
        return self.tp / pos if pos else None

    @property
    def fpr(self):
        neg = self.fp + self.tn
        return self.fp / neg if neg else None


@dataclass(frozen=True)
class MetricReport:
    """One model evaluated on one split against one protected attribute."""

    accuracy: float
    i_fair: float
    i_robust: float
    delta_tpr: float | None
    delta_fpr: float | None
    confusion_a: GroupConfusion
    confusion_b: GroupConfusion
    delta_burden: float | None = None


def fairness_index(loss: float) -> float:
    """exp(-loss): 1 at a zero recourse gap, decaying toward 0."""
    if not (math.isfinite(loss) and loss >= 0.0):
        raise ValueError(f"fairness loss must be finite and >= 0, got {loss}")
    return math.exp(-loss)


def _confusion(labels, preds) -> GroupConfusion:
    return GroupConfusion(
        tp=int(((preds == 1) & (labels == 1)).sum()),
        fp=int(((preds == 1) & (labels == 0)).sum()),
        tn=int(((preds == 0) & (labels == 0)).sum()),
        fn=int(((preds == 0) & (labels == 1)).sum()),
    )


def error_rate_gaps(labels, preds, group_ids):
    """Absolute TPR and FPR differences between groups a and b.

    Returns (delta_tpr, delta_fpr, confusion_a, confusion_b); a gap is None
    whenever either group's rate is undefined.
    """
    labels = np.asarray(labels)
    preds = np.asarray(preds)
    ids = np.asarray(group_ids)
    conf_a = _confusion(labels[ids == 0], preds[ids == 0])
    conf_b = _confusion(labels[ids == 1], preds[ids == 1])

    def gap(ra, rb):
        return abs(ra - rb) if ra is not None and rb is not None else None

    return gap(conf_a.tpr, conf_b.tpr), gap(conf_a.fpr, conf_b.fpr), conf_a, conf_b


def evaluate(net: Network, dataset, attribute: str) -> MetricReport:
    """One forward pass over a split, all metrics against one attribute."""
    logits = forward(net, dataset.features).logits
    preds = predict_from_logits(logits)
    labels = np.asarray(dataset.labels)
    groups = np.asarray(dataset.groups[attribute])

    accuracy = float((preds == labels).mean())
    i_fair = fairness_index(fairness_loss(logits, groups))
    i_robust = robustness_index(logits)
    delta_tpr, delta_fpr, conf_a, conf_b = error_rate_gaps(labels, preds, groups)
    return MetricReport(
        accuracy=accuracy,
        i_fair=i_fair,
        i_robust=i_robust,
        delta_tpr=delta_tpr,
        delta_fpr=delta_fpr,
        confusion_a=conf_a,
        confusion_b=conf_b,
    )


def _cell(value):
    return "n/a" if value is None else value


def report_row(report: MetricReport, dataset: str, lambda_f: float, lambda_r: float, seed: int) -> list:
    """One delimited row in CSV_COLUMNS order; undefined gaps become n/a."""
    return [
        dataset,
        lambda_f,
        lambda_r,
        seed,
        report.accuracy,
        report.i_fair,
        report.i_robust,
        _cell(report.delta_tpr),
        _cell(report.delta_fpr),
        _cell(report.delta_burden),
    ]


def report_to_dict(report: MetricReport) -> dict:
    """JSON-ready view; undefined gaps serialize as null."""
    def conf(c: GroupConfusion) -> dict:
        return {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn,
                "tpr": c.tpr, "fpr": c.fpr}

    return {
        "accuracy": report.accuracy,
        "i_fair": report.i_fair,
        "i_robust": report.i_robust,
        "delta_tpr": report.delta_tpr,
        "delta_fpr": report.delta_fpr,
        "delta_burden": report.delta_burden,
        "confusion_a": conf(report.confusion_a),
        "confusion_b": conf(report.confusion_b),
    }
