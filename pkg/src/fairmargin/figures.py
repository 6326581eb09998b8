"""Matplotlib renderings of training curves and sweep heatmaps.

Everything draws to files through the Agg backend, so these work headless.
Functions take harness result objects and a target path and return the path
they wrote.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import TYPE_CHECKING

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

if TYPE_CHECKING:
    from .harness import SweepResult

__all__ = [
    "plot_loss_curves",
    "plot_metric_curves",
    "plot_attribute_fairness",
    "plot_sweep_heatmaps",
]

_DPI = 150

LOSS_PANELS = (
    ("cross_entropy", "cross-entropy"),
    ("fairness_loss", "fairness loss"),
    ("robustness_index", "robustness index"),
    ("composite", "composite"),
)


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_loss_curves(runs, path) -> Path:
    """Four panels of per-epoch training loss terms, one line per seed."""
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    for ax, (attr_name, title) in zip(axes.ravel(), LOSS_PANELS):
        for r in runs:
            epochs = [rec.epoch for rec in r.epochs]
            ax.plot(epochs, [getattr(rec.train_loss, attr_name) for rec in r.epochs],
                    alpha=0.8, label=f"seed {r.seed}")
        ax.set_title(title)
        ax.grid(alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("epoch")
    axes[0, 0].legend(fontsize="small")
    fig.tight_layout()
    return _save(fig, path)


def plot_metric_curves(runs, attribute: str, path) -> Path:
    """Per-epoch test metrics for one protected attribute, per seed.

    Gap panels skip epochs where the gap is undefined.
    """
    panels = (
        ("accuracy", "accuracy"),
        ("i_fair", "fairness index"),
        ("i_robust", "robustness index"),
        ("delta_tpr", "TPR gap"),
    )
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    for ax, (metric, title) in zip(axes.ravel(), panels):
        for r in runs:
            points = [
                (rec.epoch, getattr(rec.test_metrics[attribute], metric))
                for rec in r.epochs
                if getattr(rec.test_metrics[attribute], metric) is not None
            ]
            if points:
                xs, ys = zip(*points)
                ax.plot(xs, ys, alpha=0.8, label=f"seed {r.seed}")
        ax.set_title(title)
        ax.grid(alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("epoch")
    axes[0, 0].legend(fontsize="small")
    fig.suptitle(f"test metrics, attribute {attribute}")
    fig.tight_layout()
    return _save(fig, path)


def plot_attribute_fairness(runs, path) -> Path:
    """Seed-averaged test fairness loss per attribute across epochs."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    attributes = runs[0].attributes
    epochs = [rec.epoch for rec in runs[0].epochs]
    for a in attributes:
        mean = [
            float(np.mean([-math.log(r.epochs[i].test_metrics[a].i_fair) for r in runs]))
            for i in range(len(epochs))
        ]
        ax.plot(epochs, mean, label=a)
    ax.set_xlabel("epoch")
    ax.set_ylabel("fairness loss")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_sweep_heatmaps(sweep: "SweepResult", out_dir,
                        metrics=("accuracy", "i_fair")) -> list[Path]:
    """One heatmap per metric over the (lambda_f, lambda_r) grid.

    Cell values are seed means for the sweep's reporting attribute; failed
    cells render as gaps.
    """
    out_dir = Path(out_dir)
    by_pos = {(c.lambda_f, c.lambda_r): c for c in sweep.cells}
    written = []
    for metric in metrics:
        grid = np.full((len(sweep.grid_f), len(sweep.grid_r)), np.nan)
        for i, lf in enumerate(sweep.grid_f):
            for j, lr in enumerate(sweep.grid_r):
                cell = by_pos.get((lf, lr))
                if cell is not None and cell.result is not None:
                    mean = cell.result.aggregates[sweep.attribute][metric][0]
                    if mean is not None:
                        grid[i, j] = mean
        fig, ax = plt.subplots(figsize=(7, 5.5))
        shown = np.ma.masked_invalid(grid)
        image = ax.imshow(shown, origin="lower", aspect="auto", cmap="viridis")
        image.cmap.set_bad("lightgray")
        ax.set_xticks(range(len(sweep.grid_r)), [f"{v:g}" for v in sweep.grid_r])
        ax.set_yticks(range(len(sweep.grid_f)), [f"{v:g}" for v in sweep.grid_f])
        ax.set_xlabel("lambda_r")
        ax.set_ylabel("lambda_f")
        ax.set_title(f"{metric} ({sweep.attribute}), mean over seeds")
        if grid.size <= 144:
            for i in range(grid.shape[0]):
                for j in range(grid.shape[1]):
                    if not np.isnan(grid[i, j]):
                        ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center",
                                color="white", fontsize=8)
        fig.colorbar(image, ax=ax)
        fig.tight_layout()
        written.append(_save(fig, out_dir / f"heatmap_{metric}.png"))
    return written
