"""Experiment harness: seeded training runs, replicated aggregates, lambda
grid sweeps, and file reports.

A run trains one network on one dataset with minibatch Adam under the
composite objective; the per-run seed drives both initialization and the
epoch shuffles, so a (config, seed) pair is bit-reproducible. Replicates
aggregate final test metrics as mean and sample std over seeds, sweeps
replicate every (lambda_f, lambda_r) cell, and emit_report writes the
delimited tables, JSON manifest, and figures for either.

``distance_mode="margin"`` swaps the objective's logit distances for the
gradient-normalized margin distances. The per-row gradient norms are held
constant during differentiation, a declared approximation; runs in this
mode log it and record it in their diagnostics.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import platform
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .data import DatasetSpec, EncodedDataset, load_and_encode
from .distance import DEGENERATE_GRAD_NORM
from .fairloss import (
    EPS_ROBUST,
    LambdaWeights,
    LossBreakdown,
    composite_loss,
    composite_loss_grad,
    cross_entropy,
)
from .metrics import CSV_COLUMNS, evaluate, report_row
from .net import (
    NetworkConfig,
    Network,
    NetworkError,
    NonFiniteGradientError,
    backward,
    forward,
    init_adam,
    init_network,
    optimizer_step,
    softmax2,
)

__all__ = [
    "TrainingAborted",
    "ReplicateAborted",
    "RunConfig",
    "RunDiagnostics",
    "EpochRecord",
    "TrainResult",
    "RunResult",
    "SweepCell",
    "SweepResult",
    "make_run",
    "resolve_splits",
    "train",
    "run_result",
    "replicate",
    "grid_sweep",
    "select_max_fairness",
    "emit_report",
]

log = logging.getLogger(__name__)

DISTANCE_MODES = ("logit", "margin")

# tag separating the epoch-shuffle stream from the init stream
_SHUFFLE_STREAM = 11

AGGREGATE_METRICS = (
    "accuracy",
    "i_fair",
    "i_robust",
    "delta_tpr",
    "delta_fpr",
    "delta_burden",
)


class TrainingAborted(RuntimeError):
    """A run hit non-finite values; records where it happened.

    ``batch`` is the 1-based minibatch number within the epoch, or None when
    the failure surfaced in the epoch-end evaluation.
    """

    def __init__(self, message: str, seed: int, epoch: int, batch=None):
        super().__init__(message)
        self.seed = seed
        self.epoch = epoch
        self.batch = batch


class ReplicateAborted(RuntimeError):
    """One seed of a replicate aborted; completed runs are preserved."""

    def __init__(self, message: str, seed: int, partial: tuple):
        super().__init__(message)
        self.seed = seed
        self.partial = partial


@dataclass(frozen=True)
class RunConfig:
    """Everything one experiment needs.

    ``dataset`` is either a DatasetSpec (loaded on demand) or an already
    encoded (train, test) pair. ``attributes`` names the protected
    attributes the fairness term trains against; empty means the dataset's
    first declared attribute. The first entry is the reporting attribute.
    """

    dataset: object
    network: NetworkConfig
    lambdas: LambdaWeights = LambdaWeights()
    epochs: int = 100
    batch_size: int = 128
    replicate_seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    attributes: tuple[str, ...] = ()
    distance_mode: str = "logit"

    def __post_init__(self):
        object.__setattr__(self, "replicate_seeds", tuple(int(s) for s in self.replicate_seeds))
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.replicate_seeds:
            raise ValueError("replicate_seeds must be nonempty")
        if len(set(self.replicate_seeds)) != len(self.replicate_seeds):
            raise ValueError(f"replicate_seeds must be distinct, got {self.replicate_seeds}")
        if self.distance_mode not in DISTANCE_MODES:
            raise ValueError(
                f"distance_mode must be one of {DISTANCE_MODES}, got {self.distance_mode!r}"
            )


@dataclass(frozen=True)
class RunDiagnostics:
    """Counters accumulated over one run's training batches."""

    batches_missing_group: int
    robustness_clamped_batches: int
    degenerate_margin_rows: int
    distance_mode: str


@dataclass(frozen=True)
class EpochRecord:
    """State after one epoch: full-train-split loss terms and test metrics
    per attribute. Epoch 0 is the untrained network."""

    epoch: int
    train_loss: LossBreakdown
    test_metrics: dict


@dataclass(frozen=True)
class TrainResult:
    seed: int
    network: Network
    epochs: tuple[EpochRecord, ...]
    wall_time: float
    lambdas: LambdaWeights
    attributes: tuple[str, ...]
    diagnostics: RunDiagnostics

    @property
    def final_metrics(self) -> dict:
        return self.epochs[-1].test_metrics

    @property
    def attribute_fairness(self) -> dict:
        """Final test fairness loss per attribute, recovered from i_fair."""
        return {a: -math.log(r.i_fair) for a, r in self.final_metrics.items()}


@dataclass(frozen=True)
class RunResult:
    """A replicate: one TrainResult per seed plus metric aggregates.

    ``aggregates[attribute][metric]`` is (mean, sample std); both are None
    when any seed's value is undefined.
    """

    config: RunConfig
    runs: tuple[TrainResult, ...]
    aggregates: dict

    @property
    def attributes(self) -> tuple[str, ...]:
        return self.runs[0].attributes

    @property
    def dataset_name(self) -> str:
        ds = self.config.dataset
        return ds.name if isinstance(ds, DatasetSpec) else ds[0].name


@dataclass(frozen=True)
class SweepCell:
    lambda_f: float
    lambda_r: float
    result: RunResult | None = None
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    cells: tuple[SweepCell, ...]
    grid_f: tuple[float, ...]
    grid_r: tuple[float, ...]
    attribute: str
    selected: SweepCell | None
    selection_note: str


def resolve_splits(run: RunConfig) -> tuple[EncodedDataset, EncodedDataset]:
    """The run's encoded (train, test) pair, loading from a spec if needed."""
    if isinstance(run.dataset, DatasetSpec):
        return load_and_encode(run.dataset)
    train_ds, test_ds = run.dataset
    return train_ds, test_ds


def make_run(dataset, lambdas: LambdaWeights = LambdaWeights(), attributes=(),
             epochs: int = 100, batch_size: int = 128, seeds=(1, 2, 3, 4, 5),
             hidden=(30,), learning_rate=None, distance_mode: str = "logit") -> RunConfig:
    """Standard protocol around a dataset: resolve the splits once, size the
    input layer from the encoded width, and default the learning rate to the
    dataset's configured one (0.001 otherwise)."""
    if isinstance(dataset, DatasetSpec):
        splits = load_and_encode(dataset)
        if learning_rate is None:
            learning_rate = dataset.learning_rate
    else:
        splits = (dataset[0], dataset[1])
    if learning_rate is None:
        learning_rate = 0.001
    widths = (splits[0].width, *(int(h) for h in hidden), 2)
    network = NetworkConfig(layer_widths=widths, learning_rate=learning_rate)
    return RunConfig(
        dataset=splits,
        network=network,
        lambdas=lambdas,
        epochs=epochs,
        batch_size=batch_size,
        replicate_seeds=tuple(seeds),
        attributes=tuple(attributes),
        distance_mode=distance_mode,
    )


def _margin_objective(net, trace, labels, group_stack, lam):
    """LossBreakdown and logit gradient with margin distances in place of
    logit distances.

    Each row's distance is |f0 - f1| over the input-gradient norm of
    (f0 - f1); the norm is treated as a constant during differentiation.
    Rows whose norm is below the degeneracy floor contribute distance 0 and
    no gradient; the count of such rows is returned.
    """
    g = trace.logits
    n = g.shape[0]
    u = g[:, 0] - g[:, 1]
    f0, f1 = softmax2(g[:, 0], g[:, 1])
    coeff = 2.0 * f0 * f1
    _, input_grads = backward(net, trace, np.column_stack([coeff, -coeff]))
    norms = np.sqrt((input_grads ** 2).sum(axis=1))
    ok = norms >= DEGENERATE_GRAD_NORM
    safe = np.where(ok, norms, 1.0)
    # tanh(|u|/2) is |f0 - f1| without the cancellation of subtracting them
    dist = np.where(ok, np.tanh(np.abs(u) / 2.0) / safe, 0.0)
    sign = np.where(u >= 0, 1.0, -1.0)
    ddist = np.where(ok, sign * coeff / safe, 0.0)
    mask = u >= 0
    md = np.where(mask, dist, 0.0)

    ce = cross_entropy(g, labels)
    y = np.asarray(labels).astype(np.int64)
    dg = (np.stack([f0, f1], axis=1) - np.eye(2)[y]) / n
    du = np.zeros(n)

    fair = 0.0
    skipped = False
    counts = []
    for ids in np.atleast_2d(np.asarray(group_stack)):
        in_a = ids == 0
        in_b = ids == 1
        n_a = int(in_a.sum())
        n_b = int(in_b.sum())
        counts.append((n_a, n_b))
        if n_a == 0 or n_b == 0:
            skipped = True
            continue
        gap = float(md[in_a].mean()) - float(md[in_b].mean())
        fair += abs(gap)
        outer = np.sign(gap)
        if lam.lambda_f > 0 and outer != 0.0:
            du[in_a] += lam.lambda_f * outer * mask[in_a] * ddist[in_a] / n_a
            du[in_b] -= lam.lambda_f * outer * mask[in_b] * ddist[in_b] / n_b

    rob = float(dist.mean())
    clamped = rob < EPS_ROBUST
    if lam.lambda_r > 0 and not clamped:
        du -= lam.lambda_r * ddist / (rob * rob * n)

    dg[:, 0] += du
    dg[:, 1] -= du
    breakdown = LossBreakdown(
        cross_entropy=ce,
        fairness_loss=fair,
        robustness_index=rob,
        composite=ce + lam.lambda_f * fair + lam.lambda_r / max(rob, EPS_ROBUST),
        group_counts=tuple(counts),
        fairness_skipped=skipped,
        robustness_clamped=clamped,
    )
    return breakdown, dg, int((~ok).sum())


def train(run: RunConfig, seed: int) -> TrainResult:
    """One seeded run: shuffled minibatch Adam under the composite objective.

    The seed drives initialization and the per-epoch shuffles. Epoch records
    start at epoch 0 (the untrained network) and hold the full-train-split
    loss terms plus test metrics per attribute. Non-finite values anywhere
    abort with the offending epoch and batch recorded.
    """
    train_ds, test_ds = resolve_splits(run)
    attrs = run.attributes or tuple(train_ds.groups)
    for a in attrs:
        if a not in train_ds.groups:
            raise ValueError(f"unknown protected attribute {a!r}; dataset has {tuple(train_ds.groups)}")
    if run.network.layer_widths[0] != train_ds.width:
        raise ValueError(
            f"network input width {run.network.layer_widths[0]} does not match "
            f"encoded feature width {train_ds.width}"
        )
    margin_mode = run.distance_mode == "margin"
    if margin_mode:
        log.info(
            "margin distance mode: per-row gradient norms held constant "
            "during differentiation (approximation)"
        )

    net = init_network(replace(run.network, seed=int(seed)))
    state = init_adam(net)
    shuffle_rng = np.random.default_rng([int(seed), _SHUFFLE_STREAM])
    features = train_ds.features
    labels = train_ds.labels
    group_stack = np.stack([np.asarray(train_ds.groups[a]) for a in attrs])

    missing = clamps = degenerate = 0

    def epoch_record(epoch: int, current: Network) -> EpochRecord:
        trace = forward(current, features)
        if margin_mode:
            bd, _, _ = _margin_objective(current, trace, labels, group_stack, run.lambdas)
        else:
            bd = composite_loss(trace.logits, labels, group_stack, run.lambdas)
        if not math.isfinite(bd.composite):
            raise TrainingAborted(
                f"non-finite loss {bd.composite} at epoch {epoch}", int(seed), epoch
            )
        reports = {a: evaluate(current, test_ds, a) for a in attrs}
        return EpochRecord(epoch=epoch, train_loss=bd, test_metrics=reports)

    t0 = time.perf_counter()
    records = [epoch_record(0, net)]
    for epoch in range(1, run.epochs + 1):
        order = shuffle_rng.permutation(train_ds.n)
        for number, start in enumerate(range(0, train_ds.n, run.batch_size), start=1):
            idx = order[start : start + run.batch_size]
            try:
                trace = forward(net, features[idx])
                if margin_mode:
                    bd, dg, dead = _margin_objective(
                        net, trace, labels[idx], group_stack[:, idx], run.lambdas
                    )
                    degenerate += dead
                else:
                    bd = composite_loss(trace.logits, labels[idx], group_stack[:, idx], run.lambdas)
                    dg = composite_loss_grad(trace.logits, labels[idx], group_stack[:, idx], run.lambdas)
                if not math.isfinite(bd.composite):
                    raise TrainingAborted(
                        f"non-finite loss {bd.composite} at epoch {epoch}, batch {number}",
                        int(seed), epoch, number,
                    )
                missing += bd.fairness_skipped
                clamps += bd.robustness_clamped
                grads, _ = backward(net, trace, dg)
                net, state = optimizer_step(net, grads, state)
            except (NetworkError, NonFiniteGradientError) as exc:
                raise TrainingAborted(
                    f"epoch {epoch}, batch {number}: {exc}", int(seed), epoch, number
                ) from exc
        try:
            records.append(epoch_record(epoch, net))
        except NetworkError as exc:
            raise TrainingAborted(f"epoch {epoch} evaluation: {exc}", int(seed), epoch) from exc
    wall = time.perf_counter() - t0

    return TrainResult(
        seed=int(seed),
        network=net,
        epochs=tuple(records),
        wall_time=wall,
        lambdas=run.lambdas,
        attributes=attrs,
        diagnostics=RunDiagnostics(
            batches_missing_group=missing,
            robustness_clamped_batches=clamps,
            degenerate_margin_rows=degenerate,
            distance_mode=run.distance_mode,
        ),
    )


def _mean_std(values):
    if any(v is None for v in values):
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else None
    return float(arr.mean()), std


def _aggregate(runs) -> dict:
    out = {}
    for a in runs[0].attributes:
        reports = [r.final_metrics[a] for r in runs]
        out[a] = {m: _mean_std([getattr(rep, m) for rep in reports]) for m in AGGREGATE_METRICS}
    return out


def run_result(run: RunConfig, runs) -> RunResult:
    """Bundle completed runs with their aggregates (std is None for one run)."""
    runs = tuple(runs)
    if not runs:
        raise ValueError("at least one completed run required")
    return RunResult(config=run, runs=runs, aggregates=_aggregate(runs))


def replicate(run: RunConfig) -> RunResult:
    """Train every configured seed and aggregate the final test metrics.

    Needs at least two seeds so the sample std is defined. A seed's abort
    fails the whole replicate; the completed runs ride along on the raised
    ReplicateAborted.
    """
    if len(run.replicate_seeds) < 2:
        raise ValueError("replicate needs at least 2 seeds for a sample std")
    run = replace(run, dataset=resolve_splits(run))
    done = []
    for seed in run.replicate_seeds:
        try:
            done.append(train(run, seed))
        except TrainingAborted as exc:
            raise ReplicateAborted(
                f"seed {seed} aborted: {exc}", seed, tuple(done)
            ) from exc
    return run_result(run, done)


def select_max_fairness(cells, attribute: str, accuracy_margin: float = 0.02):
    """Default sweep selection: highest mean i_fair among cells whose mean
    accuracy stays within ``accuracy_margin`` of the (0, 0) cell's.

    Returns (cell or None, note). Needs a completed (0, 0) cell to anchor
    the accuracy floor.
    """
    baseline = next(
        (c for c in cells if c.lambda_f == 0.0 and c.lambda_r == 0.0 and c.result), None
    )
    if baseline is None:
        return None, "no completed (0, 0) cell to anchor the accuracy floor"
    floor = baseline.result.aggregates[attribute]["accuracy"][0] - accuracy_margin
    eligible = [
        c for c in cells
        if c.result and c.result.aggregates[attribute]["accuracy"][0] >= floor
    ]
    if not eligible:
        return None, f"no cell reached the accuracy floor {floor:.4f}"
    best = max(eligible, key=lambda c: c.result.aggregates[attribute]["i_fair"][0])
    return best, f"max i_fair with accuracy >= vanilla - {accuracy_margin:g}"


def grid_sweep(base: RunConfig, grid_f, grid_r, selection=select_max_fairness) -> SweepResult:
    """Replicate at every (lambda_f, lambda_r) pair of the grids.

    A cell whose replicate aborts is marked with the error and the sweep
    continues. ``selection`` picks the preferred cell from the completed
    ones; the default wants a (0, 0) cell present as its accuracy anchor.
    """
    grid_f = tuple(float(v) for v in grid_f)
    grid_r = tuple(float(v) for v in grid_r)
    if not grid_f or not grid_r:
        raise ValueError("both lambda grids must be nonempty")
    base = replace(base, dataset=resolve_splits(base))
    train_ds, _ = base.dataset
    attribute = base.attributes[0] if base.attributes else next(iter(train_ds.groups))

    cells = []
    for lf in grid_f:
        for lr in grid_r:
            cell_run = replace(base, lambdas=LambdaWeights(lf, lr))
            try:
                cells.append(SweepCell(lambda_f=lf, lambda_r=lr, result=replicate(cell_run)))
            except ReplicateAborted as exc:
                log.warning("sweep cell (%g, %g) aborted: %s", lf, lr, exc)
                cells.append(SweepCell(lambda_f=lf, lambda_r=lr, error=str(exc)))
    selected, note = selection(cells, attribute)
    return SweepResult(
        cells=tuple(cells),
        grid_f=grid_f,
        grid_r=grid_r,
        attribute=attribute,
        selected=selected,
        selection_note=note,
    )


def _write_csv(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _cell_text(value):
    return "n/a" if value is None else value


def _manifest_base(kind: str) -> dict:
    return {
        "kind": kind,
        "package": {"name": "fairmargin", "version": __version__},
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "pandas": pd.__version__,
        },
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _config_dict(run: RunConfig, dataset_name: str) -> dict:
    return {
        "dataset": dataset_name,
        "network": {
            "layer_widths": list(run.network.layer_widths),
            "activation": run.network.activation,
            "learning_rate": run.network.learning_rate,
        },
        "lambda_f": run.lambdas.lambda_f,
        "lambda_r": run.lambdas.lambda_r,
        "epochs": run.epochs,
        "batch_size": run.batch_size,
        "seeds": list(run.replicate_seeds),
        "distance_mode": run.distance_mode,
    }


def _run_entries(runs) -> list:
    return [
        {
            "seed": r.seed,
            "wall_time": r.wall_time,
            "diagnostics": {
                "batches_missing_group": r.diagnostics.batches_missing_group,
                "robustness_clamped_batches": r.diagnostics.robustness_clamped_batches,
                "degenerate_margin_rows": r.diagnostics.degenerate_margin_rows,
                "distance_mode": r.diagnostics.distance_mode,
            },
        }
        for r in runs
    ]


def _emit_replicate(result: RunResult, out: Path, figures: bool, manifest: bool = True) -> list:
    if not result.runs:
        raise ValueError("nothing to report: replicate has no completed runs")
    out.mkdir(parents=True, exist_ok=True)
    curves = out / "curves"
    curves.mkdir(exist_ok=True)
    name = result.dataset_name
    lam = result.config.lambdas
    written = []

    rows = []
    for a in result.attributes:
        for r in result.runs:
            rows.append([a] + report_row(r.final_metrics[a], name, lam.lambda_f, lam.lambda_r, r.seed))
        agg = result.aggregates[a]
        for stat, pick in (("mean", 0), ("std", 1)):
            rows.append(
                [a, name, lam.lambda_f, lam.lambda_r, stat]
                + [_cell_text(agg[m][pick]) for m in AGGREGATE_METRICS]
            )
    written.append(_write_csv(out / "summary.csv", ("attribute",) + CSV_COLUMNS, rows))

    loss_header = ("epoch", "cross_entropy", "fairness_loss", "robustness_index", "composite")
    eval_header = ("epoch", "attribute", "accuracy", "i_fair", "i_robust", "delta_tpr", "delta_fpr")
    for r in result.runs:
        written.append(_write_csv(
            curves / f"loss_seed{r.seed}.csv",
            loss_header,
            [
                [rec.epoch, rec.train_loss.cross_entropy, rec.train_loss.fairness_loss,
                 rec.train_loss.robustness_index, rec.train_loss.composite]
                for rec in r.epochs
            ],
        ))
        written.append(_write_csv(
            curves / f"eval_seed{r.seed}.csv",
            eval_header,
            [
                [rec.epoch, a, rep.accuracy, rep.i_fair, rep.i_robust,
                 _cell_text(rep.delta_tpr), _cell_text(rep.delta_fpr)]
                for rec in r.epochs
                for a, rep in rec.test_metrics.items()
            ],
        ))

    if manifest:
        doc = _manifest_base("replicate")
        doc["config"] = _config_dict(result.config, name)
        doc["attributes"] = list(result.attributes)
        doc["runs"] = _run_entries(result.runs)
        doc["aggregates"] = result.aggregates
        path = out / "manifest.json"
        path.write_text(json.dumps(doc, indent=2))
        written.append(path)

    if figures:
        from . import figures as figmod

        figdir = out / "figures"
        figdir.mkdir(exist_ok=True)
        written.append(figmod.plot_loss_curves(result.runs, figdir / "loss_curves.png"))
        for a in result.attributes:
            written.append(
                figmod.plot_metric_curves(result.runs, a, figdir / f"metric_curves_{a}.png")
            )
        if len(result.attributes) > 1:
            written.append(
                figmod.plot_attribute_fairness(result.runs, figdir / "attribute_fairness.png")
            )
    return written


def _emit_sweep(sweep: SweepResult, out: Path, figures: bool) -> list:
    if not sweep.cells:
        raise ValueError("nothing to report: sweep has no cells")
    out.mkdir(parents=True, exist_ok=True)
    written = []

    rows = []
    for cell in sweep.cells:
        if cell.result is None:
            continue
        for a, agg in cell.result.aggregates.items():
            for metric in AGGREGATE_METRICS:
                mean, std = agg[metric]
                rows.append([cell.lambda_f, cell.lambda_r, a, metric,
                             _cell_text(mean), _cell_text(std)])
    written.append(_write_csv(
        out / "sweep.csv", ("lambda_f", "lambda_r", "attribute", "metric", "mean", "std"), rows
    ))

    cells_dir = out / "cells"
    for cell in sweep.cells:
        if cell.result is not None:
            written.extend(_emit_replicate(
                cell.result, cells_dir / f"f{cell.lambda_f:g}_r{cell.lambda_r:g}",
                figures=False, manifest=False,
            ))

    completed = [c for c in sweep.cells if c.result is not None]
    doc = _manifest_base("sweep")
    if completed:
        doc["config"] = _config_dict(completed[0].result.config, completed[0].result.dataset_name)
    doc["attribute"] = sweep.attribute
    doc["grid_f"] = list(sweep.grid_f)
    doc["grid_r"] = list(sweep.grid_r)
    doc["cells"] = [
        {
            "lambda_f": c.lambda_f,
            "lambda_r": c.lambda_r,
            "status": "ok" if c.result else "aborted",
            "error": c.error,
            "runs": _run_entries(c.result.runs) if c.result else [],
        }
        for c in sweep.cells
    ]
    doc["selected"] = (
        {"lambda_f": sweep.selected.lambda_f, "lambda_r": sweep.selected.lambda_r}
        if sweep.selected else None
    )
    doc["selection_note"] = sweep.selection_note
    path = out / "manifest.json"
    path.write_text(json.dumps(doc, indent=2))
    written.append(path)

    if figures and completed:
        from . import figures as figmod

        figdir = out / "figures"
        figdir.mkdir(exist_ok=True)
        written.extend(figmod.plot_sweep_heatmaps(sweep, figdir))
    return written


def emit_report(result, out_dir, figures: bool = True) -> tuple[Path, ...]:
    """Write a replicate's or sweep's tables, manifest, and figures.

    Replicates get a summary table, per-seed loss and metric curves, a JSON
    manifest carrying configs, seeds, versions, and wall times, and curve
    figures. Sweeps get the long-form cell table, per-cell artifacts, the
    manifest, and heatmaps. Returns the written paths.
    """
    out = Path(out_dir)
    if isinstance(result, SweepResult):
        return tuple(_emit_sweep(result, out, figures))
    if isinstance(result, RunResult):
        return tuple(_emit_replicate(result, out, figures))
    raise TypeError(f"expected RunResult or SweepResult, got {type(result).__name__}")
