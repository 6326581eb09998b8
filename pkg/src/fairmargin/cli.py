"""Command line entry points.

Artifact-writing commands resolve their output directory the same way:
--out-dir beats the FAIRMARGIN_OUT environment variable, which beats ./runs.
The command then writes into a job subdirectory named from the dataset and
settings and prints that path. Exit status is nonzero when a run aborts or a
check fails.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from . import __version__, harness
from .cfburden import GAConfig, delta_burden
from .data import SYNTHETIC_KINDS, DataError, load_and_encode, load_spec, synthetic_frame
from .fairloss import LambdaWeights
from .harness import ReplicateAborted, TrainingAborted, emit_report, grid_sweep, make_run
from .net import NetworkError, load_network, save_network
from .theorycheck import (
    DEFAULT_BAND,
    DEFAULT_GAP_THRESHOLD,
    DEFAULT_TOL,
    DegenerateSamplesError,
    run_checks,
)

OUT_ENV = "FAIRMARGIN_OUT"


def _parse_ints(text: str, flag: str) -> tuple[int, ...]:
    try:
        values = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise click.BadParameter(f"{flag} wants comma-separated integers, got {text!r}")
    if not values:
        raise click.BadParameter(f"{flag} must be nonempty")
    return values


def _parse_grid(text: str) -> tuple[float, ...]:
    """Either an inclusive start:stop:step range or a comma list of values."""
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            if stop < start:
                raise ValueError("stop must not be below start")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + i * step, 10) for i in range(count))
        return tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise click.BadParameter(f"bad grid {text!r}: {exc}")


def _job_dir(out_dir, name: str) -> Path:
    return (Path(out_dir) if out_dir else Path("runs")) / name


def _load_dataset(spec_path: Path):
    try:
        spec = load_spec(spec_path)
        return spec, load_and_encode(spec)
    except (DataError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc


def _load_model(model_path: Path):
    try:
        net, _ = load_network(model_path)
    except (NetworkError, ValueError, OSError) as exc:
        raise click.ClickException(f"cannot load model {model_path}: {exc}") from exc
    return net


def _build_run(spec_path, lambdas, attribute, epochs, batch_size, hidden,
               learning_rate, distance_mode, seeds):
    try:
        spec = load_spec(spec_path)
        run = make_run(
            spec,
            lambdas=lambdas,
            attributes=attribute,
            epochs=epochs,
            batch_size=batch_size,
            seeds=seeds,
            hidden=_parse_ints(hidden, "--hidden"),
            learning_rate=learning_rate,
            distance_mode=distance_mode,
        )
    except (ValueError, OSError) as exc:
        # DataError and NetworkError both derive from ValueError
        raise click.ClickException(str(exc)) from exc
    return spec, run


def _steps_taken(run) -> int:
    per_epoch = math.ceil(run.dataset[0].n / run.batch_size)
    return run.epochs * per_epoch


def _echo_aggregates(result) -> None:
    for a in result.attributes:
        agg = result.aggregates[a]
        parts = []
        for metric in harness.AGGREGATE_METRICS:
            mean, std = agg[metric]
            if mean is None:
                parts.append(f"{metric}=n/a")
            elif std is None:
                parts.append(f"{metric}={mean:.4f}")
            else:
                parts.append(f"{metric}={mean:.4f}+/-{std:.4f}")
        click.echo(f"[{a}] " + "  ".join(parts))


def _emit_json(doc: dict, out_path) -> None:
    text = json.dumps(doc, indent=2)
    click.echo(text)
    if out_path is not None:
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(text + "\n")


_spec_opt = click.option(
    "--spec", "spec_path", required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Dataset YAML (see configs/).",
)
_model_opt = click.option(
    "--model", "model_path", required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Network JSON written by train or replicate.",
)
_out_dir_opt = click.option(
    "--out-dir", envvar=OUT_ENV, default=None,
    type=click.Path(file_okay=False, path_type=Path),
    help=f"Base artifact directory (env {OUT_ENV}, default ./runs); "
         "the command writes into a job subdirectory of it.",
)
_out_file_opt = click.option(
    "--out", "out_path", default=None,
    type=click.Path(dir_okay=False, path_type=Path),
    help="Also write the JSON to this file.",
)
_split_opt = click.option(
    "--split", type=click.Choice(("train", "test")), default="test",
    show_default=True, help="Which encoded split to use.",
)

_lambda_opts = (
    click.option("--lambda-f", default=0.0, show_default=True,
                 help="Weight of the recourse-gap term."),
    click.option("--lambda-r", default=0.0, show_default=True,
                 help="Weight of the margin (robustness) term."),
)

_training_opts = (
    click.option("--epochs", default=100, show_default=True),
    click.option("--batch-size", default=128, show_default=True),
    click.option("--hidden", default="30", show_default=True,
                 help="Comma-separated hidden layer widths."),
    click.option("--learning-rate", default=None, type=float,
                 help="Adam step size (default: the dataset config's)."),
    click.option("--attribute", multiple=True,
                 help="Protected attribute(s) to train against "
                      "(default: all declared; first is the reporting one)."),
    click.option("--distance-mode", type=click.Choice(harness.DISTANCE_MODES),
                 default="logit", show_default=True,
                 help="Distance fed to the fairness and robustness terms."),
    click.option("--figures/--no-figures", default=True, show_default=True),
)


def _with_opts(*groups):
    def deco(fn):
        for group in reversed(groups):
            for opt in reversed(group):
                fn = opt(fn)
        return fn
    return deco


@click.group()
@click.version_option(__version__, prog_name="fairmargin")
def main():
    """Train and audit small tabular classifiers for equalized recourse
    and wide decision margins."""


@main.command()
@_spec_opt
@_with_opts(_lambda_opts, _training_opts)
@click.option("--seed", default=1, show_default=True)
@_out_dir_opt
def train(spec_path, lambda_f, lambda_r, epochs, batch_size, hidden,
          learning_rate, attribute, distance_mode, figures, seed, out_dir):
    """Train one seeded run and save its model plus report."""
    spec, run = _build_run(spec_path, LambdaWeights(lambda_f, lambda_r), attribute,
                           epochs, batch_size, hidden, learning_rate,
                           distance_mode, (seed,))
    out = _job_dir(out_dir, f"{spec.name}_train_f{lambda_f:g}_r{lambda_r:g}_seed{seed}")
    try:
        result = harness.train(run, seed)
    except TrainingAborted as exc:
        raise click.ClickException(f"run aborted: {exc}") from exc
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    bundle = harness.run_result(run, (result,))
    emit_report(bundle, out, figures=figures)
    model_path = save_network(result.network, out / "model.json",
                              optimizer_step_count=_steps_taken(run))
    _echo_aggregates(bundle)
    click.echo(f"model: {model_path}")
    click.echo(f"artifacts: {out}")


@main.command()
@_spec_opt
@_with_opts(_lambda_opts, _training_opts)
@click.option("--seeds", default="1,2,3,4,5", show_default=True,
              help="Comma-separated run seeds.")
@_out_dir_opt
def replicate(spec_path, lambda_f, lambda_r, epochs, batch_size, hidden,
              learning_rate, attribute, distance_mode, figures, seeds, out_dir):
    """Train every seed and aggregate the final test metrics."""
    seed_values = _parse_ints(seeds, "--seeds")
    spec, run = _build_run(spec_path, LambdaWeights(lambda_f, lambda_r), attribute,
                           epochs, batch_size, hidden, learning_rate,
                           distance_mode, seed_values)
    out = _job_dir(out_dir, f"{spec.name}_replicate_f{lambda_f:g}_r{lambda_r:g}")
    try:
        result = harness.replicate(run)
    except ReplicateAborted as exc:
        raise click.ClickException(f"replicate aborted: {exc}") from exc
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    emit_report(result, out, figures=figures)
    models = out / "models"
    models.mkdir(parents=True, exist_ok=True)
    steps = _steps_taken(run)
    for r in result.runs:
        save_network(r.network, models / f"model_seed{r.seed}.json",
                     optimizer_step_count=steps)
    _echo_aggregates(result)
    click.echo(f"models: {models}")
    click.echo(f"artifacts: {out}")


@main.command()
@_spec_opt
@_with_opts(_training_opts)
@click.option("--grid-f", required=True,
              help="Fairness-weight grid, start:stop:step or comma list.")
@click.option("--grid-r", required=True,
              help="Robustness-weight grid, start:stop:step or comma list.")
@click.option("--seeds", default="1,2,3,4,5", show_default=True,
              help="Comma-separated run seeds per cell.")
@_out_dir_opt
def sweep(spec_path, epochs, batch_size, hidden, learning_rate, attribute,
          distance_mode, figures, grid_f, grid_r, seeds, out_dir):
    """Replicate at every (lambda_f, lambda_r) grid cell and report."""
    seed_values = _parse_ints(seeds, "--seeds")
    spec, run = _build_run(spec_path, LambdaWeights(), attribute,
                           epochs, batch_size, hidden, learning_rate,
                           distance_mode, seed_values)
    out = _job_dir(out_dir, f"{spec.name}_sweep")
    try:
        result = grid_sweep(run, _parse_grid(grid_f), _parse_grid(grid_r))
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    emit_report(result, out, figures=figures)
    failed = [c for c in result.cells if c.error]
    click.echo(f"cells: {len(result.cells) - len(failed)} completed, {len(failed)} failed")
    if result.selected is not None:
        s = result.selected
        click.echo(f"selected: lambda_f={s.lambda_f:g} lambda_r={s.lambda_r:g} "
                   f"({result.selection_note})")
    else:
        click.echo(f"no cell selected: {result.selection_note}")
    click.echo(f"artifacts: {out}")
    if failed:
        sys.exit(1)


def _burden_dict(b) -> dict:
    return {
        "value": b.value,
        "n_negative": b.n_negative,
        "n_flipped": b.n_flipped,
        "n_unflipped": b.n_unflipped,
        "flagged": b.flagged,
    }


@main.command("audit-burden")
@_model_opt
@_spec_opt
@_split_opt
@click.option("--attribute", default=None,
              help="Protected attribute (default: first declared).")
@click.option("--population", default=100, show_default=True,
              help="Counterfactual search population size.")
@click.option("--generations", default=50, show_default=True)
@click.option("--ga-seed", default=0, show_default=True)
@click.option("--sample", default=None, type=int,
              help="Cap rows searched per group (seeded subsample).")
@_out_file_opt
def audit_burden(model_path, spec_path, split, attribute, population,
                 generations, ga_seed, sample, out_path):
    """Counterfactual burden gap between groups on a saved model."""
    net = _load_model(model_path)
    spec, splits = _load_dataset(spec_path)
    data = splits[1] if split == "test" else splits[0]
    attribute = attribute or spec.protected[0].name
    if attribute not in data.groups:
        raise click.ClickException(
            f"unknown attribute {attribute!r}; dataset has {tuple(data.groups)}")
    if net.input_width != data.width:
        raise click.ClickException(
            f"model expects input width {net.input_width}, "
            f"dataset encodes width {data.width}")
    try:
        cfg = GAConfig(population_size=population, generations=generations, seed=ga_seed)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    gap = delta_burden(net, data, attribute, cfg, sample=sample)
    _emit_json({
        "dataset": spec.name,
        "split": split,
        "attribute": attribute,
        "model": str(model_path),
        "ga": asdict(cfg),
        "sample": sample,
        "burden": {
            # group a satisfies the attribute's privileged rule, b is the rest
            "delta": gap.delta,
            "group_a": _burden_dict(gap.burden_a),
            "group_b": _burden_dict(gap.burden_b),
        },
    }, out_path)


@main.command("check-theorem1")
@_model_opt
@_spec_opt
@_split_opt
@click.option("--rows", default=256, show_default=True,
              help="Rows checked (seeded subsample when the split is larger).")
@click.option("--row-seed", default=0, show_default=True)
@click.option("--tol", default=DEFAULT_TOL, show_default=True,
              help="Relative tolerance of the exact-identity check.")
@click.option("--band", default=DEFAULT_BAND, show_default=True,
              help="Near-boundary band half-width on f0.")
@click.option("--threshold", default=DEFAULT_GAP_THRESHOLD, show_default=True,
              help="Median relative gap allowed near the boundary.")
@_out_file_opt
def check_theorem1(model_path, spec_path, split, rows, row_seed, tol, band,
                   threshold, out_path):
    """Margin identity and near-boundary checks on a saved model.

    Prints a JSON verdict with the worst-case samples; exits nonzero when
    either check fails.
    """
    net = _load_model(model_path)
    spec, splits = _load_dataset(spec_path)
    data = splits[1] if split == "test" else splits[0]
    if net.input_width != data.width:
        raise click.ClickException(
            f"model expects input width {net.input_width}, "
            f"dataset encodes width {data.width}")
    features = data.features
    if features.shape[0] > rows:
        rng = np.random.default_rng(row_seed)
        pick = rng.choice(features.shape[0], size=rows, replace=False)
        features = features[np.sort(pick)]
    try:
        verdict = run_checks(net, features, tol=tol, band=band, threshold=threshold)
    except DegenerateSamplesError as exc:
        raise click.ClickException(str(exc)) from exc
    _emit_json(verdict, out_path)
    if not verdict["passed"]:
        sys.exit(1)


@main.command("make-data")
@click.option("--kind", required=True, type=click.Choice(SYNTHETIC_KINDS))
@click.option("--n", default=6000, show_default=True, help="Total rows (even).")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True,
              type=click.Path(dir_okay=False, path_type=Path))
def make_data(kind, n, seed, out_path):
    """Write a synthetic demo CSV usable with configs/synthetic.yaml."""
    try:
        frame = synthetic_frame(kind, n, seed)
    except DataError as exc:
        raise click.ClickException(str(exc)) from exc
    out_path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out_path, index=False)
    click.echo(f"wrote {len(frame)} rows to {out_path}")


if __name__ == "__main__":
    main()
