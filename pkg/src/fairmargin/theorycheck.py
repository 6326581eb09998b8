"""Executable checks of the closed-form link between logit and margin
distances.

Two claims are verified numerically on any network. First, the margin
distance equals sinh of the logit distance over the logit-gradient norm,
exactly up to floating point, so the check runs at tolerance 1e-9 and a
violation means an implementation bug, not a model property. Second, near
the decision boundary the raw logit distance is itself a good stand-in for
the margin distance; that one is an approximation with a threshold.

`run_checks` bundles both into a JSON-ready verdict with the worst sample
of each, which is what the `check-theorem1` CLI subcommand prints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distance import closed_form_margin, margin_distance
from .net import Network, forward, softmax2

__all__ = [
    "DEFAULT_TOL",
    "DEFAULT_BAND",
    "DEFAULT_GAP_THRESHOLD",
    "DegenerateSamplesError",
    "IdentitySample",
    "IdentityCheck",
    "BoundaryCheck",
    "collect_samples",
    "verify_margin_identity",
    "verify_near_boundary",
    "run_checks",
]

DEFAULT_TOL = 1e-9
DEFAULT_BAND = 0.01
DEFAULT_GAP_THRESHOLD = 0.05

# denominator floor so boundary rows (margin 0) report gap 0, not 0/0
GAP_FLOOR = 1e-12


class DegenerateSamplesError(ValueError):
    """Every sampled row had an unidentifiable boundary direction."""


@dataclass(frozen=True)
class IdentitySample:
    """Both distances and their gaps at one input row.

    ``relative_gap`` compares the measured margin distance to its closed
    form; ``approx_gap`` compares it to the raw logit distance. Both are
    relative to the margin distance with a 1e-12 floor, and NaN when the
    row is degenerate.
    """

    row: np.ndarray
    logit_dist: float
    margin_dist: float
    closed_form: float
    relative_gap: float
    approx_gap: float
    f0: float
    near_boundary: bool
    degenerate: bool


@dataclass(frozen=True)
class IdentityCheck:
    """Outcome of the exact identity check over a sample of rows."""

    passed: bool
    tol: float
    n_samples: int
    n_degenerate: int
    monotone: bool
    worst: IdentitySample | None


@dataclass(frozen=True)
class BoundaryCheck:
    """Outcome of the near-boundary approximation check.

    An empty band is reported (``empty_band``), not failed; gap statistics
    are None in that case.
    """

    passed: bool
    band: float
    threshold: float
    n_near: int
    median_gap: float | None
    max_gap: float | None
    empty_band: bool
    worst: IdentitySample | None


def collect_samples(net: Network, rows, band: float = DEFAULT_BAND) -> tuple[IdentitySample, ...]:
    """Evaluate both distances at every row.

    Degenerate rows (gradient norm below the identifiability floor) carry
    NaN distances and are excluded from every check downstream.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.shape[0] == 0:
        raise ValueError("at least one row required")
    samples = []
    for x in rows:
        report = margin_distance(net, x)
        g = forward(net, x[None, :]).logits
        f0, _ = softmax2(float(g[0, 0]), float(g[0, 1]))
        near = abs(f0 - 0.5) < band
        if report.degenerate:
            samples.append(IdentitySample(
                row=x.copy(), logit_dist=report.logit_dist,
                margin_dist=math.nan, closed_form=math.nan,
                relative_gap=math.nan, approx_gap=math.nan,
                f0=f0, near_boundary=near, degenerate=True,
            ))
            continue
        denom = max(report.margin_dist, GAP_FLOOR)
        samples.append(IdentitySample(
            row=x.copy(),
            logit_dist=report.logit_dist,
            margin_dist=report.margin_dist,
            closed_form=report.closed_form,
            relative_gap=abs(report.margin_dist - report.closed_form) / denom,
            approx_gap=abs(report.margin_dist - report.logit_dist) / denom,
            f0=f0,
            near_boundary=near,
            degenerate=False,
        ))
    return tuple(samples)


def _closed_form_monotone(samples) -> bool:
    """The closed form must grow with the logit distance at a fixed norm."""
    d = np.sort(np.array([s.logit_dist for s in samples]))
    values = np.array([closed_form_margin(v, 1.0) for v in d])
    steps = np.diff(values)
    gaps = np.diff(d)
    return bool(np.all(steps[gaps > 0] > 0) and np.all(steps[gaps == 0] == 0))


def verify_margin_identity(net: Network, rows, tol: float = DEFAULT_TOL) -> IdentityCheck:
    """Check margin_dist == closed_form within tol on every nondegenerate row.

    Also checks that the closed form is monotone in the logit distance when
    evaluated at a matched gradient norm across the sampled rows. Raises
    DegenerateSamplesError when no row has an identifiable boundary
    direction.
    """
    samples = collect_samples(net, rows)
    good = [s for s in samples if not s.degenerate]
    if not good:
        raise DegenerateSamplesError(
            f"all {len(samples)} rows degenerate; no boundary direction to check"
        )
    worst = max(good, key=lambda s: s.relative_gap)
    monotone = _closed_form_monotone(good)
    return IdentityCheck(
        passed=worst.relative_gap <= tol and monotone,
        tol=tol,
        n_samples=len(samples),
        n_degenerate=len(samples) - len(good),
        monotone=monotone,
        worst=worst,
    )


def verify_near_boundary(net: Network, data, band: float = DEFAULT_BAND,
                         threshold: float = DEFAULT_GAP_THRESHOLD) -> BoundaryCheck:
    """Check that logit distance approximates margin distance in the band.

    ``data`` is either an encoded dataset or a plain feature matrix. Passes
    when the median relative gap over near-boundary rows stays at or below
    the threshold; an empty band is reported, not failed.
    """
    rows = data.features if hasattr(data, "features") else data
    samples = collect_samples(net, rows, band)
    near = [s for s in samples if s.near_boundary and not s.degenerate]
    if not near:
        return BoundaryCheck(
            passed=True, band=band, threshold=threshold, n_near=0,
            median_gap=None, max_gap=None, empty_band=True, worst=None,
        )
    gaps = np.array([s.approx_gap for s in near])
    worst = max(near, key=lambda s: s.approx_gap)
    median = float(np.median(gaps))
    return BoundaryCheck(
        passed=median <= threshold,
        band=band,
        threshold=threshold,
        n_near=len(near),
        median_gap=median,
        max_gap=float(gaps.max()),
        empty_band=False,
        worst=worst,
    )


def _sample_dict(sample: IdentitySample | None):
    if sample is None:
        return None
    return {
        "row": [float(v) for v in sample.row],
        "logit_dist": sample.logit_dist,
        "margin_dist": sample.margin_dist,
        "closed_form": sample.closed_form,
        "relative_gap": sample.relative_gap,
        "approx_gap": sample.approx_gap,
        "f0": sample.f0,
        "near_boundary": sample.near_boundary,
    }


def run_checks(net: Network, rows, tol: float = DEFAULT_TOL, band: float = DEFAULT_BAND,
               threshold: float = DEFAULT_GAP_THRESHOLD) -> dict:
    """Run both checks and return a JSON-ready verdict with worst samples."""
    identity = verify_margin_identity(net, rows, tol)
    boundary = verify_near_boundary(net, rows, band, threshold)
    return {
        "passed": identity.passed and boundary.passed,
        "identity": {
            "passed": identity.passed,
            "tol": identity.tol,
            "n_samples": identity.n_samples,
            "n_degenerate": identity.n_degenerate,
            "monotone": identity.monotone,
            "worst": _sample_dict(identity.worst),
        },
        "near_boundary": {
            "passed": boundary.passed,
            "band": boundary.band,
            "threshold": boundary.threshold,
            "n_near": boundary.n_near,
            "median_gap": boundary.median_gap,
            "max_gap": boundary.max_gap,
            "empty_band": boundary.empty_band,
            "worst": _sample_dict(boundary.worst),
        },
    }
