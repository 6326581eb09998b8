"""Distances from an input row to the model's decision boundary.

Two notions are used throughout: the logit distance |g0 - g1|, which is what
training penalizes, and the margin distance |f0 - f1| / ||grad_x(f0 - f1)||,
a first-order estimate of how far the row sits from the softmax boundary in
input space. For a two-class softmax the two are linked by an exact closed
form, which `closed_form_margin` evaluates and `theorycheck` verifies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .net import Network, backward, forward, softmax2

__all__ = [
    "DistanceReport",
    "logit_distance",
    "closed_form_margin",
    "margin_distance",
    "margin_logit_gap",
]

# below this input-gradient norm the boundary direction is not identifiable
DEGENERATE_GRAD_NORM = 1e-12


@dataclass(frozen=True)
class DistanceReport:
    """Both distance notions for a single row.

    ``margin_dist`` and ``closed_form`` are NaN when ``degenerate`` is set
    (the row sits in a flat region, e.g. every relu is dead).
    """

    logit_dist: float
    margin_dist: float
    closed_form: float
    grad_norm: float
    degenerate: bool


def logit_distance(g0, g1):
    """|g0 - g1|, elementwise for arrays."""
    d = np.abs(np.asarray(g0, dtype=np.float64) - np.asarray(g1, dtype=np.float64))
    return float(d) if d.ndim == 0 else d


def closed_form_margin(logit_dist: float, grad_norm: float) -> float:
    """Map a logit distance to the margin distance it implies.

    Evaluates (e^{2d} - 1) / (2 e^d n) for d = logit_dist, n = grad_norm,
    which is sinh(d)/n. expm1 keeps the small-d case accurate.
    """
    if not (math.isfinite(logit_dist) and logit_dist >= 0):
        raise ValueError(f"logit_dist must be finite and >= 0, got {logit_dist}")
    if not (math.isfinite(grad_norm) and grad_norm > 0):
        raise ValueError(f"grad_norm must be finite and > 0, got {grad_norm}")
    return math.expm1(2.0 * logit_dist) / (2.0 * math.exp(logit_dist) * grad_norm)


def margin_distance(net: Network, x) -> DistanceReport:
    """Evaluate both distances at one row.

    The margin distance takes one reverse pass on f0 - f1; the logit-gradient
    norm comes from a separate pass on g0 - g1, so the two sides of the
    closed-form identity never share a float beyond the forward trace.
    |f0 - f1| is computed as -expm1(-|u|)/(1 + exp(-|u|)), which is the same
    quantity without the cancellation softmax subtraction would suffer for
    tiny |u|.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[0] != 1:
        raise ValueError(f"margin_distance takes a single row, got {x.shape[0]}")
    trace = forward(net, x)
    g0, g1 = float(trace.logits[0, 0]), float(trace.logits[0, 1])
    u = g0 - g1
    d_hat = abs(u)

    _, grad_u = backward(net, trace, np.array([[1.0, -1.0]]))
    grad_norm = float(np.linalg.norm(grad_u[0]))
    if grad_norm < DEGENERATE_GRAD_NORM:
        return DistanceReport(
            logit_dist=d_hat,
            margin_dist=math.nan,
            closed_form=math.nan,
            grad_norm=grad_norm,
            degenerate=True,
        )

    f0, f1 = softmax2(g0, g1)
    _, grad_f = backward(net, trace, np.array([[2.0 * f0 * f1, -2.0 * f0 * f1]]))
    grad_f_norm = float(np.linalg.norm(grad_f[0]))
    f_diff = -math.expm1(-d_hat) / (1.0 + math.exp(-d_hat))
    margin = f_diff / grad_f_norm

    return DistanceReport(
        logit_dist=d_hat,
        margin_dist=margin,
        closed_form=closed_form_margin(d_hat, grad_norm),
        grad_norm=grad_norm,
        degenerate=False,
    )


def margin_logit_gap(net: Network, x) -> float:
    """Relative error of the logit distance as a stand-in for the margin.

    |margin - logit| / max(margin, 1e-12); small near the boundary, grows
    with distance. Raises for rows where the margin is undefined.
    """
    report = margin_distance(net, x)
    if report.degenerate:
        raise ValueError("margin distance undefined: gradient norm below 1e-12")
    return abs(report.margin_dist - report.logit_dist) / max(report.margin_dist, 1e-12)
