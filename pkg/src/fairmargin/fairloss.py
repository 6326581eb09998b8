"""The training objective: cross-entropy plus a recourse-gap penalty and an
inverse margin penalty.

The recourse gap compares, between two groups, the mean logit distance that
negatively predicted rows would have to cross to reach the positive side.
Positively predicted rows contribute zero but stay in their group's
denominator. The margin term rewards a large mean logit distance over the
whole batch.

Gradient conventions are pinned so the analytic gradient is reproducible:
the prediction mask is treated as constant (straight-through), the inner
|g0 - g1| takes subgradient +1 at 0, and the outer absolute value of the
group gap takes 0 at an exact tie.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .net import softmax2

__all__ = [
    "EPS_ROBUST",
    "MissingGroupError",
    "LambdaWeights",
    "LossBreakdown",
    "masked_distance",
    "masked_distances",
    "group_mean_gap",
    "fairness_loss",
    "multi_attribute_fairness_loss",
    "robustness_index",
    "cross_entropy",
    "composite_loss",
    "composite_loss_grad",
]

# floor for the robustness index before inverting it
EPS_ROBUST = 1e-6


class MissingGroupError(ValueError):
    """A group has no members, so the group gap is undefined."""


@dataclass(frozen=True)
class LambdaWeights:
    """Nonnegative weights for the recourse-gap and margin terms."""

    lambda_f: float = 0.0
    lambda_r: float = 0.0

    def __post_init__(self):
        for name in ("lambda_f", "lambda_r"):
            v = float(getattr(self, name))
            object.__setattr__(self, name, v)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class LossBreakdown:
    """All terms of one objective evaluation, plus bookkeeping flags.

    ``composite = cross_entropy + lambda_f * fairness_loss +
    lambda_r / robustness_index`` whenever the index is above its clamp
    floor; below it the inverse is clamped and ``robustness_clamped`` set.
    ``group_counts`` holds (n_a, n_b) per protected attribute;
    ``fairness_skipped`` means at least one attribute was missing a group
    and contributed nothing.
    """

    cross_entropy: float
    fairness_loss: float
    robustness_index: float
    composite: float
    group_counts: tuple[tuple[int, int], ...]
    fairness_skipped: bool
    robustness_clamped: bool


def _check_logits(logits) -> np.ndarray:
    g = np.asarray(logits, dtype=np.float64)
    if g.ndim != 2 or g.shape[1] != 2 or g.shape[0] == 0:
        raise ValueError(f"logits must be a nonempty (n, 2) array, got {g.shape}")
    if not np.isfinite(g).all():
        raise ValueError("logits contain non-finite values")
    return g


def _check_groups(group_ids, n: int) -> np.ndarray:
    g = np.asarray(group_ids)
    if g.shape != (n,):
        raise ValueError(f"group ids must have shape ({n},), got {g.shape}")
    if not np.isin(g, (0, 1)).all():
        raise ValueError("group ids must be 0 (group a) or 1 (group b)")
    return g.astype(np.int64)


def _normalize_group_sets(groups, n: int) -> list[np.ndarray]:
    """Accept one id vector or a sequence of them (one per attribute)."""
    arr = np.asarray(groups)
    if arr.ndim == 1:
        return [_check_groups(arr, n)]
    if arr.ndim == 2:
        return [_check_groups(row, n) for row in arr]
    raise ValueError("groups must be an (n,) vector or a (k, n) stack of them")


def masked_distance(g0: float, g1: float, predicted_label: int) -> float:
    """Per-row recourse distance: |g0 - g1| when predicted negative, else 0.

    The label must be the argmax prediction for these logits (ties to 0);
    anything else means the caller's mask is out of sync with the model.
    """
    expected = 1 if g1 > g0 else 0
    if predicted_label != expected:
        raise ValueError(
            f"predicted_label {predicted_label} inconsistent with logits "
            f"({g0}, {g1}): argmax gives {expected}"
        )
    return 0.0 if predicted_label == 1 else abs(g0 - g1)


def masked_distances(logits) -> np.ndarray:
    """Vectorized masked_distance; derives the prediction mask itself."""
    g = _check_logits(logits)
    u = g[:, 0] - g[:, 1]
    return np.where(u >= 0, np.abs(u), 0.0)


def group_mean_gap(values, group_ids) -> float:
    """|mean over group a - mean over group b|, full-group denominators."""
    v = np.asarray(values, dtype=np.float64)
    ids = _check_groups(group_ids, len(v))
    in_a = ids == 0
    in_b = ids == 1
    if not in_a.any() or not in_b.any():
        raise MissingGroupError("both groups must be present")
    return abs(float(v[in_a].mean()) - float(v[in_b].mean()))


def fairness_loss(logits, group_ids) -> float:
    """Recourse gap between two groups for one batch of logits."""
    return group_mean_gap(masked_distances(logits), group_ids)


def multi_attribute_fairness_loss(logits, group_id_sets) -> float:
    """Sum of recourse gaps over several protected attributes."""
    g = _check_logits(logits)
    md = masked_distances(g)
    sets = _normalize_group_sets(group_id_sets, g.shape[0])
    if not sets:
        raise ValueError("at least one attribute required")
    return sum(group_mean_gap(md, ids) for ids in sets)


def robustness_index(logits) -> float:
    """Mean |g0 - g1| over the batch, no prediction mask."""
    g = _check_logits(logits)
    return float(np.abs(g[:, 0] - g[:, 1]).mean())


def cross_entropy(logits, labels) -> float:
    """Mean negative log-likelihood, computed via log-sum-exp."""
    g = _check_logits(logits)
    y = np.asarray(labels)
    if y.shape != (g.shape[0],) or not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be an (n,) array of 0/1")
    m = g.max(axis=1)
    lse = m + np.log(np.exp(g[:, 0] - m) + np.exp(g[:, 1] - m))
    picked = g[np.arange(g.shape[0]), y.astype(np.int64)]
    return float((lse - picked).mean())


def composite_loss(logits, labels, groups, lam: LambdaWeights) -> LossBreakdown:
    """Evaluate every term of the objective on one batch.

    An attribute missing a group contributes nothing and sets
    ``fairness_skipped`` (mid-training batches can be single-group; aborting
    would make training order-dependent). A robustness index below
    EPS_ROBUST clamps the inverse term.
    """
    g = _check_logits(logits)
    ce = cross_entropy(g, labels)
    md = masked_distances(g)
    group_sets = _normalize_group_sets(groups, g.shape[0])

    fair = 0.0
    skipped = False
    counts = []
    for ids in group_sets:
        n_a = int((ids == 0).sum())
        n_b = int((ids == 1).sum())
        counts.append((n_a, n_b))
        if n_a == 0 or n_b == 0:
            skipped = True
            continue
        fair += abs(float(md[ids == 0].mean()) - float(md[ids == 1].mean()))

    rob = robustness_index(g)
    clamped = rob < EPS_ROBUST
    composite = ce + lam.lambda_f * fair + lam.lambda_r / max(rob, EPS_ROBUST)
    return LossBreakdown(
        cross_entropy=ce,
        fairness_loss=fair,
        robustness_index=rob,
        composite=composite,
        group_counts=tuple(counts),
        fairness_skipped=skipped,
        robustness_clamped=clamped,
    )


def composite_loss_grad(logits, labels, groups, lam: LambdaWeights) -> np.ndarray:
    """Analytic gradient of composite_loss with respect to the logits.

    Conventions: prediction mask constant, sign(|u|)' at u=0 is +1 (masked
    rows always have u >= 0 under the tie rule, so their inner subgradient
    is +1 either way), outer group-gap subgradient 0 at an exact tie, and
    the clamped inverse-robustness term is flat (zero gradient).
    """
    g = _check_logits(logits)
    y = np.asarray(labels).astype(np.int64)
    n = g.shape[0]

    f0, f1 = softmax2(g[:, 0], g[:, 1])
    probs = np.stack([f0, f1], axis=1)
    onehot = np.eye(2)[y]
    dg = (probs - onehot) / n

    u = g[:, 0] - g[:, 1]
    mask = u >= 0  # predicted negative under the tie rule
    md = np.where(mask, np.abs(u), 0.0)
    du = np.zeros(n)

    group_sets = _normalize_group_sets(groups, n)
    if lam.lambda_f > 0:
        for ids in group_sets:
            in_a = ids == 0
            in_b = ids == 1
            n_a = int(in_a.sum())
            n_b = int(in_b.sum())
            if n_a == 0 or n_b == 0:
                continue
            outer = np.sign(md[in_a].mean() - md[in_b].mean())
            if outer != 0.0:
                du[in_a] += lam.lambda_f * outer * mask[in_a] / n_a
                du[in_b] -= lam.lambda_f * outer * mask[in_b] / n_b

    if lam.lambda_r > 0:
        rob = float(np.abs(u).mean())
        if rob >= EPS_ROBUST:
            s = np.where(u >= 0, 1.0, -1.0)
            du -= lam.lambda_r * s / (rob * rob * n)

    dg[:, 0] += du
    dg[:, 1] -= du
    return dg
