"""Counterfactual search by genetic algorithm, and the recourse burden
audit built on it.

The search works in the encoded feature space but respects column types:
numeric genes live in [0, 1] and mutate by small clipped Gaussian steps,
categorical genes are level indices that mutate by resampling. Candidate
cost is L2 over the scaled numerics plus the fraction of categorical
columns changed. A candidate is feasible only if the model assigns the
target class; infeasible candidates rank strictly below every feasible one.

Burden for a group is the mean counterfactual distance over its negatively
predicted rows; the gap between two groups' burdens is the audited quantity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import ColumnMeta, EncodedDataset
from .net import Network, forward, predict_from_logits

__all__ = [
    "GAConfig",
    "CounterfactualResult",
    "GroupBurden",
    "BurdenGap",
    "mixed_distance",
    "find_counterfactual",
    "burden",
    "delta_burden",
]


@dataclass(frozen=True)
class GAConfig:
    """Search hyperparameters; the defaults match the audit protocol used
    throughout (population 100, 50 generations, mutation 0.1, uniform
    crossover at 0.5, tournament selection of 3, two elites)."""

    population_size: int = 100
    generations: int = 50
    mutation_rate: float = 0.1
    mutation_scale: float = 0.1
    crossover_rate: float = 0.5
    tournament_size: int = 3
    elitism_count: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 4:
            raise ValueError("population_size must be at least 4")
        if self.generations < 1:
            raise ValueError("generations must be positive")
        for name in ("mutation_rate", "crossover_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.mutation_scale <= 0:
            raise ValueError("mutation_scale must be positive")
        if not 2 <= self.tournament_size <= self.population_size:
            raise ValueError("tournament_size must lie in [2, population_size]")
        if not 0 <= self.elitism_count < self.population_size:
            raise ValueError("elitism_count must lie in [0, population_size)")


@dataclass(frozen=True)
class CounterfactualResult:
    """Best feasible candidate for one row.

    ``flipped`` means the returned point reaches the target class; when no
    candidate ever did, it is False and ``distance`` is inf.
    ``best_history`` records the best feasible distance after each
    generation (inf until one exists), so it is non-increasing.
    """

    counterfactual: np.ndarray
    distance: float
    flipped: bool
    generations_used: int
    best_history: tuple[float, ...]


@dataclass(frozen=True)
class GroupBurden:
    """Mean counterfactual distance over one group's rejected rows.

    ``n_negative`` counts the rows actually searched (after any sampling);
    rows whose search never flipped are excluded from the mean and counted
    in ``n_unflipped``. ``flagged`` marks a value that is not a real mean:
    no negative rows, or nothing flipped.
    """

    value: float
    n_negative: int
    n_flipped: int
    n_unflipped: int
    flagged: bool


@dataclass(frozen=True)
class BurdenGap:
    """|burden_a - burden_b|, None when either side is flagged."""

    delta: float | None
    burden_a: GroupBurden
    burden_b: GroupBurden


def _split_columns(columns):
    numeric = tuple(m for m in columns if m.kind == "numeric")
    categorical = tuple(m for m in columns if m.kind == "categorical")
    return numeric, categorical


def _cat_levels(x_row, meta: ColumnMeta) -> int:
    block = x_row[meta.start : meta.start + meta.width]
    return int(np.argmax(block))


def mixed_distance(x, candidates, columns) -> np.ndarray:
    """Distance from one encoded row to each encoded candidate row.

    L2 over the scaled numeric slots plus (changed categorical columns) /
    (total categorical columns). Either part vanishes when its column set
    is empty.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    cand = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    numeric, categorical = _split_columns(columns)

    total = np.zeros(cand.shape[0])
    if numeric:
        idx = [m.start for m in numeric]
        total += np.sqrt(((cand[:, idx] - x[idx]) ** 2).sum(axis=1))
    if categorical:
        changed = np.zeros(cand.shape[0])
        for meta in categorical:
            block = slice(meta.start, meta.start + meta.width)
            changed += cand[:, block].argmax(axis=1) != _cat_levels(x, meta)
        total += changed / len(categorical)
    return total


def _decode(numeric_genes, cat_genes, columns, width) -> np.ndarray:
    numeric, categorical = _split_columns(columns)
    pop = numeric_genes.shape[0] if numeric else cat_genes.shape[0]
    out = np.zeros((pop, width))
    for j, meta in enumerate(numeric):
        out[:, meta.start] = numeric_genes[:, j]
    for j, meta in enumerate(categorical):
        out[np.arange(pop), meta.start + cat_genes[:, j]] = 1.0
    return out


def find_counterfactual(
    net: Network,
    x,
    columns,
    cfg: GAConfig,
    target_class: int | None = None,
    row_key: int = 0,
) -> CounterfactualResult:
    """Search for the nearest input the model assigns to the target class.

    The default target is the opposite of the model's prediction for x.
    Reproducible: the stream is keyed by (cfg.seed, row_key), and every
    generation draws the same number of variates regardless of fitness.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    width = sum(m.width for m in columns)
    if x.shape[0] != width or width != net.input_width:
        raise ValueError(
            f"row width {x.shape[0]}, column width {width}, and network input "
            f"{net.input_width} must all agree"
        )
    numeric, categorical = _split_columns(columns)
    if not numeric and not categorical:
        raise ValueError("at least one feature column required")

    pred_x = int(predict_from_logits(forward(net, x[None, :]).logits)[0])
    target = (1 - pred_x) if target_class is None else int(target_class)
    if pred_x == target:
        return CounterfactualResult(
            counterfactual=x.copy(),
            distance=0.0,
            flipped=True,
            generations_used=0,
            best_history=(),
        )

    rng = np.random.default_rng([cfg.seed, int(row_key)])
    pop = cfg.population_size
    n_num = len(numeric)
    n_cat = len(categorical)
    cat_sizes = np.array([m.width for m in categorical], dtype=np.int64)

    num_genes = rng.uniform(0.0, 1.0, size=(pop, n_num))
    cat_genes = (
        (rng.uniform(size=(pop, n_cat)) * cat_sizes).astype(np.int64)
        if n_cat
        else np.zeros((pop, 0), dtype=np.int64)
    )

    best_dist = math.inf
    best_row = None
    best_gen = 0
    history = []
    for gen in range(1, cfg.generations + 1):
        decoded = _decode(num_genes, cat_genes, columns, width)
        preds = predict_from_logits(forward(net, decoded).logits)
        dists = mixed_distance(x, decoded, columns)
        feasible = preds == target
        fitness = np.where(feasible, -dists, -math.inf)

        if feasible.any():
            i = int(np.flatnonzero(feasible)[dists[feasible].argmin()])
            if dists[i] < best_dist:
                best_dist = float(dists[i])
                best_row = decoded[i].copy()
                best_gen = gen
        history.append(best_dist)
        if gen == cfg.generations:
            break

        elite = np.argsort(-fitness, kind="stable")[: cfg.elitism_count]
        n_children = pop - cfg.elitism_count

        contenders = rng.integers(0, pop, size=(n_children, 2, cfg.tournament_size))
        winner_slot = fitness[contenders].argmax(axis=2)
        parents = np.take_along_axis(contenders, winner_slot[..., None], axis=2)[..., 0]
        p1, p2 = parents[:, 0], parents[:, 1]

        do_cross = rng.uniform(size=n_children) < cfg.crossover_rate
        num_pick = rng.uniform(size=(n_children, n_num)) < 0.5
        cat_pick = rng.uniform(size=(n_children, n_cat)) < 0.5
        child_num = np.where(do_cross[:, None] & num_pick, num_genes[p2], num_genes[p1])
        child_cat = np.where(do_cross[:, None] & cat_pick, cat_genes[p2], cat_genes[p1])

        num_mut = rng.uniform(size=(n_children, n_num)) < cfg.mutation_rate
        num_noise = rng.normal(0.0, cfg.mutation_scale, size=(n_children, n_num))
        child_num = np.clip(np.where(num_mut, child_num + num_noise, child_num), 0.0, 1.0)
        if n_cat:
            cat_mut = rng.uniform(size=(n_children, n_cat)) < cfg.mutation_rate
            cat_new = (rng.uniform(size=(n_children, n_cat)) * cat_sizes).astype(np.int64)
            child_cat = np.where(cat_mut, cat_new, child_cat)

        num_genes = np.vstack([num_genes[elite], child_num])
        cat_genes = np.vstack([cat_genes[elite], child_cat])

    if best_row is None:
        return CounterfactualResult(
            counterfactual=x.copy(),
            distance=math.inf,
            flipped=False,
            generations_used=cfg.generations,
            best_history=tuple(history),
        )
    return CounterfactualResult(
        counterfactual=best_row,
        distance=best_dist,
        flipped=True,
        generations_used=best_gen,
        best_history=tuple(history),
    )


def burden(
    net: Network,
    data: EncodedDataset,
    attribute: str,
    group: int,
    cfg: GAConfig,
    sample: int | None = None,
) -> GroupBurden:
    """Mean counterfactual distance over a group's negatively predicted rows.

    ``sample`` caps how many rows are searched (a seeded, sorted subsample);
    each row keeps a stream keyed by its index in the full dataset, so the
    same row always searches identically.
    """
    ids = np.asarray(data.groups[attribute])
    members = np.flatnonzero(ids == group)
    if members.size:
        preds = predict_from_logits(forward(net, data.features[members]).logits)
        negative = members[preds == 0]
    else:
        negative = members
    if negative.size == 0:
        return GroupBurden(value=0.0, n_negative=0, n_flipped=0, n_unflipped=0, flagged=True)

    if sample is not None and negative.size > sample:
        pick_rng = np.random.default_rng([cfg.seed, 7700 + group])
        keep = pick_rng.choice(negative.size, size=sample, replace=False)
        negative = negative[np.sort(keep)]

    distances = []
    unflipped = 0
    for i in negative:
        result = find_counterfactual(
            net, data.features[i], data.columns, cfg, target_class=1, row_key=int(i)
        )
        if result.flipped:
            distances.append(result.distance)
        else:
            unflipped += 1
    if not distances:
        return GroupBurden(
            value=0.0,
            n_negative=int(negative.size),
            n_flipped=0,
            n_unflipped=unflipped,
            flagged=True,
        )
    return GroupBurden(
        value=float(np.mean(distances)),
        n_negative=int(negative.size),
        n_flipped=len(distances),
        n_unflipped=unflipped,
        flagged=False,
    )


def delta_burden(
    net: Network,
    data: EncodedDataset,
    attribute: str,
    cfg: GAConfig,
    sample: int | None = None,
) -> BurdenGap:
    """Burden gap between groups a and b for one protected attribute."""
    a = burden(net, data, attribute, 0, cfg, sample=sample)
    b = burden(net, data, attribute, 1, cfg, sample=sample)
    delta = None if (a.flagged or b.flagged) else abs(a.value - b.value)
    return BurdenGap(delta=delta, burden_a=a, burden_b=b)
