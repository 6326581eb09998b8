"""Tabular dataset handling: declarative specs, CSV ingest, encoding, and
synthetic fixtures.

A dataset spec (YAML) declares the label rule, protected attributes,
numeric/categorical feature columns, file locations, and declared split
sizes. Encoding is fit on the training split only: numerics are min-max
scaled by train statistics, categoricals one-hot over train levels. Test
rows may therefore fall outside [0, 1] (left unclipped by default) or carry
unseen levels (encoded as an all-zero block and counted).
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

__all__ = [
    "DataError",
    "SizeMismatchError",
    "ColumnMeta",
    "EncodedDataset",
    "AttributeSpec",
    "DatasetSpec",
    "load_spec",
    "load_and_encode",
    "make_synthetic",
    "make_synthetic_pair",
    "synthetic_frame",
]

log = logging.getLogger(__name__)

DATA_DIR_ENV = "FAIRMARGIN_DATA"

SYNTHETIC_KINDS = ("separable", "group_symmetric", "group_biased")
_KIND_TAGS = {kind: i + 1 for i, kind in enumerate(SYNTHETIC_KINDS)}

_RULE_OPS = ("in", "eq", "gt", "ge", "lt", "le")


class DataError(ValueError):
    pass


class SizeMismatchError(DataError):
    """A split has fewer rows than its declared size."""


@dataclass(frozen=True)
class ColumnMeta:
    """Where one raw column landed in the encoded matrix.

    Numeric columns record their train min/max; categorical columns record
    the ordered train levels (one encoded column each).
    """

    name: str
    kind: str
    start: int
    width: int
    vmin: float = 0.0
    vmax: float = 0.0
    levels: tuple[str, ...] = ()


@dataclass(frozen=True)
class EncodedDataset:
    """One encoded split: float64 features, 0/1 labels, group ids per
    protected attribute, and the column layout that produced the matrix."""

    name: str
    features: np.ndarray
    labels: np.ndarray
    groups: dict
    columns: tuple[ColumnMeta, ...]
    notes: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def width(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class AttributeSpec:
    """A protected attribute: group a (id 0) is where the rule holds."""

    name: str
    column: str
    privileged: dict


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    label_column: str
    positive_rule: dict
    protected: tuple[AttributeSpec, ...]
    numeric_columns: tuple[str, ...]
    categorical_columns: tuple[str, ...]
    train_csv: str | None = None
    test_csv: str | None = None
    csv_path: str | None = None
    train_size: int | None = None
    test_size: int | None = None
    split_seed: int = 0
    missing_markers: tuple[str, ...] = ()
    clip_test: bool = False
    learning_rate: float | None = None
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self):
        numeric = set(self.numeric_columns)
        categorical = set(self.categorical_columns)
        if numeric & categorical:
            raise DataError(f"columns declared both numeric and categorical: {sorted(numeric & categorical)}")
        if not (numeric or categorical):
            raise DataError("at least one feature column required")
        if self.label_column in numeric | categorical:
            raise DataError(f"label column {self.label_column!r} cannot be a feature")
        if not self.protected:
            raise DataError("at least one protected attribute required")
        _check_rule(self.positive_rule)
        for attr in self.protected:
            _check_rule(attr.privileged)
        single = self.csv_path is not None
        two = self.train_csv is not None or self.test_csv is not None
        if single == two:
            raise DataError("declare either csv_path or train_csv+test_csv, not both")
        if two and (self.train_csv is None or self.test_csv is None):
            raise DataError("train_csv and test_csv must be declared together")
        if single and (self.train_size is None or self.test_size is None):
            raise DataError("single-file specs need train_size and test_size")
        for size in (self.train_size, self.test_size):
            if size is not None and size <= 0:
                raise DataError(f"declared sizes must be positive, got {size}")

    @property
    def feature_columns(self) -> tuple[str, ...]:
        return tuple(self.numeric_columns) + tuple(self.categorical_columns)

    @property
    def used_columns(self) -> tuple[str, ...]:
        extra = [a.column for a in self.protected if a.column not in self.feature_columns]
        return self.feature_columns + tuple(extra) + (self.label_column,)


def _check_rule(rule) -> None:
    if not isinstance(rule, dict) or len(rule) != 1:
        raise DataError(f"a rule is a single-key mapping over {_RULE_OPS}, got {rule!r}")
    op = next(iter(rule))
    if op not in _RULE_OPS:
        raise DataError(f"unknown rule operator {op!r}")
    if op == "in" and not isinstance(rule[op], (list, tuple)):
        raise DataError("'in' rule takes a list of values")


def _apply_rule(series: pd.Series, rule: dict) -> np.ndarray:
    """Boolean mask of rows matching a declarative rule.

    String comparisons strip surrounding whitespace; ordering comparisons
    coerce the column to float.
    """
    op, arg = next(iter(rule.items()))
    if op == "in":
        values = {str(v).strip() for v in arg}
        return series.astype(str).str.strip().isin(values).to_numpy()
    if op == "eq":
        if isinstance(arg, str):
            return (series.astype(str).str.strip() == arg.strip()).to_numpy()
        return (pd.to_numeric(series, errors="coerce") == arg).to_numpy()
    numeric = pd.to_numeric(series, errors="coerce")
    if numeric.isna().any():
        raise DataError(f"rule {rule!r} needs a numeric column")
    comparisons = {"gt": numeric > arg, "ge": numeric >= arg,
                   "lt": numeric < arg, "le": numeric <= arg}
    return comparisons[op].to_numpy()


def load_spec(path) -> DatasetSpec:
    """Parse a YAML dataset spec; relative CSV paths resolve against the
    spec file's directory (or the FAIRMARGIN_DATA override at load time)."""
    path = Path(path)
    doc = yaml.safe_load(path.read_text())
    if not isinstance(doc, dict):
        raise DataError(f"{path} is not a mapping")
    try:
        protected = tuple(
            AttributeSpec(name=p["name"], column=p["column"], privileged=p["privileged"])
            for p in doc["protected"]
        )
        return DatasetSpec(
            name=doc["name"],
            label_column=doc["label_column"],
            positive_rule=doc["positive_rule"],
            protected=protected,
            numeric_columns=tuple(doc.get("numeric_columns", ())),
            categorical_columns=tuple(doc.get("categorical_columns", ())),
            train_csv=doc.get("train_csv"),
            test_csv=doc.get("test_csv"),
            csv_path=doc.get("csv_path"),
            train_size=doc.get("train_size"),
            test_size=doc.get("test_size"),
            split_seed=int(doc.get("split_seed", 0)),
            missing_markers=tuple(doc.get("missing_markers", ())),
            clip_test=bool(doc.get("clip_test", False)),
            learning_rate=doc.get("learning_rate"),
            base_dir=path.parent,
        )
    except KeyError as exc:
        raise DataError(f"{path} is missing required key {exc}") from exc


def _resolve(spec: DatasetSpec, rel: str, data_dir) -> Path:
    p = Path(rel)
    if p.is_absolute():
        return p
    if data_dir is not None:
        return Path(data_dir) / p
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env) / p
    return spec.base_dir / p


def _read_csv(spec: DatasetSpec, path: Path) -> pd.DataFrame:
    if not path.exists():
        raise DataError(
            f"dataset file {path} not found; see the README for how to fetch "
            f"and prepare the {spec.name!r} data"
        )
    df = pd.read_csv(path, skipinitialspace=True)
    missing = [c for c in spec.used_columns if c not in df.columns]
    if missing:
        raise DataError(f"{path} lacks declared columns {missing}")
    return df


def _drop_missing(spec: DatasetSpec, df: pd.DataFrame) -> tuple[pd.DataFrame, int]:
    used = list(spec.used_columns)
    bad = df[used].isna().any(axis=1)
    if spec.missing_markers:
        markers = {str(m).strip() for m in spec.missing_markers}
        for col in used:
            bad |= df[col].astype(str).str.strip().isin(markers)
    return df[~bad].reset_index(drop=True), int(bad.sum())


def _truncate(df: pd.DataFrame, declared: int | None, split: str, notes: list) -> pd.DataFrame:
    if declared is None:
        return df
    if len(df) < declared:
        raise SizeMismatchError(
            f"{split} split has {len(df)} rows, fewer than the declared {declared}"
        )
    if len(df) > declared:
        notes.append(f"{split}_truncated_from={len(df)}")
        return df.iloc[:declared].reset_index(drop=True)
    return df


def _fit_stats(spec: DatasetSpec, train: pd.DataFrame) -> tuple[ColumnMeta, ...]:
    metas = []
    start = 0
    for name in spec.numeric_columns:
        col = pd.to_numeric(train[name], errors="coerce")
        if col.isna().any():
            raise DataError(f"numeric column {name!r} has non-numeric values")
        metas.append(ColumnMeta(name=name, kind="numeric", start=start, width=1,
                                vmin=float(col.min()), vmax=float(col.max())))
        start += 1
    for name in spec.categorical_columns:
        levels = tuple(sorted(train[name].astype(str).str.strip().unique()))
        metas.append(ColumnMeta(name=name, kind="categorical", start=start,
                                width=len(levels), levels=levels))
        start += len(levels)
    return tuple(metas)


def _encode_frame(spec: DatasetSpec, df: pd.DataFrame, metas: tuple[ColumnMeta, ...],
                  clip: bool) -> tuple[np.ndarray, int]:
    n = len(df)
    width = sum(m.width for m in metas)
    out = np.zeros((n, width))
    unknown = 0
    for meta in metas:
        if meta.kind == "numeric":
            col = pd.to_numeric(df[meta.name], errors="coerce")
            if col.isna().any():
                raise DataError(f"numeric column {meta.name!r} has non-numeric values")
            span = meta.vmax - meta.vmin
            if span == 0.0:
                scaled = np.zeros(n)
            else:
                scaled = (col.to_numpy(dtype=np.float64) - meta.vmin) / span
                if clip:
                    scaled = np.clip(scaled, 0.0, 1.0)
            out[:, meta.start] = scaled
        else:
            values = df[meta.name].astype(str).str.strip().to_numpy()
            index = {level: i for i, level in enumerate(meta.levels)}
            for r, v in enumerate(values):
                i = index.get(v)
                if i is None:
                    unknown += 1
                else:
                    out[r, meta.start + i] = 1.0
    return out, unknown


def _build_split(spec: DatasetSpec, df: pd.DataFrame, metas, split: str,
                 notes: list) -> EncodedDataset:
    clip = spec.clip_test and split == "test"
    features, unknown = _encode_frame(spec, df, metas, clip)
    if unknown:
        notes.append(f"{split}_unknown_levels={unknown}")
    labels = _apply_rule(df[spec.label_column], spec.positive_rule).astype(np.int64)
    groups = {}
    for attr in spec.protected:
        privileged = _apply_rule(df[attr.column], attr.privileged)
        groups[attr.name] = np.where(privileged, 0, 1).astype(np.int64)
    for meta in metas:
        if meta.kind == "numeric" and meta.vmax == meta.vmin:
            notes.append(f"constant_column={meta.name}")
    return EncodedDataset(
        name=spec.name,
        features=features,
        labels=labels,
        groups=groups,
        columns=metas,
        notes=tuple(notes),
    )


def load_and_encode(spec: DatasetSpec, data_dir=None) -> tuple[EncodedDataset, EncodedDataset]:
    """Read, clean, split, and encode a dataset per its spec.

    Returns (train, test). Cleaning drops (and counts, in ``notes``) rows
    with missing values in used columns; declared sizes are enforced by
    deterministic truncation, and a short split raises SizeMismatchError.
    """
    if spec.csv_path is not None:
        df = _read_csv(spec, _resolve(spec, spec.csv_path, data_dir))
        df, dropped = _drop_missing(spec, df)
        need = spec.train_size + spec.test_size
        if len(df) < need:
            raise SizeMismatchError(
                f"{spec.name} has {len(df)} usable rows, fewer than the declared "
                f"{spec.train_size}+{spec.test_size}"
            )
        order = np.random.default_rng(spec.split_seed).permutation(len(df))
        train_df = df.iloc[order[: spec.train_size]].reset_index(drop=True)
        test_df = df.iloc[order[spec.train_size : need]].reset_index(drop=True)
        train_notes = [f"dropped_missing={dropped}"] if dropped else []
        test_notes = list(train_notes)
        if len(df) > need:
            train_notes.append(f"unused_rows={len(df) - need}")
    else:
        train_df = _read_csv(spec, _resolve(spec, spec.train_csv, data_dir))
        test_df = _read_csv(spec, _resolve(spec, spec.test_csv, data_dir))
        train_notes: list = []
        test_notes: list = []
        train_df, dropped_train = _drop_missing(spec, train_df)
        test_df, dropped_test = _drop_missing(spec, test_df)
        if dropped_train:
            train_notes.append(f"dropped_missing={dropped_train}")
        if dropped_test:
            test_notes.append(f"dropped_missing={dropped_test}")
        train_df = _truncate(train_df, spec.train_size, "train", train_notes)
        test_df = _truncate(test_df, spec.test_size, "test", test_notes)

    for name, df_ in (("train", train_df), ("test", test_df)):
        if len(df_) == 0:
            raise DataError(f"{spec.name} {name} split is empty")

    metas = _fit_stats(spec, train_df)
    train = _build_split(spec, train_df, metas, "train", train_notes)
    test = _build_split(spec, test_df, metas, "test", test_notes)
    for ds in (train, test):
        for note in ds.notes:
            log.info("%s: %s", spec.name, note)
    return train, test


def _synthetic_raw(kind: str, n: int, seed: int):
    """Common scaffolding: balanced labels and groups, x in [0, 1]^2."""
    if kind not in SYNTHETIC_KINDS:
        raise DataError(f"unknown synthetic kind {kind!r}, expected one of {SYNTHETIC_KINDS}")
    if n < 4 or n % 2:
        raise DataError(f"synthetic datasets need an even n >= 4, got {n}")
    rng = np.random.default_rng([seed, _KIND_TAGS[kind]])
    labels = np.repeat([0, 1], n // 2)
    rng.shuffle(labels)
    groups = np.repeat([0, 1], n // 2)
    rng.shuffle(groups)

    x0 = np.empty(n)
    neg = labels == 0
    pos = labels == 1
    if kind == "separable":
        x0[neg] = rng.uniform(0.05, 0.45, neg.sum())
        x0[pos] = rng.uniform(0.55, 0.95, pos.sum())
    else:
        x0[neg] = rng.normal(0.35, 0.1, neg.sum())
        x0[pos] = rng.normal(0.65, 0.1, pos.sum())
        if kind == "group_biased":
            # one group's rejected rows sit deeper on the negative side
            shift = neg & (groups == 1)
            x0[shift] -= 0.15
        x0 = np.clip(x0, 0.0, 1.0)
    x1 = rng.uniform(0.0, 1.0, n)
    return np.column_stack([x0, x1]), labels, groups


def make_synthetic(kind: str, n: int, seed: int) -> EncodedDataset:
    """Deterministic two-feature dataset, already encoded.

    Kinds: ``separable`` (disjoint class intervals on x0),
    ``group_symmetric`` (overlapping classes, group independent of
    everything), ``group_biased`` (one group's negative rows pushed away
    from the boundary, planting a recourse gap).
    """
    features, labels, groups = _synthetic_raw(kind, n, seed)
    columns = (
        ColumnMeta(name="x0", kind="numeric", start=0, width=1, vmin=0.0, vmax=1.0),
        ColumnMeta(name="x1", kind="numeric", start=1, width=1, vmin=0.0, vmax=1.0),
    )
    return EncodedDataset(
        name=f"synthetic-{kind}",
        features=features,
        labels=labels,
        groups={"group": groups},
        columns=columns,
    )


def make_synthetic_pair(kind: str, n_train: int, n_test: int, seed: int):
    """Train/test splits drawn from the same construction, disjoint streams."""
    return make_synthetic(kind, n_train, seed), make_synthetic(kind, n_test, seed + 1)


def synthetic_frame(kind: str, n: int, seed: int) -> pd.DataFrame:
    """Raw (unencoded) view of make_synthetic for writing demo CSVs."""
    features, labels, groups = _synthetic_raw(kind, n, seed)
    return pd.DataFrame({
        "x0": features[:, 0],
        "x1": features[:, 1],
        "group": np.where(groups == 0, "a", "b"),
        "label": labels,
    })
