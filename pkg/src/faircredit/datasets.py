"""Dataset ingestion: load, binarize, one-hot encode, split, standardize.

Schemas live in small YAML files (one per dataset, shipped under
faircredit/configs) naming the feature columns, the outcome mapping and
the protected-group rules.  Loaded datasets are immutable numpy arrays:
features X, labels y in {-1,+1} and named sensitive vectors z in {0,1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from .errors import DataError, DegenerateGroupError, DegenerateSplitError, SchemaError


@dataclass(frozen=True)
class ProtectedGroupRule:
    """Maps a raw column to z in {0,1}; z=0 is the protected group.

    kind "category-equals": rows equal to `protected_value` are protected
    (or, when `nonprotected_value` is given instead, rows equal to it are
    non-protected and everything else is protected).
    kind "numeric-range": rows inside [lo, hi] (inclusive) are NON-protected.
    """

    kind: str
    protected_value: object = None
    nonprotected_value: object = None
    lo: float = None
    hi: float = None

    def apply(self, values: pd.Series) -> np.ndarray:
        if self.kind == "category-equals":
            stripped = values.astype(str).str.strip()
            if self.protected_value is not None:
                return np.where(stripped == str(self.protected_value), 0, 1)
            if self.nonprotected_value is not None:
                return np.where(stripped == str(self.nonprotected_value), 1, 0)
            raise SchemaError("category-equals rule needs a protected or nonprotected value")
        if self.kind == "numeric-range":
            v = pd.to_numeric(values, errors="coerce")
            if v.isna().any():
                raise DataError(f"non-numeric value in range-rule column at row {int(v.index[v.isna()][0])}")
            return np.where((v >= self.lo) & (v <= self.hi), 1, 0)
        raise SchemaError(f"unknown protected-group rule kind {self.kind!r}")


@dataclass(frozen=True)
class SensitiveSpec:
    name: str
    column: str
    rule: ProtectedGroupRule
    protected_label: str = "protected"
    nonprotected_label: str = "non-protected"


@dataclass(frozen=True)
class OutcomeRule:
    column: str
    positive: tuple
    negative: tuple
    positive_label: str = "positive"
    negative_label: str = "negative"


@dataclass(frozen=True)
class DatasetSchema:
    name: str
    numeric_features: tuple
    categorical_features: tuple
    outcome: OutcomeRule
    sensitive_specs: tuple
    delimiter: str = ","
    na_values: tuple = ("?",)

    def __post_init__(self):
        if not (self.numeric_features or self.categorical_features):
            raise SchemaError("feature column list is empty")
        names = [s.name for s in self.sensitive_specs]
        if len(names) != len(set(names)):
            raise SchemaError("duplicate sensitive attribute name")
        cols = [s.column for s in self.sensitive_specs]
        if len(cols) != len(set(cols)):
            raise SchemaError("sensitive column used more than once")

    @property
    def feature_columns(self):
        return tuple(self.numeric_features) + tuple(self.categorical_features)


def load_schema(path) -> DatasetSchema:
    raw = yaml.safe_load(Path(path).read_text())
    try:
        out = raw["outcome"]
        sens = []
        for s in raw["sensitive"]:
            r = s["rule"]
            if r["kind"] == "numeric-range":
                rule = ProtectedGroupRule(kind=r["kind"], lo=float(r["lo"]), hi=float(r["hi"]))
            else:
                rule = ProtectedGroupRule(kind=r["kind"], protected_value=r.get("protected"),
                                          nonprotected_value=r.get("nonprotected"))
            sens.append(
                SensitiveSpec(
                    name=s["name"],
                    column=s["column"],
                    rule=rule,
                    protected_label=s.get("protected_label", "protected"),
                    nonprotected_label=s.get("nonprotected_label", "non-protected"),
                )
            )
        return DatasetSchema(
            name=raw["name"],
            numeric_features=tuple(raw.get("numeric_features", ())),
            categorical_features=tuple(raw.get("categorical_features", ())),
            outcome=OutcomeRule(
                column=out["column"],
                positive=tuple(out["positive"]),
                negative=tuple(out["negative"]),
                positive_label=out.get("positive_label", "positive"),
                negative_label=out.get("negative_label", "negative"),
            ),
            sensitive_specs=tuple(sens),
            delimiter=raw.get("delimiter", ","),
            na_values=tuple(raw.get("na_values", ("?",))),
        )
    except KeyError as e:
        raise SchemaError(f"schema file {path} is missing key {e}") from None


@dataclass(frozen=True)
class Dataset:
    """Canonical in-memory form; immutable and shareable across runs."""

    X: np.ndarray
    y: np.ndarray
    z_attrs: dict
    feature_names: tuple
    schema: DatasetSchema = None
    dropped_count: int = 0

    def __post_init__(self):
        n = len(self.y)
        if self.X.shape[0] != n:
            raise DataError("X row count does not match y")
        for name, z in self.z_attrs.items():
            if len(z) != n:
                raise DataError(f"sensitive vector {name!r} length mismatch")
        if not np.isfinite(self.X).all():
            raise DataError("non-finite feature values")

    @property
    def row_count(self) -> int:
        return len(self.y)

    def sensitive(self, name: str) -> np.ndarray:
        if name not in self.z_attrs:
            raise DataError(f"unknown sensitive attribute {name!r}")
        return self.z_attrs[name]

    def take(self, idx) -> "Dataset":
        return Dataset(
            X=self.X[idx],
            y=self.y[idx],
            z_attrs={k: v[idx] for k, v in self.z_attrs.items()},
            feature_names=self.feature_names,
            schema=self.schema,
            dropped_count=0,
        )


def _check_groups(ds: Dataset, error_cls=DegenerateGroupError):
    for name, z in ds.z_attrs.items():
        if len(np.unique(z)) < 2:
            raise error_cls(f"sensitive attribute {name!r} is single-valued")


def load_dataset(path, schema: DatasetSchema, drop_sensitive: bool = False) -> Dataset:
    """Read a delimited file with header into the canonical Dataset form.

    Rows with missing values in any used column are dropped; categorical
    features are one-hot encoded with the first category dropped.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    df = pd.read_csv(path, sep=schema.delimiter, na_values=list(schema.na_values),
                     skipinitialspace=True)
    used = list(schema.feature_columns) + [schema.outcome.column] + [s.column for s in schema.sensitive_specs]
    for col in dict.fromkeys(used):
        if col not in df.columns:
            raise SchemaError(f"{schema.name}: column {col!r} not found in {path.name}")
    before = len(df)
    df = df.dropna(subset=list(dict.fromkeys(used))).reset_index(drop=True)
    dropped = before - len(df)

    raw_outcomes = df[schema.outcome.column]
    str_out = raw_outcomes.astype(str).str.strip()
    pos = {str(v) for v in schema.outcome.positive}
    neg = {str(v) for v in schema.outcome.negative}
    unmapped = ~(str_out.isin(pos) | str_out.isin(neg))
    if unmapped.any():
        row = int(np.argmax(unmapped.to_numpy()))
        raise DataError(f"{schema.name}: outcome value {raw_outcomes.iloc[row]!r} at row {row} "
                        "is outside the schema mapping")
    y = np.where(str_out.isin(pos), 1, -1).astype(np.int64)

    z_attrs = {}
    for s in schema.sensitive_specs:
        z = s.rule.apply(df[s.column]).astype(np.int64)
        z_attrs[s.name] = z

    feature_cols = list(schema.feature_columns)
    if drop_sensitive:
        sensitive_cols = {s.column for s in schema.sensitive_specs}
        feature_cols = [c for c in feature_cols if c not in sensitive_cols]
        if not feature_cols:
            raise SchemaError("dropping sensitive columns leaves no features")

    blocks, names = [], []
    for col in feature_cols:
        if col in schema.categorical_features:
            dummies = pd.get_dummies(df[col].astype(str).str.strip(), prefix=col, prefix_sep="=",
                                     drop_first=True)
            blocks.append(dummies.to_numpy(dtype=float))
            names.extend(dummies.columns)
        else:
            v = pd.to_numeric(df[col], errors="coerce")
            if v.isna().any():
                raise DataError(f"{schema.name}: non-numeric value in numeric column {col!r}")
            blocks.append(v.to_numpy(dtype=float)[:, None])
            names.append(col)
    X = np.hstack(blocks)

    ds = Dataset(X=X, y=y, z_attrs=z_attrs, feature_names=tuple(names),
                 schema=schema, dropped_count=dropped)
    _check_groups(ds)
    return ds


@dataclass(frozen=True)
class GroupOutcomeTable:
    """Counts and row-percentages of outcomes per protected group."""

    attr_name: str
    group_labels: tuple      # (protected, non-protected)
    outcome_labels: tuple    # (negative, positive)
    counts: np.ndarray       # shape (2, 2): [group z][outcome: 0=neg, 1=pos]

    def __post_init__(self):
        if self.counts.shape != (2, 2) or (self.counts < 0).any():
            raise DataError("counts must be a non-negative 2x2 table")

    def group_total(self, g: int) -> int:
        return int(self.counts[g].sum())

    def total(self) -> int:
        return int(self.counts.sum())

    def percentage(self, g: int, outcome: int) -> float:
        t = self.group_total(g)
        return 100.0 * self.counts[g, outcome] / t if t else 0.0

    def to_rows(self):
        """Rows keyed for CSV/text output; group 1 (non-protected) first."""
        rows = []
        for g, label in ((1, self.group_labels[1]), (0, self.group_labels[0])):
            rows.append({
                "group": label,
                f"{self.outcome_labels[0]}_count": int(self.counts[g, 0]),
                f"{self.outcome_labels[0]}_pct": round(self.percentage(g, 0), 2),
                f"{self.outcome_labels[1]}_count": int(self.counts[g, 1]),
                f"{self.outcome_labels[1]}_pct": round(self.percentage(g, 1), 2),
                "total": self.group_total(g),
            })
        rows.append({
            "group": "total",
            f"{self.outcome_labels[0]}_count": int(self.counts[:, 0].sum()),
            f"{self.outcome_labels[0]}_pct": round(100.0 * self.counts[:, 0].sum() / self.total(), 2),
            f"{self.outcome_labels[1]}_count": int(self.counts[:, 1].sum()),
            f"{self.outcome_labels[1]}_pct": round(100.0 * self.counts[:, 1].sum() / self.total(), 2),
            "total": self.total(),
        })
        return rows

    def to_text(self) -> str:
        rows = self.to_rows()
        headers = list(rows[0].keys())
        widths = [max(len(h), *(len(str(r[h])) for r in rows)) for h in headers]
        lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
        for r in rows:
            lines.append("  ".join(str(r[h]).ljust(w) for h, w in zip(headers, widths)))
        return "\n".join(lines)


def summarize(ds: Dataset, attr_name: str) -> GroupOutcomeTable:
    z = ds.sensitive(attr_name)
    counts = np.zeros((2, 2), dtype=np.int64)
    for g in (0, 1):
        for outcome, label in ((0, -1), (1, 1)):
            counts[g, outcome] = np.count_nonzero((z == g) & (ds.y == label))
    spec = None
    if ds.schema is not None:
        spec = next((s for s in ds.schema.sensitive_specs if s.name == attr_name), None)
    group_labels = (spec.protected_label, spec.nonprotected_label) if spec else ("protected", "non-protected")
    if ds.schema is not None:
        outcome_labels = (ds.schema.outcome.negative_label, ds.schema.outcome.positive_label)
    else:
        outcome_labels = ("negative", "positive")
    return GroupOutcomeTable(attr_name=attr_name, group_labels=group_labels,
                             outcome_labels=outcome_labels, counts=counts)


def split(ds: Dataset, train_fraction: float, seed: int):
    """Seeded uniform permutation; first floor(fraction*n) rows become train."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    n = ds.row_count
    perm = np.random.default_rng(seed).permutation(n)
    n_train = math.floor(train_fraction * n)
    if n_train == 0 or n_train == n:
        raise DegenerateSplitError("split leaves one side empty")
    train = ds.take(perm[:n_train])
    test = ds.take(perm[n_train:])
    for part, label in ((train, "train"), (test, "test")):
        try:
            _check_groups(part)
        except DegenerateGroupError as e:
            raise DegenerateSplitError(f"{label} side: {e}") from None
    return train, test


def standardize(train: Dataset, test: Dataset):
    """Z-score both parts using mean/sd fit on train only.

    Zero-variance columns are centered but left unscaled.
    """
    mean = train.X.mean(axis=0)
    sd = train.X.std(axis=0)
    scale = np.where(sd < 1e-12, 1.0, sd)
    def apply(ds):
        return Dataset(X=(ds.X - mean) / scale, y=ds.y, z_attrs=ds.z_attrs,
                       feature_names=ds.feature_names, schema=ds.schema,
                       dropped_count=ds.dropped_count)
    return apply(train), apply(test)


def subsample(ds: Dataset, factor: int, seed: int) -> Dataset:
    """Uniform sample without replacement of ceil(n/factor) rows, order kept."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if factor == 1:
        return ds
    k = math.ceil(ds.row_count / factor)
    idx = np.sort(np.random.default_rng(seed).choice(ds.row_count, size=k, replace=False))
    sub = ds.take(idx)
    _check_groups(sub)
    return sub
