"""Shared fixtures and independent oracles used across the test modules."""

import numpy as np
import pandas as pd
import pytest

from faircredit.datasets import (
    Dataset,
    DatasetSchema,
    OutcomeRule,
    ProtectedGroupRule,
    SensitiveSpec,
    load_dataset,
)

DATA_DIR_CANDIDATES = ("data",)


def monte_carlo_hypervolume(points, ref, n_samples=1_000_000, seed=0):
    """Estimate the dominated volume below ``ref`` by uniform sampling.

    Independent of the exact sweep/recursion code: samples are drawn in the
    box [min(points), ref] and a sample counts when some point dominates it.
    """
    pts = np.asarray(points, dtype=float)
    ref = np.asarray(ref, dtype=float)
    lo = pts.min(axis=0)
    box = np.prod(ref - lo)
    rng = np.random.default_rng(seed)
    samples = rng.uniform(lo, ref, size=(n_samples, len(ref)))
    hit = np.zeros(n_samples, dtype=bool)
    for p in pts:
        hit |= (samples >= p).all(axis=1)
    return box * hit.mean()


def brute_force_fronts(points):
    """Reference nondominated sort: repeated scan with scalar comparisons."""
    pts = [list(map(float, p)) for p in points]
    remaining = set(range(len(pts)))
    fronts = []
    while remaining:
        front = []
        for i in remaining:
            dominated = False
            for j in remaining:
                if j == i:
                    continue
                if all(a <= b for a, b in zip(pts[j], pts[i])) and any(
                    a < b for a, b in zip(pts[j], pts[i])
                ):
                    dominated = True
                    break
            if not dominated:
                front.append(i)
        fronts.append(sorted(front))
        remaining -= set(front)
    return fronts


def make_synthetic_frame(n=400, seed=7, bias=2.0, n_attrs=1):
    """Credit-style frame with a controllable dependence between z and y."""
    rng = np.random.default_rng(seed)
    z = rng.integers(0, 2, size=(n, n_attrs))
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    score = 1.2 * x1 - 0.8 * x2 + bias * (z[:, 0] - 0.5) + rng.normal(scale=0.6, size=n)
    frame = pd.DataFrame(
        {
            "amount": np.round(np.exp(x1) * 1_000, 2),
            "duration": np.round(12 + 6 * x2, 1),
            "purpose": rng.choice(["car", "furniture", "repairs"], size=n),
            "outcome": np.where(score > 0, "good", "bad"),
        }
    )
    frame["gender"] = np.where(z[:, 0] == 1, "male", "female")
    if n_attrs > 1:
        frame["age"] = np.where(z[:, 1] == 1, 40, 22)
    return frame


def make_synthetic_schema(n_attrs=1):
    sensitive = [
        SensitiveSpec(
            name="gender",
            column="gender",
            rule=ProtectedGroupRule(kind="category-equals", protected_value="female"),
            protected_label="female",
            nonprotected_label="male",
        )
    ]
    if n_attrs > 1:
        sensitive.append(
            SensitiveSpec(
                name="age",
                column="age",
                rule=ProtectedGroupRule(kind="numeric-range", lo=25, hi=60),
                protected_label="under 25 or over 60",
                nonprotected_label="25 to 60",
            )
        )
    return DatasetSchema(
        name="synthetic",
        numeric_features=("amount", "duration"),
        categorical_features=("purpose",),
        outcome=OutcomeRule(
            column="outcome",
            positive=("good",),
            negative=("bad",),
            positive_label="good",
            negative_label="bad",
        ),
        sensitive_specs=tuple(sensitive),
    )


def make_synthetic_dataset(tmp_path, n=400, seed=7, bias=2.0, n_attrs=1) -> Dataset:
    frame = make_synthetic_frame(n=n, seed=seed, bias=bias, n_attrs=n_attrs)
    path = tmp_path / "synthetic.csv"
    frame.to_csv(path, index=False)
    return load_dataset(path, make_synthetic_schema(n_attrs=n_attrs))


@pytest.fixture
def synthetic_dataset(tmp_path):
    return make_synthetic_dataset(tmp_path)


@pytest.fixture
def synthetic_dataset_two_attrs(tmp_path):
    return make_synthetic_dataset(tmp_path, n_attrs=2)
