"""Study orchestration: seeded runs, feasibility filtering, aggregation.

A study performs n independent seeded runs.  Each run re-splits the
dataset, trains the unconstrained logistic baseline (used to warm-start
the optimizer), evolves a Pareto archive over the configured objective
vector, and persists a per-run record.  The eight bias-objective
combinations are evaluated afterwards by filtering each run's archive.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datasets import Dataset, split, standardize
from .errors import DataError
from .metrics import BiasMeasureId, bias_vector
from .model import LinearModel, TrainConfig, predict, train_logistic_baseline
from .moea import EAConfig, run as ea_run

MEASURE_ORDER = (BiasMeasureId.DI, BiasMeasureId.EO, BiasMeasureId.DM_OMR)

# combo id -> bias measures whose thresholds must be met
COMBOS = {
    1: (),
    2: (BiasMeasureId.DI,),
    3: (BiasMeasureId.EO,),
    4: (BiasMeasureId.DM_OMR,),
    5: (BiasMeasureId.DI, BiasMeasureId.EO),
    6: (BiasMeasureId.DI, BiasMeasureId.DM_OMR),
    7: (BiasMeasureId.EO, BiasMeasureId.DM_OMR),
    8: (BiasMeasureId.DI, BiasMeasureId.EO, BiasMeasureId.DM_OMR),
}


@dataclass(frozen=True)
class BiasSpec:
    """Which bias measures and attributes form the objective vector."""

    measures: tuple = MEASURE_ORDER
    attributes: tuple = ()
    collapse: bool = False
    threshold: float = 0.01

    def __post_init__(self):
        if not self.attributes:
            raise DataError("need at least one sensitive attribute")
        if len(self.attributes) > 2:
            raise DataError("at most two sensitive attributes are supported")
        if self.collapse and len(self.attributes) != 2:
            raise DataError("collapse requires exactly two attributes")
        if not 0 < self.threshold <= 1:
            raise DataError("threshold must be in (0, 1]")
        for m in self.measures:
            if m not in MEASURE_ORDER:
                raise DataError(f"measure {m} not usable as an objective")

    @property
    def n_objectives(self) -> int:
        per_measure = 1 if (self.collapse or len(self.attributes) == 1) else len(self.attributes)
        return 1 + len(self.measures) * per_measure

    def component_indices(self, measure: BiasMeasureId) -> list[int]:
        """Objective-vector indices carrying this measure (excludes index 0)."""
        if measure not in self.measures:
            raise DataError(f"measure {measure} is not part of this spec")
        per_measure = 1 if (self.collapse or len(self.attributes) == 1) else len(self.attributes)
        pos = self.measures.index(measure)
        start = 1 + pos * per_measure
        return list(range(start, start + per_measure))


def objective_names(spec: BiasSpec) -> list[str]:
    """Column labels matching the objective-vector layout."""
    names = ["error_rate"]
    for m in spec.measures:
        if spec.collapse:
            names.append(f"{m.value}:max({','.join(spec.attributes)})")
        else:
            names.extend(f"{m.value}:{a}" for a in spec.attributes)
    return names


def build_problem(dataset: Dataset, spec: BiasSpec):
    """Map a flattened (w, b) search vector to the minimization objectives."""
    for a in spec.attributes:
        dataset.sensitive(a)  # raises on unknown attribute
    X, y = dataset.X, dataset.y
    z_attrs = {a: dataset.z_attrs[a] for a in spec.attributes}
    dim = X.shape[1] + 1

    def problem(x):
        x = np.asarray(x, dtype=float)
        m = LinearModel(w=x[:-1], b=float(x[-1]))
        yhat = predict(m, X)
        if spec.measures:
            return bias_vector(y, yhat, z_attrs, spec.measures, spec.attributes, spec.collapse)
        return np.array([float(np.mean(yhat != y))])

    return problem, dim


def select_best_feasible(objectives, combo: int, spec: BiasSpec):
    """Max accuracy over archive points meeting the combo's thresholds, or None."""
    objectives = np.atleast_2d(np.asarray(objectives, dtype=float))
    if objectives.shape[1] != spec.n_objectives:
        raise DataError(f"expected {spec.n_objectives} objectives, got {objectives.shape[1]}")
    cols = []
    for measure in COMBOS[combo]:
        cols.extend(spec.component_indices(measure))
    feasible = np.ones(len(objectives), dtype=bool)
    if cols:
        feasible = (objectives[:, cols] <= spec.threshold).all(axis=1)
    if not feasible.any():
        return None
    return float(1.0 - objectives[feasible, 0].min())


@dataclass
class RunRecord:
    run_index: int
    split_seed: int
    ea_seed: int
    final_hypervolume: float
    objectives: np.ndarray        # archive objectives on the feasibility split
    train_objectives: np.ndarray  # archive objectives on the training split
    baseline_accuracy: float
    trace: list


@dataclass
class RunStats:
    """Per-combo aggregate of best feasible accuracy across runs."""

    combo_mean: dict
    combo_std: dict
    combo_feasible_runs: dict
    n_runs: int

    def row(self, combo: int):
        mean = self.combo_mean[combo]
        return {
            "combo": combo,
            "feasible_runs": self.combo_feasible_runs[combo],
            "mean_accuracy": None if mean is None else round(mean, 6),
            "std_accuracy": None if mean is None else round(self.combo_std[combo], 6),
        }


def _per_run_seeds(root_seed: int, n_runs: int):
    """Counter-based expansion: independent (split, ea) seed pairs per run."""
    children = np.random.SeedSequence(root_seed).spawn(n_runs)
    return [tuple(int(s) for s in c.generate_state(2)) for c in children]


def run_one(dataset: Dataset, spec: BiasSpec, ea_cfg: EAConfig, split_seed: int,
            train_fraction: float = 0.8, feasibility_split: str = "train",
            warm_start: bool = True, train_cfg: TrainConfig | None = None) -> RunRecord:
    """One seeded run: split, baseline, evolve, evaluate the archive."""
    train, test = split(dataset, train_fraction, split_seed)
    train, test = standardize(train, test)
    baseline = train_logistic_baseline(train.X, train.y, train_cfg, train.feature_names)
    base_acc = float(np.mean(predict(baseline, train.X) == train.y))
    problem, dim = build_problem(train, spec)
    x0 = np.append(baseline.w, baseline.b) if warm_start else None
    result = ea_run(problem, dim, ea_cfg, x0=x0)

    train_objs = result.archive.objectives
    if feasibility_split == "test":
        eval_problem, _ = build_problem(test, spec)
        objs = np.array([eval_problem(x) for x in result.archive.xs])
    elif feasibility_split == "train":
        objs = train_objs
    else:
        raise ValueError("feasibility_split must be 'train' or 'test'")
    return RunRecord(
        run_index=-1,
        split_seed=split_seed,
        ea_seed=ea_cfg.seed,
        final_hypervolume=result.archive.hypervolume(),
        objectives=objs,
        train_objectives=train_objs,
        baseline_accuracy=base_acc,
        trace=result.trace,
    )


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name)
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _record_path(out_dir: Path, i: int) -> Path:
    return out_dir / f"run_{i:03d}.json"


def save_record(rec: RunRecord, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "run_index": rec.run_index,
        "split_seed": rec.split_seed,
        "ea_seed": rec.ea_seed,
        "final_hypervolume": rec.final_hypervolume,
        "objectives": np.asarray(rec.objectives).tolist(),
        "train_objectives": np.asarray(rec.train_objectives).tolist(),
        "baseline_accuracy": rec.baseline_accuracy,
        "trace": [list(row) for row in rec.trace],
    }
    _atomic_write(_record_path(out_dir, rec.run_index), json.dumps(payload))


def load_record(path) -> RunRecord:
    payload = json.loads(Path(path).read_text())
    return RunRecord(
        run_index=payload["run_index"],
        split_seed=payload["split_seed"],
        ea_seed=payload["ea_seed"],
        final_hypervolume=payload["final_hypervolume"],
        objectives=np.asarray(payload["objectives"]),
        train_objectives=np.asarray(payload["train_objectives"]),
        baseline_accuracy=payload["baseline_accuracy"],
        trace=[tuple(row) for row in payload["trace"]],
    )


def run_study(dataset: Dataset, spec: BiasSpec, ea_cfg: EAConfig, n_runs: int,
              root_seed: int, train_fraction: float = 0.8,
              feasibility_split: str = "train", warm_start: bool = True,
              out_dir=None, train_cfg: TrainConfig | None = None) -> list[RunRecord]:
    """n independent seeded runs; completed persisted runs are not recomputed."""
    seeds = _per_run_seeds(root_seed, n_runs)
    out_dir = Path(out_dir) if out_dir is not None else None
    records = []
    for i, (split_seed, ea_seed) in enumerate(seeds):
        if out_dir is not None and _record_path(out_dir, i).exists():
            records.append(load_record(_record_path(out_dir, i)))
            continue
        cfg = EAConfig(mu=ea_cfg.mu, generations=ea_cfg.generations, seed=ea_seed,
                       sigma0=ea_cfg.sigma0, archive_cap=ea_cfg.archive_cap,
                       ref_value=ea_cfg.ref_value, trace_every=ea_cfg.trace_every)
        rec = run_one(dataset, spec, cfg, split_seed, train_fraction,
                      feasibility_split, warm_start, train_cfg)
        rec.run_index = i
        if out_dir is not None:
            save_record(rec, out_dir)
        records.append(rec)
    return records


def aggregate(records, spec: BiasSpec, combos=tuple(COMBOS)) -> RunStats:
    """Per-combo mean and std of best feasible accuracy over the runs."""
    means, stds, counts = {}, {}, {}
    for combo in combos:
        best = [select_best_feasible(r.objectives, combo, spec) for r in records]
        feasible = [b for b in best if b is not None]
        counts[combo] = len(feasible)
        if feasible:
            means[combo] = float(np.mean(feasible))
            stds[combo] = float(np.std(feasible))
        else:
            means[combo] = None
            stds[combo] = None
    return RunStats(combo_mean=means, combo_std=stds,
                    combo_feasible_runs=counts, n_runs=len(records))


def run_single_attribute_study(dataset, attr: str, ea_cfg: EAConfig, n_runs: int,
                               root_seed: int = 0, threshold: float = 0.01,
                               **kwargs):
    """All three measures on one attribute; combos filter the shared archives."""
    spec = BiasSpec(measures=MEASURE_ORDER, attributes=(attr,), collapse=False,
                    threshold=threshold)
    records = run_study(dataset, spec, ea_cfg, n_runs, root_seed, **kwargs)
    return aggregate(records, spec), records, spec


def run_multi_attribute_study(dataset, attrs, ea_cfg: EAConfig, n_runs: int,
                              root_seed: int = 0, threshold: float = 0.01,
                              **kwargs):
    """Two attributes with the per-measure objectives collapsed to their max."""
    spec = BiasSpec(measures=MEASURE_ORDER, attributes=tuple(attrs), collapse=True,
                    threshold=threshold)
    records = run_study(dataset, spec, ea_cfg, n_runs, root_seed, **kwargs)
    return aggregate(records, spec), records, spec


def marginal_impact(multi: RunStats, single_a1: RunStats, single_a2: RunStats) -> dict:
    """Multi-attribute mean minus the lower single-attribute mean, in points."""
    deltas = {}
    for combo in COMBOS:
        m = multi.combo_mean[combo]
        s1 = single_a1.combo_mean[combo]
        s2 = single_a2.combo_mean[combo]
        if m is None or s1 is None or s2 is None:
            deltas[combo] = None
        else:
            deltas[combo] = 100.0 * (m - min(s1, s2))
    return deltas


def best_hypervolume_run(records) -> int:
    """Index of the run with the largest final archive hypervolume."""
    hvs = [r.final_hypervolume for r in records]
    return int(np.argmax(hvs))


def bucket_by_objective(objectives, objective_index: int, bucket_width: float) -> dict:
    """Half-open buckets [k*w, (k+1)*w) over one objective coordinate."""
    if bucket_width <= 0:
        raise ValueError("bucket width must be positive")
    objectives = np.atleast_2d(np.asarray(objectives, dtype=float))
    keys = np.floor(np.round(objectives[:, objective_index] / bucket_width, 12)).astype(int)
    buckets = {}
    for k in np.unique(keys):
        buckets[int(k)] = objectives[keys == k]
    return buckets


def dual_dm_study(dataset, attrs, ea_cfg: EAConfig, n_runs: int, root_seed: int = 0,
                  **kwargs):
    """Error rate plus one DM(OMR) objective per attribute, no collapse."""
    spec = BiasSpec(measures=(BiasMeasureId.DM_OMR,), attributes=tuple(attrs),
                    collapse=False)
    records = run_study(dataset, spec, ea_cfg, n_runs, root_seed, **kwargs)
    best = best_hypervolume_run(records)
    return records[best], records, spec
