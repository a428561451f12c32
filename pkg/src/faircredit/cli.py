"""Command-line harness: ingest, baseline, optimize, study, report, plot-data.

Exit codes: 0 success, 2 config/schema error, 3 missing data file,
4 run failure (partial results preserved), 5 empty input.
"""

from __future__ import annotations

import csv
import json
import sys
from importlib import resources
from pathlib import Path

import click
import numpy as np
import yaml

from . import experiments as exp
from .datasets import load_dataset, load_schema, split, standardize, subsample, summarize
from .errors import DataError, FairCreditError, SchemaError
from .metrics import BiasMeasureId, LabeledPredictions, bias_measure, confusion_by_group
from .model import TrainConfig, predict, train_logistic_baseline
from .moea import EAConfig

EXIT_SCHEMA = 2
EXIT_MISSING = 3
EXIT_RUNFAIL = 4
EXIT_EMPTY = 5

KNOWN_DATASETS = ("adult", "bank", "german", "mortgage")

FETCH_HINT = (
    "Raw data files are not bundled. Run scripts/fetch_data.sh to download\n"
    "the public datasets into ./data (checksums are recorded on first fetch)."
)


def _packaged_schema(name: str) -> Path:
    ref = resources.files("faircredit") / "configs" / f"{name}.yaml"
    if not ref.is_file():
        raise SchemaError(f"no packaged schema for dataset {name!r}; pass --config")
    return Path(str(ref))


def _load(name, data_dir, config, drop_sensitive):
    schema = load_schema(Path(config) if config else _packaged_schema(name))
    path = Path(data_dir) / f"{name}.csv"
    if not path.exists():
        click.echo(f"error: data file {path} not found.\n{FETCH_HINT}", err=True)
        sys.exit(EXIT_MISSING)
    return load_dataset(path, schema, drop_sensitive=drop_sensitive)


def _write_csv(path: Path, rows, headers):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=headers)
        writer.writeheader()
        writer.writerows(rows)
    tmp.replace(path)


@click.group()
def main():
    """Train credit-scoring models under simultaneous bias objectives."""


@main.command()
@click.argument("dataset")
@click.option("--data-dir", default="data", show_default=True)
@click.option("--out", default="out", show_default=True)
@click.option("--config", default=None, help="Schema YAML overriding the packaged one.")
@click.option("--drop-sensitive", is_flag=True, help="Exclude sensitive source columns from features.")
def ingest(dataset, data_dir, out, config, drop_sensitive):
    """Load DATASET, write group/outcome summary tables and a cached copy."""
    try:
        ds = _load(dataset, data_dir, config, drop_sensitive)
    except (SchemaError, DataError, FairCreditError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_SCHEMA)
    out_dir = Path(out) / dataset
    out_dir.mkdir(parents=True, exist_ok=True)
    click.echo(f"{dataset}: {ds.row_count} rows, {len(ds.feature_names)} encoded features, "
               f"{ds.dropped_count} rows dropped for missing values")
    for attr in ds.z_attrs:
        table = summarize(ds, attr)
        rows = table.to_rows()
        _write_csv(out_dir / f"summary_{attr}.csv", rows, list(rows[0].keys()))
        (out_dir / f"summary_{attr}.txt").write_text(table.to_text() + "\n")
        click.echo(f"\noutcomes by {attr}:")
        click.echo(table.to_text())
    cache = out_dir / "dataset.npz"
    tmp = out_dir / "dataset.tmp.npz"  # savez appends .npz to other suffixes
    arrays = {"X": ds.X, "y": ds.y}
    arrays.update({f"z_{k}": v for k, v in ds.z_attrs.items()})
    np.savez_compressed(tmp, **arrays)
    tmp.replace(cache)
    (out_dir / "meta.json").write_text(json.dumps(
        {"dataset": dataset, "feature_names": list(ds.feature_names),
         "dropped_count": ds.dropped_count, "attributes": list(ds.z_attrs)}, indent=2))
    click.echo(f"\ncached encoded dataset at {cache}")


ALL_MEASURES = list(BiasMeasureId)


@main.command()
@click.argument("dataset")
@click.option("--data-dir", default="data", show_default=True)
@click.option("--out", default="out", show_default=True)
@click.option("--runs", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--split", "train_fraction", default=0.8, show_default=True)
@click.option("--config", default=None)
@click.option("--drop-sensitive", is_flag=True)
def baseline(dataset, data_dir, out, runs, seed, train_fraction, config, drop_sensitive):
    """Unconstrained logistic baselines: accuracy and all bias measures."""
    try:
        ds = _load(dataset, data_dir, config, drop_sensitive)
    except (SchemaError, DataError, FairCreditError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_SCHEMA)
    seeds = [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(runs)]
    values = {}  # (split, attr, metric) -> list over runs
    for split_seed in seeds:
        train, test = split(ds, train_fraction, split_seed)
        train, test = standardize(train, test)
        m = train_logistic_baseline(train.X, train.y)
        for part, label in ((train, "train"), (test, "test")):
            yhat = predict(m, part.X)
            acc = float(np.mean(yhat == part.y))
            for attr in part.z_attrs:
                values.setdefault((label, attr, "accuracy"), []).append(acc)
                gc = confusion_by_group(LabeledPredictions(part.y, yhat, part.z_attrs[attr]))
                for mid in ALL_MEASURES:
                    res = bias_measure(gc, mid)
                    values.setdefault((label, attr, mid.value), []).append(res.value)
    rows = []
    for (part, attr, metric), vals in values.items():
        rows.append({"dataset": dataset, "split": part, "attribute": attr, "metric": metric,
                     "mean": round(float(np.mean(vals)), 6),
                     "std": round(float(np.std(vals)), 6), "runs": len(vals)})
    out_dir = Path(out) / dataset
    _write_csv(out_dir / "baseline.csv", rows,
               ["dataset", "split", "attribute", "metric", "mean", "std", "runs"])
    click.echo(f"{'split':6} {'attribute':10} {'metric':9} {'mean':>8} {'std':>8}")
    for r in rows:
        if r["metric"] in ("accuracy", "DI", "EO", "DM_OMR"):
            click.echo(f"{r['split']:6} {r['attribute']:10} {r['metric']:9} "
                       f"{r['mean']:8.4f} {r['std']:8.4f}")
    click.echo(f"\nwrote {out_dir / 'baseline.csv'}")


def _study_settings(config, **overrides):
    raw = yaml.safe_load(Path(config).read_text())
    ea_raw = raw.get("ea", {})
    settings = {
        "dataset": raw["dataset"],
        "kind": raw.get("kind", "single"),
        "attributes": list(raw.get("attributes", [])),
        "threshold": float(raw.get("threshold", 0.01)),
        "n_runs": int(raw.get("n_runs", 20)),
        "root_seed": int(raw.get("root_seed", 0)),
        "train_fraction": float(raw.get("train_fraction", 0.8)),
        "feasibility_split": raw.get("feasibility_split", "train"),
        "subsample_factor": raw.get("subsample_factor"),
        "subsample_seed": int(raw.get("subsample_seed", 0)),
        "drop_sensitive": bool(raw.get("drop_sensitive", False)),
        "warm_start": bool(raw.get("warm_start", True)),
        "bucket_width": float(raw.get("bucket_width", 0.01)),
        "schema": raw.get("schema"),
        "mu": int(ea_raw.get("mu", 20)),
        "generations": int(ea_raw.get("generations", 500)),
        "sigma0": float(ea_raw.get("sigma0", 0.3)),
        "archive_cap": int(ea_raw.get("archive_cap", 1000)),
        "ref_value": float(ea_raw.get("ref_value", 1.1)),
        "trace_every": int(ea_raw.get("trace_every", 50)),
    }
    for key, value in overrides.items():
        if value is not None:
            settings[key] = value
    return settings


def _study_dataset(settings, data_dir, drop_sensitive_flag):
    ds = _load(settings["dataset"], data_dir, settings.get("schema"),
               settings["drop_sensitive"] or drop_sensitive_flag)
    if settings.get("subsample_factor"):
        ds = subsample(ds, int(settings["subsample_factor"]), settings["subsample_seed"])
    return ds


def _make_spec(settings) -> exp.BiasSpec:
    kind = settings["kind"]
    attrs = tuple(settings["attributes"])
    if kind == "single":
        if len(attrs) != 1:
            raise DataError("single-attribute study requires exactly one sensitive attribute")
        return exp.BiasSpec(measures=exp.MEASURE_ORDER, attributes=attrs,
                            collapse=False, threshold=settings["threshold"])
    if kind == "multi":
        if len(attrs) != 2:
            raise DataError("multi-attribute study requires two sensitive attributes")
        return exp.BiasSpec(measures=exp.MEASURE_ORDER, attributes=attrs,
                            collapse=True, threshold=settings["threshold"])
    if kind == "dual-dm":
        if len(attrs) != 2:
            raise DataError("dual-dm study requires two sensitive attributes")
        return exp.BiasSpec(measures=(BiasMeasureId.DM_OMR,), attributes=attrs,
                            collapse=False, threshold=settings["threshold"])
    raise DataError(f"unknown study kind {kind!r}")


def _ea_config(settings, seed=0) -> EAConfig:
    return EAConfig(mu=settings["mu"], generations=settings["generations"], seed=seed,
                    sigma0=settings["sigma0"], archive_cap=settings["archive_cap"],
                    ref_value=settings["ref_value"], trace_every=settings["trace_every"])


def _write_aggregate(out_dir: Path, stats: exp.RunStats):
    rows = [stats.row(c) for c in exp.COMBOS]
    for r in rows:
        if r["mean_accuracy"] is None:
            r["mean_accuracy"] = "n/a"
            r["std_accuracy"] = "n/a"
    _write_csv(out_dir / "aggregate.csv", rows,
               ["combo", "feasible_runs", "mean_accuracy", "std_accuracy"])
    return rows


def _print_aggregate(rows):
    click.echo(f"{'combo':>5} {'feasible':>8} {'mean_acc':>10} {'std_acc':>10}")
    for r in rows:
        click.echo(f"{r['combo']:>5} {r['feasible_runs']:>8} "
                   f"{str(r['mean_accuracy']):>10} {str(r['std_accuracy']):>10}")


def _snapshot(out_dir: Path, settings, spec: exp.BiasSpec):
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = dict(settings)
    payload["measures"] = [m.value for m in spec.measures]
    payload["collapse"] = spec.collapse
    payload["objective_names"] = exp.objective_names(spec)
    (out_dir / "study.json").write_text(json.dumps(payload, indent=2))


@main.command()
@click.option("--config", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, help="Results directory (default: out/study_<dataset>_<kind>).")
@click.option("--data-dir", default="data", show_default=True)
@click.option("--runs", "n_runs", type=int, default=None)
@click.option("--generations", type=int, default=None)
@click.option("--popsize", "mu", type=int, default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--split", "train_fraction", type=float, default=None)
@click.option("--seed", "root_seed", type=int, default=None)
@click.option("--feasibility-split", type=click.Choice(["train", "test"]), default=None)
@click.option("--drop-sensitive", is_flag=True)
def study(config, out, data_dir, n_runs, generations, mu, threshold, train_fraction,
          root_seed, feasibility_split, drop_sensitive):
    """Run the configured study; per-run records make it restart-safe."""
    try:
        settings = _study_settings(config, n_runs=n_runs, generations=generations, mu=mu,
                                   threshold=threshold, train_fraction=train_fraction,
                                   root_seed=root_seed, feasibility_split=feasibility_split)
        spec = _make_spec(settings)
        ds = _study_dataset(settings, data_dir, drop_sensitive)
    except (SchemaError, DataError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_SCHEMA)
    out_dir = Path(out) if out else Path("out") / f"study_{settings['dataset']}_{settings['kind']}"
    _snapshot(out_dir, settings, spec)
    try:
        records = exp.run_study(
            ds, spec, _ea_config(settings), settings["n_runs"], settings["root_seed"],
            train_fraction=settings["train_fraction"],
            feasibility_split=settings["feasibility_split"],
            warm_start=settings["warm_start"], out_dir=out_dir)
    except FairCreditError as e:
        click.echo(f"error: run failed: {e} (completed runs kept in {out_dir})", err=True)
        sys.exit(EXIT_RUNFAIL)
    for rec in records:
        _write_csv(out_dir / f"trace_run_{rec.run_index:03d}.csv",
                   [{"generation": g, "archive_size": s, "hypervolume": hv, "best_error_rate": be}
                    for g, s, hv, be in rec.trace],
                   ["generation", "archive_size", "hypervolume", "best_error_rate"])
    stats = exp.aggregate(records, spec)
    rows = _write_aggregate(out_dir, stats)
    click.echo(f"study {settings['dataset']}/{settings['kind']} "
               f"({settings['n_runs']} runs, mu={settings['mu']}, "
               f"G={settings['generations']}, threshold={settings['threshold']}):")
    _print_aggregate(rows)
    click.echo(f"\nresults in {out_dir}")


@main.command()
@click.option("--config", required=True, type=click.Path(exists=True))
@click.option("--out", default="out/optimize", show_default=True)
@click.option("--data-dir", default="data", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--generations", type=int, default=None)
@click.option("--popsize", "mu", type=int, default=None)
@click.option("--drop-sensitive", is_flag=True)
def optimize(config, out, data_dir, seed, generations, mu, drop_sensitive):
    """One EA run for the configured problem; writes archive and trace."""
    try:
        settings = _study_settings(config, generations=generations, mu=mu)
        spec = _make_spec(settings)
        ds = _study_dataset(settings, data_dir, drop_sensitive)
    except (SchemaError, DataError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_SCHEMA)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rec = exp.run_one(ds, spec, _ea_config(settings, seed=seed), split_seed=seed,
                      train_fraction=settings["train_fraction"],
                      feasibility_split=settings["feasibility_split"],
                      warm_start=settings["warm_start"])
    rec.run_index = 0
    exp.save_record(rec, out_dir)
    _snapshot(out_dir, settings, spec)
    _write_csv(out_dir / "trace_run_000.csv",
               [{"generation": g, "archive_size": s, "hypervolume": hv, "best_error_rate": be}
                for g, s, hv, be in rec.trace],
               ["generation", "archive_size", "hypervolume", "best_error_rate"])
    click.echo(f"archive of {len(rec.objectives)} points, "
               f"final hypervolume {rec.final_hypervolume:.6f}; results in {out_dir}")


def _load_results(results_dir: Path):
    paths = sorted(results_dir.glob("run_*.json"))
    if not paths or not (results_dir / "study.json").exists():
        click.echo(f"error: no study results in {results_dir}", err=True)
        sys.exit(EXIT_EMPTY)
    study_meta = json.loads((results_dir / "study.json").read_text())
    spec = exp.BiasSpec(
        measures=tuple(BiasMeasureId(m) for m in study_meta["measures"]),
        attributes=tuple(study_meta["attributes"]),
        collapse=study_meta["collapse"],
        threshold=study_meta["threshold"])
    return study_meta, spec, [exp.load_record(p) for p in paths]


@main.command()
@click.argument("results_dir", type=click.Path(exists=True))
@click.option("--single", "singles", multiple=True, type=click.Path(exists=True),
              help="Two single-attribute results dirs for marginal-impact deltas.")
def report(results_dir, singles):
    """Recompute and print aggregate tables from persisted run records."""
    meta, spec, records = _load_results(Path(results_dir))
    stats = exp.aggregate(records, spec)
    rows = _write_aggregate(Path(results_dir), stats)
    click.echo(f"{meta['dataset']}/{meta['kind']}: {len(records)} runs")
    _print_aggregate(rows)
    if singles:
        if len(singles) != 2:
            click.echo("error: marginal impact needs exactly two --single dirs", err=True)
            sys.exit(EXIT_SCHEMA)
        stats_singles = []
        for d in singles:
            _, s_spec, s_records = _load_results(Path(d))
            stats_singles.append(exp.aggregate(s_records, s_spec))
        deltas = exp.marginal_impact(stats, *stats_singles)
        rows = [{"combo": c, "delta_accuracy_points":
                 "n/a" if deltas[c] is None else round(deltas[c], 2)} for c in exp.COMBOS]
        _write_csv(Path(results_dir) / "marginal_impact.csv", rows,
                   ["combo", "delta_accuracy_points"])
        click.echo("\nmarginal impact vs worst single-attribute result (accuracy points):")
        for r in rows:
            click.echo(f"{r['combo']:>5} {str(r['delta_accuracy_points']):>8}")


@main.command("plot-data")
@click.argument("results_dir", type=click.Path(exists=True))
@click.option("--out", default=None, help="Output directory (default: RESULTS_DIR/plot).")
@click.option("--bucket-width", type=float, default=None)
@click.option("--bucket-objective", type=int, default=0, show_default=True)
def plot_data(results_dir, out, bucket_width, bucket_objective):
    """Emit bucketed point files and figure manifests for the renderer."""
    results_dir = Path(results_dir)
    meta, spec, records = _load_results(results_dir)
    width = bucket_width if bucket_width is not None else meta.get("bucket_width", 0.01)
    out_dir = Path(out) if out else results_dir / "plot"
    out_dir.mkdir(parents=True, exist_ok=True)

    best = exp.best_hypervolume_run(records)
    objs = records[best].train_objectives
    names = meta["objective_names"]
    if not 0 <= bucket_objective < len(names):
        click.echo(f"error: bucket objective {bucket_objective} out of range", err=True)
        sys.exit(EXIT_SCHEMA)
    buckets = exp.bucket_by_objective(objs, bucket_objective, width)
    rows = []
    for k in sorted(buckets):
        for point in buckets[k]:
            row = {"bucket": k, "bucket_lo": round(k * width, 12),
                   "bucket_hi": round((k + 1) * width, 12)}
            row.update({name: v for name, v in zip(names, point)})
            rows.append(row)
    headers = ["bucket", "bucket_lo", "bucket_hi"] + names
    _write_csv(out_dir / "buckets.csv", rows, headers)

    figures = []
    if (results_dir / "aggregate.csv").exists():
        agg = out_dir / "aggregate.csv"
        agg.write_text((results_dir / "aggregate.csv").read_text())
        figures.append({
            "kind": "combo-bars",
            "input": "aggregate.csv",
            "out": "combo_bars.png",
            "title": f"{meta['dataset']}: accuracy by bias-objective combination",
            "ylabel": "accuracy",
        })
    scatter_axes = [n for i, n in enumerate(names) if i != bucket_objective][:3]
    if len(scatter_axes) < 3:
        scatter_axes.append(names[bucket_objective])
    figures.append({
        "kind": "bucketed-3d",
        "input": "buckets.csv",
        "out": "bucketed_3d.png",
        "title": f"{meta['dataset']}: best run (run {best}) bucketed by {names[bucket_objective]}",
        "axes": scatter_axes,
        "bucket_label": names[bucket_objective],
        "azimuth": -60.0,
        "elevation": 20.0,
    })
    (out_dir / "manifest.json").write_text(json.dumps({"figures": figures}, indent=2))
    click.echo(f"wrote {out_dir / 'buckets.csv'} and {out_dir / 'manifest.json'} "
               f"({len(figures)} figure(s), best run {best})")


if __name__ == "__main__":
    main()
