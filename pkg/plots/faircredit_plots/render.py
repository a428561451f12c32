"""Batch renderer for figure manifests emitted by the faircredit CLI.

Consumes only the emitted files (aggregate.csv, buckets.csv, manifest.json)
and never recomputes a metric: byte-identical inputs always produce
identical plotted coordinates.  Invoked as

    faircredit-render <manifest.json> --out <dir>
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


class RenderError(Exception):
    pass


def load_manifest(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise RenderError(f"manifest not found: {path}")
    manifest = json.loads(path.read_text())
    if "figures" not in manifest or not isinstance(manifest["figures"], list):
        raise RenderError(f"manifest {path} has no 'figures' list")
    for fig in manifest["figures"]:
        kind = fig.get("kind")
        if kind == "combo-bars":
            required = {"input", "out", "title", "ylabel"}
        elif kind == "bucketed-3d":
            required = {"input", "out", "title", "axes", "bucket_label",
                        "azimuth", "elevation"}
        else:
            raise RenderError(f"unknown figure kind {kind!r}")
        missing = required - set(fig)
        if missing:
            raise RenderError(f"{kind} figure is missing fields {sorted(missing)}")
    return manifest


def _read_csv(path: Path) -> list[dict]:
    if not path.exists():
        raise RenderError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise RenderError(f"input file is empty: {path}")
    return rows


def prepare_combo_bars(path) -> dict:
    """Bar positions/heights straight from an aggregate.csv; 'n/a' cells
    become gaps annotated as infeasible."""
    rows = _read_csv(Path(path))
    combos, heights, errors, infeasible = [], [], [], []
    for row in rows:
        combo = int(row["combo"])
        combos.append(combo)
        if row["mean_accuracy"] in ("n/a", "", None):
            heights.append(None)
            errors.append(None)
            infeasible.append(combo)
        else:
            heights.append(float(row["mean_accuracy"]))
            errors.append(float(row["std_accuracy"]))
    return {"combos": combos, "heights": heights, "errors": errors,
            "infeasible": infeasible}


def render_combo_bars(fig_spec: dict, base: Path, out_dir: Path) -> Path:
    data = prepare_combo_bars(base / fig_spec["input"])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [c for c, h in zip(data["combos"], data["heights"]) if h is not None]
    hs = [h for h in data["heights"] if h is not None]
    es = [e for e in data["errors"] if e is not None]
    ax.bar(xs, hs, yerr=es, capsize=3, color="#4878b0", edgecolor="black",
           linewidth=0.5)
    for combo in data["infeasible"]:
        ax.text(combo, 0.02, "n/a", ha="center", va="bottom", rotation=90,
                transform=ax.get_xaxis_transform())
    ax.set_xticks(data["combos"])
    ax.set_xlabel("bias-objective combination")
    ax.set_ylabel(fig_spec["ylabel"])
    ax.set_title(fig_spec["title"])
    ax.set_ylim(0.0, 1.0)
    out = out_dir / fig_spec["out"]
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out


def prepare_bucketed_3d(path, axes, bucket_label) -> dict:
    """Per-bucket coordinate triples from a buckets.csv, sorted by lower bound."""
    rows = _read_csv(Path(path))
    for col in axes:
        if col not in rows[0]:
            raise RenderError(f"column {col!r} not found in {path}")
    buckets: dict[tuple, list] = {}
    for row in rows:
        key = (float(row["bucket_lo"]), float(row["bucket_hi"]))
        point = tuple(float(row[c]) for c in axes)
        buckets.setdefault(key, []).append(point)
    ordered = sorted(buckets.items())  # ascending by bucket lower bound
    return {
        "axes": tuple(axes),
        "bucket_label": bucket_label,
        "buckets": [
            {"lo": lo, "hi": hi, "points": pts}
            for (lo, hi), pts in ordered
        ],
    }


def render_bucketed_3d(fig_spec: dict, base: Path, out_dir: Path) -> Path:
    data = prepare_bucketed_3d(base / fig_spec["input"], fig_spec["axes"],
                               fig_spec["bucket_label"])
    fig = plt.figure(figsize=(7, 5.5))
    ax = fig.add_subplot(projection="3d")
    cmap = plt.get_cmap("viridis")
    n = len(data["buckets"])
    for i, bucket in enumerate(data["buckets"]):
        xs, ys, zs = zip(*bucket["points"])
        color = cmap(0.5 if n == 1 else i / (n - 1))
        ax.scatter(xs, ys, zs, color=color, depthshade=False, s=18,
                   label=f"[{bucket['lo']:g}, {bucket['hi']:g})")
    ax.set_xlabel(data["axes"][0])
    ax.set_ylabel(data["axes"][1])
    ax.set_zlabel(data["axes"][2])
    ax.set_title(fig_spec["title"])
    ax.view_init(elev=fig_spec["elevation"], azim=fig_spec["azimuth"])
    ax.legend(title=data["bucket_label"], loc="upper left",
              bbox_to_anchor=(1.02, 1.0), fontsize=8)
    out = out_dir / fig_spec["out"]
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out


RENDERERS = {"combo-bars": render_combo_bars, "bucketed-3d": render_bucketed_3d}


def render_manifest(manifest_path, out_dir) -> list[Path]:
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fig_spec in manifest["figures"]:
        written.append(RENDERERS[fig_spec["kind"]](fig_spec, manifest_path.parent,
                                                   out_dir))
    return written


@click.command()
@click.argument("manifest", type=click.Path())
@click.option("--out", default=".", show_default=True,
              help="Directory for the rendered PNG files.")
def main(manifest, out):
    """Render every figure listed in MANIFEST (a manifest.json) to PNG."""
    try:
        written = render_manifest(manifest, out)
    except RenderError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    for path in written:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
