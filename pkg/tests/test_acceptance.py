"""Acceptance gate: one test per top-level correctness criterion.

Each test prints a single PASS/FAIL line.  Criteria that need the real
credit datasets (German, Bank, Adult, Mortgage) are skipped with an
explicit reason when the files are absent from data/; run
scripts/fetch_data.sh on a machine with network access to enable them.
"""

import itertools
from pathlib import Path

import numpy as np
import pytest

from faircredit.datasets import load_dataset, load_schema, split, standardize, subsample, summarize
from faircredit.experiments import (
    COMBOS,
    MEASURE_ORDER,
    BiasSpec,
    run_multi_attribute_study,
    run_single_attribute_study,
    run_study,
    select_best_feasible,
)
from faircredit.hypervolume import hypervolume
from faircredit.metrics import (
    BiasMeasureId,
    LabeledPredictions,
    bias_measure,
    confusion_by_group,
)
from faircredit.model import LinearModel, gradient_check, predict, train_logistic_baseline
from faircredit.moea import EAConfig, nondominated_sort
from .conftest import brute_force_fronts, make_synthetic_dataset, monte_carlo_hypervolume
from .test_metrics import ALL_MEASURES, arrays_from_counts, oracle_conditional

REPO = Path(__file__).resolve().parent.parent
DATA_DIR = REPO / "data"
CONFIG_DIR = Path(__file__).resolve().parent.parent / "src" / "faircredit" / "configs"

DESK_EA = EAConfig(mu=20, generations=500, seed=0)


def report(name: str, ok: bool, detail: str = ""):
    tag = "PASS" if ok else "FAIL"
    print(f"{tag}: {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def need_data(name: str) -> Path:
    path = DATA_DIR / f"{name}.csv"
    if not path.exists():
        pytest.skip(
            f"requires data/{name}.csv which is not present in this environment "
            "(no network access to the dataset hosts); run scripts/fetch_data.sh "
            "on a connected machine"
        )
    return path


def load_real(name: str):
    return load_dataset(need_data(name), load_schema(CONFIG_DIR / f"{name}.yaml"))


# --- published-value oracles (group/outcome counts and baseline accuracy) ---

EXPECTED_BASELINES = {
    # dataset -> (mean, band, band_kind)
    "german": (0.7869, 2 * 0.0088, "2sigma"),
    "bank": (0.9104, 2 * 0.0011, "2sigma"),
    "adult": (0.8378, 0.01, "abs"),
    "mortgage": (0.9079, 0.01, "abs"),
}

# dataset -> attribute -> ((nonprot_neg, nonprot_pos), (prot_neg, prot_pos))
EXPECTED_TABLES = {
    "adult": {
        "gender": ((20988, 9539), (13026, 1669)),
        "race": ((28696, 10207), (5318, 1001)),
    },
    "bank": {"age": ((35240, 3970), (1308, 670))},
    "german": {
        "age": ((577, 229), (123, 71)),
        "gender": ((499, 191), (201, 109)),
    },
    "mortgage": {
        "gender": ((67838, 73334), (32162, 26666)),
        "race": ((82827, 88517), (17173, 11483)),
    },
}


def compositions(total: int, parts: int):
    """All non-negative integer vectors of length `parts` summing to `total`."""
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield tuple(out)


# ---------------------------------------------------------------------------


def test_metrics_counting_oracle_exhaustive():
    """Every measure equals the counting oracle on all triples of length <= 12."""
    checked = 0
    for total in range(1, 13):
        for counts in compositions(total, 8):
            y, yhat, z = arrays_from_counts(counts)
            conf = confusion_by_group(LabeledPredictions(y, yhat, z))
            for m in ALL_MEASURES:
                expected = oracle_conditional(y, yhat, z, m)
                got = bias_measure(conf, m)
                if expected is None:
                    assert got.undefined and got.value == 1.0, (counts, m)
                else:
                    assert not got.undefined, (counts, m)
                    assert abs(got.value - expected) < 1e-12, (counts, m)
                assert 0.0 <= got.value <= 1.0
            checked += 1
    report("metrics counting oracle, all triples of length <= 12",
           checked == 125_969, f"{checked} cases x 7 measures")


def test_optimizer_sort_matches_brute_force():
    rng = np.random.default_rng(2024)
    for i in range(1000):
        n = int(rng.integers(1, 201))
        d = int(rng.integers(1, 5))
        pts = np.round(rng.random((n, d)), 2)
        if nondominated_sort(pts) != brute_force_fronts(pts):
            report("nondominated sort vs brute force, 1000 instances", False,
                   f"instance {i} (n={n}, d={d})")
    report("nondominated sort vs brute force, 1000 instances", True,
           "n <= 200, d <= 4")


def test_optimizer_hypervolume_monte_carlo():
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(100):
        d = 3 if i % 2 == 0 else 4
        n = int(rng.integers(3, 60))
        pts = rng.uniform(0.05, 1.05, size=(n, d))
        ref = np.full(d, 1.1)
        exact = hypervolume(pts, ref)
        est = monte_carlo_hypervolume(pts, ref, n_samples=1_000_000, seed=1000 + i)
        worst = max(worst, abs(exact - est) / exact)
    report("hypervolume vs 1e6-sample Monte Carlo on 100 random 3-D/4-D fronts",
           worst < 0.01, f"worst relative error {worst:.2e}")


def test_optimizer_hypervolume_analytic():
    worst = 0.0
    rng = np.random.default_rng(5)
    for d in (1, 2, 3, 4):
        for _ in range(25):
            p = rng.uniform(0, 1, size=d)
            ref = np.full(d, 1.1)
            worst = max(worst, abs(hypervolume([p], ref) - np.prod(ref - p)))
    report("hypervolume analytic single-box cases", worst < 1e-12,
           f"worst absolute error {worst:.2e}")


@pytest.fixture(scope="module")
def synthetic_study(tmp_path_factory):
    """Small persisted study used by the data-free archive criteria."""
    tmp = tmp_path_factory.mktemp("acceptance_study")
    ds = make_synthetic_dataset(tmp, n=300, seed=1, bias=1.5)
    spec = BiasSpec(measures=MEASURE_ORDER, attributes=("gender",), threshold=0.05)
    records = run_study(ds, spec, EAConfig(mu=10, generations=60, seed=0),
                        n_runs=4, root_seed=11, out_dir=tmp / "out")
    return spec, records


def test_archive_hypervolume_non_decreasing(synthetic_study):
    _, records = synthetic_study
    ok = True
    for rec in records:
        hvs = [row[2] for row in rec.trace]
        ok &= all(b >= a - 1e-12 for a, b in zip(hvs, hvs[1:]))
    report("archive hypervolume non-decreasing on every logged run", ok,
           f"{len(records)} runs")


def test_constraint_nesting_exact(synthetic_study):
    spec, records = synthetic_study
    subsets = {c: frozenset(COMBOS[c]) for c in COMBOS}
    ok = True
    for rec in records:
        best = {c: select_best_feasible(rec.objectives, c, spec) for c in COMBOS}
        for a, b in itertools.product(COMBOS, COMBOS):
            if subsets[a] <= subsets[b] and best[b] is not None:
                ok &= best[a] is not None and best[a] >= best[b]
    report("constraint nesting monotone on every persisted archive", ok,
           f"{len(records)} archives x {len(COMBOS)}^2 combo pairs, exact")


def test_gradient_check_100_instances():
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(100):
        n, d = int(rng.integers(2, 40)), int(rng.integers(1, 10))
        X = rng.normal(size=(n, d))
        y = rng.choice([-1.0, 1.0], n)
        m = LinearModel(w=rng.normal(size=d), b=float(rng.normal()), feature_names=())
        worst = max(worst, gradient_check(m, X, y, l2=float(rng.uniform(0, 1))))
    report("logistic gradient vs central differences, 100 instances",
           worst < 1e-5, f"max relative error {worst:.2e}")


# --------------------- real-data criteria (skip without data) ---------------


@pytest.mark.parametrize("dataset", ["adult", "bank", "german", "mortgage"])
def test_group_outcome_tables_match_published(dataset):
    ds = load_real(dataset)
    ok = True
    details = []
    for attr, ((np_neg, np_pos), (p_neg, p_pos)) in EXPECTED_TABLES[dataset].items():
        table = summarize(ds, attr)
        got = ((int(table.counts[1, 0]), int(table.counts[1, 1])),
               (int(table.counts[0, 0]), int(table.counts[0, 1])))
        expected = ((np_neg, np_pos), (p_neg, p_pos))
        if got != expected:
            ok = False
        details.append(f"{attr}: got {got}, expected {expected}")
    report(f"published group/outcome table for {dataset}", ok, "; ".join(details))


# dataset -> attr -> published train-split bias-measure means
EXPECTED_BIAS = {
    "adult": {
        "gender": {BiasMeasureId.DI: 0.1952, BiasMeasureId.EO: 0.1686,
                   BiasMeasureId.DM_OMR: 0.1224},
        "race": {BiasMeasureId.DI: 0.1025, BiasMeasureId.EO: 0.1002,
                 BiasMeasureId.DM_OMR: 0.0563},
    },
    "bank": {
        "age": {BiasMeasureId.DI: 0.2171, BiasMeasureId.EO: 0.1773,
                BiasMeasureId.DM_OMR: 0.1517},
    },
    "german": {
        "age": {BiasMeasureId.DI: 0.0828, BiasMeasureId.EO: 0.0526,
                BiasMeasureId.DM_OMR: 0.0496},
        "gender": {BiasMeasureId.DI: 0.0982, BiasMeasureId.EO: 0.0983,
                   BiasMeasureId.DM_OMR: 0.0306},
    },
    "mortgage": {
        "gender": {BiasMeasureId.DI: 0.0697, BiasMeasureId.EO: 0.0289,
                   BiasMeasureId.DM_OMR: 0.0189},
        "race": {BiasMeasureId.DI: 0.1542, BiasMeasureId.EO: 0.0616,
                 BiasMeasureId.DM_OMR: 0.0037},
    },
}


@pytest.mark.parametrize("dataset", ["adult", "bank", "german", "mortgage"])
def test_baseline_matches_published_train_table(dataset):
    """Accuracy and bias measures over the training split vs published means."""
    ds = load_real(dataset)
    mean_expected, band, kind = EXPECTED_BASELINES[dataset]
    seeds = [int(c.generate_state(1)[0])
             for c in np.random.SeedSequence(0).spawn(20)]
    accs = []
    measured = {(a, m): [] for a in EXPECTED_BIAS[dataset]
                for m in EXPECTED_BIAS[dataset][a]}
    for s in seeds:
        train, test = split(ds, 0.8, s)
        train, test = standardize(train, test)
        model = train_logistic_baseline(train.X, train.y)
        yhat = predict(model, train.X)
        accs.append(float(np.mean(yhat == train.y)))
        for attr in EXPECTED_BIAS[dataset]:
            conf = confusion_by_group(
                LabeledPredictions(train.y, yhat, train.z_attrs[attr]))
            for measure in EXPECTED_BIAS[dataset][attr]:
                measured[(attr, measure)].append(bias_measure(conf, measure).value)
    mean = float(np.mean(accs))
    ok = abs(mean - mean_expected) <= band
    details = [f"accuracy {mean:.4f} vs {mean_expected:.4f} +/- {band:.4f} ({kind})"]
    for (attr, measure), vals in measured.items():
        got = float(np.mean(vals))
        target = EXPECTED_BIAS[dataset][attr][measure]
        details.append(f"{attr}/{measure.value} {got:.4f} vs {target:.4f}")
        ok &= abs(got - target) <= 0.03
    report(f"published unconstrained-baseline table for {dataset}", ok,
           "; ".join(details))


@pytest.fixture(scope="module")
def german_desk_study(tmp_path_factory):
    ds = load_real("german")
    tmp = tmp_path_factory.mktemp("german_study")
    stats, records, spec = run_single_attribute_study(
        ds, "age", DESK_EA, n_runs=20, root_seed=0, threshold=0.01,
        out_dir=tmp,
    )
    return stats, records, spec


def test_german_desk_scale_combo8(german_desk_study):
    stats, _, _ = german_desk_study
    feasible = stats.combo_feasible_runs[8]
    drop = None
    ok = feasible >= 15
    if stats.combo_mean[8] is not None and stats.combo_mean[1] is not None:
        drop = stats.combo_mean[1] - stats.combo_mean[8]
        ok &= drop <= 0.05
    else:
        ok = False
    report("German/age desk-scale study: combo 8 feasibility and accuracy drop",
           ok, f"feasible {feasible}/20, drop {drop}")


def test_german_desk_nesting_and_trace(german_desk_study):
    stats, records, spec = german_desk_study
    ok = True
    for rec in records:
        hvs = [row[2] for row in rec.trace]
        ok &= all(b >= a - 1e-12 for a, b in zip(hvs, hvs[1:]))
        best = {c: select_best_feasible(rec.objectives, c, spec) for c in COMBOS}
        for a, b in itertools.product(COMBOS, COMBOS):
            if frozenset(COMBOS[a]) <= frozenset(COMBOS[b]) and best[b] is not None:
                ok &= best[a] is not None and best[a] >= best[b]
    report("German/age desk-scale study: trace monotone + nesting exact", ok)


def test_bank_subsample_contrast():
    ds = load_real("bank")
    cfg = EAConfig(mu=20, generations=200, seed=0)
    drops = {}
    for factor in (20, 4):
        sub = subsample(ds, factor, seed=0)
        stats, _, _ = run_single_attribute_study(
            sub, "age", cfg, n_runs=5, root_seed=0, threshold=0.01
        )
        if stats.combo_mean[8] is None or stats.combo_mean[1] is None:
            report("Bank subsample size-effect direction", False,
                   f"combo 8 infeasible at factor {factor}")
        drops[factor] = stats.combo_mean[1] - stats.combo_mean[8]
    report("Bank subsample size-effect direction",
           drops[20] < drops[4],
           f"1/20 drop {drops[20]:.4f} < 1/4 drop {drops[4]:.4f}")


def test_german_multi_attribute_direction():
    ds = load_real("german")
    stats, _, _ = run_multi_attribute_study(
        ds, ("age", "gender"), EAConfig(mu=20, generations=300, seed=0),
        n_runs=10, root_seed=0, threshold=0.01,
    )
    m1, m5 = stats.combo_mean[1], stats.combo_mean[5]
    ok = m1 is not None and m5 is not None and m5 < m1
    # the exact collapsed => per-attribute feasibility property is asserted
    # point-by-point in test_experiments.test_collapsed_feasibility_implies_
    # per_attribute; here the collapse is max(), so it holds by construction
    report("German age+gender direction: combo 5 accuracy < combo 1", ok,
           f"combo1 {m1}, combo5 {m5}")
