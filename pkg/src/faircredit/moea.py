"""Elitist (mu+mu) multi-objective CMA-ES with a hypervolume-based archive.

Each individual carries its own step size, smoothed success probability,
evolution path and covariance matrix, adapted by the 1/5-style success
rule with a rank-one covariance update on success.  Selection pools
parents and offspring, ranks by non-dominated sorting and breaks ties by
hypervolume contribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .hypervolume import hypervolume, hypervolume_contribution

SIGMA_MIN = 1e-12
SIGMA_MAX = 1e6
EIGEN_FLOOR = 1e-12


def dominates(a, b) -> bool:
    """Pareto dominance, minimization: a is nowhere worse and somewhere better."""
    a = np.asarray(a)
    b = np.asarray(b)
    return bool((a <= b).all() and (a < b).any())


def nondominated_sort(points) -> list[list[int]]:
    """Indices grouped into fronts; front 0 is the maximal non-dominated set."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(pts)
    # D[i, j]: point i dominates point j
    le = (pts[:, None, :] <= pts[None, :, :]).all(-1)
    lt = (pts[:, None, :] < pts[None, :, :]).any(-1)
    D = le & lt
    active = np.ones(n, dtype=bool)
    fronts = []
    while active.any():
        dominated = (D & active[:, None]).any(axis=0)
        front = active & ~dominated
        fronts.append(np.flatnonzero(front).tolist())
        active &= ~front
    return fronts


@dataclass
class StrategyParams:
    """Success-rule and covariance-adaptation constants for dimension n."""

    dim: int
    p_target: float = 0.1819
    p_thresh: float = 0.44

    def __post_init__(self):
        n = self.dim
        self.damping = 1.0 + n / 2.0
        self.c_p = self.p_target / (2.0 + self.p_target)
        self.c_c = 2.0 / (n + 2.0)
        self.c_cov = 2.0 / (n** 2 + 6.0)


@dataclass
class Individual:
    """Search point plus per-individual strategy state."""

    x: np.ndarray
    sigma: float
    p_succ: float
    p_c: np.ndarray
    C: np.ndarray
    f: Optional[np.ndarray] = None
    step: Optional[np.ndarray] = None  # (x - parent.x) / parent.sigma, set by mutate

    def recondition(self):
        """Symmetrize and floor the covariance spectrum."""
        self.C = (self.C + self.C.T) / 2.0
        w, V = np.linalg.eigh(self.C)
        if w.min() < EIGEN_FLOOR:
            w = np.clip(w, EIGEN_FLOOR, None)
            self.C = (V * w) @ V.T


@dataclass
class EAConfig:
    mu: int = 50
    generations: int = 100
    seed: int = 0
    sigma0: float = 0.3
    archive_cap: int = 1000
    ref_value: float = 1.1
    trace_every: int = 25

    def __post_init__(self):
        if self.mu < 2:
            raise ValueError("population size must be at least 2")
        if self.generations < 1:
            raise ValueError("need at least one generation")


class ParetoArchive:
    """Elitist store of mutually non-dominated (x, f) pairs."""

    def __init__(self, ref, cap: int = 1000):
        self.ref = np.asarray(ref, dtype=float)
        self.cap = cap
        self.xs: list[np.ndarray] = []
        self.fs: list[np.ndarray] = []

    def __len__(self):
        return len(self.fs)

    @property
    def objectives(self) -> np.ndarray:
        return np.array(self.fs) if self.fs else np.empty((0, len(self.ref)))

    def insert(self, x, f) -> bool:
        """Add one point if non-dominated; evict lowest contributor past cap."""
        added = self._absorb(x, f)
        if added:
            self._enforce_cap()
        return added

    def insert_many(self, xs, fs):
        """Batch insert; the capacity cap is enforced once at the end."""
        for x, f in zip(xs, fs):
            self._absorb(x, f)
        self._enforce_cap()

    def _absorb(self, x, f) -> bool:
        f = np.asarray(f, dtype=float)
        if (f >= self.ref).any():
            return False
        if self.fs:
            fs = self.objectives
            if ((fs <= f).all(axis=1)).any():
                return False
            keep = ~((f <= fs).all(axis=1) & (f < fs).any(axis=1))
            self.xs = [xi for xi, k in zip(self.xs, keep) if k]
            self.fs = [fi for fi, k in zip(self.fs, keep) if k]
        self.xs.append(np.asarray(x, dtype=float).copy())
        self.fs.append(f.copy())
        return True

    def _enforce_cap(self):
        while len(self.fs) > self.cap:
            contrib = hypervolume_contribution(self.objectives, self.ref, assume_front=True)
            n_over = len(self.fs) - self.cap
            for worst in sorted(np.argsort(contrib)[:n_over], reverse=True):
                del self.xs[worst], self.fs[worst]

    def hypervolume(self) -> float:
        if not self.fs:
            return 0.0
        return hypervolume(self.objectives, self.ref)


def mutate(ind: Individual, rng: np.random.Generator) -> Individual:
    """Sample one offspring x' = x + sigma * N(0, C), inheriting strategy state."""
    try:
        A = np.linalg.cholesky(ind.C)
    except np.linalg.LinAlgError:
        ind.recondition()
        A = np.linalg.cholesky(ind.C)
    step = A @ rng.standard_normal(len(ind.x))
    return Individual(
        x=ind.x + ind.sigma * step,
        sigma=ind.sigma,
        p_succ=ind.p_succ,
        p_c=ind.p_c.copy(),
        C=ind.C.copy(),
        step=step,
    )


def _update_step_size(ind: Individual, success: bool, params: StrategyParams):
    ind.p_succ = (1.0 - params.c_p) * ind.p_succ + params.c_p * (1.0 if success else 0.0)
    ind.sigma *= np.exp((ind.p_succ - params.p_target) / (params.damping * (1.0 - params.p_target)))
    ind.sigma = float(np.clip(ind.sigma, SIGMA_MIN, SIGMA_MAX))


def adapt(parent: Individual, offspring: Individual, success: bool, params: StrategyParams):
    """Success-rule step-size update on both; rank-one covariance update on success."""
    _update_step_size(parent, success, params)
    _update_step_size(offspring, success, params)
    if success and offspring.step is not None:
        c_c, c_cov = params.c_c, params.c_cov
        if offspring.p_succ < params.p_thresh:
            offspring.p_c = (1.0 - c_c) * offspring.p_c + np.sqrt(c_c * (2.0 - c_c)) * offspring.step
            offspring.C = (1.0 - c_cov) * offspring.C + c_cov * np.outer(offspring.p_c, offspring.p_c)
        else:
            offspring.p_c = (1.0 - c_c) * offspring.p_c
            offspring.C = (1.0 - c_cov) * offspring.C + c_cov * (
                np.outer(offspring.p_c, offspring.p_c) + c_c * (2.0 - c_c) * offspring.C
            )
        offspring.recondition()


def _rank_keys(pooled: Sequence[Individual], ref) -> list[tuple[int, float]]:
    """(front rank, -hypervolume contribution) selection key per individual."""
    fronts = nondominated_sort([ind.f for ind in pooled])
    keys = [None] * len(pooled)
    for rank, front in enumerate(fronts):
        pts = np.array([pooled[i].f for i in front])
        # clip to just inside ref so sentinel-valued objectives keep a valid key
        pts = np.minimum(pts, np.asarray(ref) - 1e-12)
        contrib = hypervolume_contribution(pts, ref)
        for i, c in zip(front, contrib):
            keys[i] = (rank, -float(c))
    return keys


def step(population, archive: ParetoArchive, problem, rng, params: StrategyParams):
    """One (mu+mu) generation: mutate, evaluate, adapt, select, archive."""
    mu = len(population)
    offspring = []
    for parent in population:
        child = mutate(parent, rng)
        child.f = np.asarray(problem(child.x), dtype=float)
        offspring.append(child)

    pooled = list(population) + offspring
    keys = _rank_keys(pooled, archive.ref)
    for i in range(mu):
        success = keys[mu + i] < keys[i]
        adapt(population[i], offspring[i], success, params)

    archive.insert_many([c.x for c in offspring], [c.f for c in offspring])

    order = sorted(range(len(pooled)), key=lambda i: (keys[i], i))  # index tiebreak: parents first
    return [pooled[i] for i in order[:mu]]


@dataclass
class RunResult:
    archive: ParetoArchive
    trace: list  # rows of (generation, archive_size, hypervolume, best_error_rate)


def run(problem: Callable, dim: int, cfg: EAConfig, x0: Optional[np.ndarray] = None) -> RunResult:
    """Run the optimizer for cfg.generations; deterministic given cfg.seed.

    When `x0` is given, half the population starts there (plus Gaussian
    jitter, sd 0.1) and half at the origin plus jitter; otherwise the
    whole population starts at the jittered origin.
    """
    rng = np.random.default_rng(cfg.seed)
    params = StrategyParams(dim)
    population = []
    for i in range(cfg.mu):
        center = x0 if (x0 is not None and i % 2 == 0) else np.zeros(dim)
        x = np.asarray(center, dtype=float) + 0.1 * rng.standard_normal(dim)
        ind = Individual(
            x=x,
            sigma=cfg.sigma0,
            p_succ=params.p_target,
            p_c=np.zeros(dim),
            C=np.eye(dim),
        )
        ind.f = np.asarray(problem(ind.x), dtype=float)
        population.append(ind)

    k = len(population[0].f)
    archive = ParetoArchive(np.full(k, cfg.ref_value), cap=cfg.archive_cap)
    for ind in population:
        archive.insert(ind.x, ind.f)

    trace = []

    def record(gen):
        fs = archive.objectives
        best_err = float(fs[:, 0].min()) if len(fs) else float("nan")
        trace.append((gen, len(archive), archive.hypervolume(), best_err))

    record(0)
    for gen in range(1, cfg.generations + 1):
        population = step(population, archive, problem, rng, params)
        if gen % cfg.trace_every == 0 or gen == cfg.generations:
            record(gen)
    return RunResult(archive=archive, trace=trace)
