"""Exact hypervolume (minimization) for 1-4 objectives.

The hypervolume of a point set is the Lebesgue measure of the union of
axis-aligned boxes [point, ref].  2-D is a sorted sweep, 3-D a sweep
along the last axis maintaining a 2-D front, and 4-D an exclusive-volume
recursion over limit sets that bottoms out in the 3-D sweep.
"""

from __future__ import annotations

import numpy as np


class HypervolumeContractError(ValueError):
    """A point fails to strictly dominate the reference point."""


def _dedup_lexsorted(points: np.ndarray) -> np.ndarray:
    """Unique rows in lexicographic order (cheaper than np.unique)."""
    order = np.lexsort(points.T[::-1])
    p = points[order]
    keep = np.empty(len(p), dtype=bool)
    keep[0] = True
    np.any(p[1:] != p[:-1], axis=1, out=keep[1:])
    return p[keep]


def _pareto_filter(points: np.ndarray) -> np.ndarray:
    """Unique, mutually non-dominated subset (minimization)."""
    if len(points) <= 1:
        return points
    points = _dedup_lexsorted(points)
    if points.shape[1] == 2:
        # lexsorted ascending: keep first of each x, then the strictly
        # descending-y staircase
        first_of_x = np.concatenate(([True], points[1:, 0] > points[:-1, 0]))
        points = points[first_of_x]
        ymin = np.minimum.accumulate(points[:, 1])
        keep = np.concatenate(([True], points[1:, 1] < ymin[:-1]))
        return points[keep]
    le = (points[:, None, :] <= points[None, :, :]).all(-1)
    lt = (points[:, None, :] < points[None, :, :]).any(-1)
    dominated = (le & lt).any(axis=0)
    return points[~dominated]


def _hv2(points: np.ndarray, ref) -> float:
    """Sweep over the non-dominated staircase; points must be pareto-filtered."""
    order = np.argsort(points[:, 0])
    xs, ys = points[order, 0], points[order, 1]
    prev = np.concatenate(([ref[1]], ys[:-1]))
    return float(np.sum((ref[0] - xs) * (prev - ys)))


def _hv3(points: np.ndarray, ref) -> float:
    """Sweep along the last axis, maintaining the active 2-D front."""
    order = np.argsort(points[:, 2])
    points = points[order]
    levels = points[:, 2]
    vol = 0.0
    active = np.empty((0, 2))
    i = 0
    n = len(points)
    while i < n:
        level = levels[i]
        j = i
        while j < n and levels[j] == level:
            j += 1
        active = _pareto_filter(np.vstack([active, points[i:j, :2]]))
        upper = levels[j] if j < n else ref[2]
        vol += (upper - level) * _hv2(active, ref[:2])
        i = j
    return float(vol)


def _hv(points: np.ndarray, ref) -> float:
    """Dispatch on dimension; points must be pareto-filtered and dominate ref."""
    n, d = points.shape
    if n == 0:
        return 0.0
    if d == 1:
        return float(ref[0] - points[:, 0].min())
    if d == 2:
        return _hv2(points, ref)
    if d == 3:
        return _hv3(points, ref)
    if n == 1:
        return float(np.prod(ref - points[0]))
    if n == 2:
        # inclusion-exclusion on two boxes
        return float(
            np.prod(ref - points[0])
            + np.prod(ref - points[1])
            - np.prod(ref - np.maximum(points[0], points[1]))
        )
    # exclusive-volume recursion: vol = sum_i [box(p_i) - hv(limit set of p_i)]
    points = points[np.argsort(-points[:, -1])]
    vol = 0.0
    for i in range(n):
        p = points[i]
        vol += float(np.prod(ref - p))
        rest = points[i + 1:]
        if len(rest):
            vol -= _hv(_pareto_filter(np.maximum(rest, p)), ref)
    return vol


def hypervolume(points, ref) -> float:
    """Exact dominated hypervolume of `points` w.r.t. reference point `ref`."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if len(points) == 0 or points.size == 0:
        return 0.0
    ref = np.asarray(ref, dtype=float)
    d = points.shape[1]
    if d != len(ref):
        raise HypervolumeContractError(f"points have {d} coordinates, ref has {len(ref)}")
    if d > 4 or d < 1:
        raise HypervolumeContractError(f"dimension {d} unsupported (1-4)")
    if (points >= ref).any():
        bad = np.argwhere((points >= ref).any(axis=1))[0, 0]
        raise HypervolumeContractError(f"point {points[bad]} does not strictly dominate ref {ref}")
    return _hv(_pareto_filter(points), ref)


def hypervolume_contribution(front, ref, assume_front: bool = False) -> np.ndarray:
    """Leave-one-out hypervolume contribution of every point in `front`.

    Dominated or duplicated members contribute exactly 0.  Set
    `assume_front` when the input is already unique and non-dominated to
    skip the filtering pass.
    """
    front = np.atleast_2d(np.asarray(front, dtype=float))
    n, d = front.shape
    contrib = np.zeros(n)
    nondom = front if assume_front else _pareto_filter(front)
    if len(nondom) < n:
        # dominated or duplicated members contribute 0; the rest keep every
        # other point (a removed point's volume can be reclaimed by points
        # it used to dominate)
        total = hypervolume(nondom, ref)
        for i in range(n):
            member = (nondom == front[i]).all(axis=1).any()
            duplicated = ((front == front[i]).all(axis=1)).sum() > 1
            if member and not duplicated:
                rest = np.delete(front, i, axis=0)
                contrib[i] = total - (hypervolume(rest, ref) if len(rest) else 0.0)
        return contrib
    if d == 2:
        order = np.argsort(front[:, 0])
        xs, ys = front[order, 0], front[order, 1]
        prev_y = np.concatenate(([ref[1]], ys[:-1]))
        next_x = np.concatenate((xs[1:], [ref[0]]))
        contrib[order] = (next_x - xs) * (prev_y - ys)
        return contrib
    total = hypervolume(front, ref)
    for i in range(n):
        rest = np.delete(front, i, axis=0)
        contrib[i] = total - (hypervolume(rest, ref) if len(rest) else 0.0)
    return contrib
