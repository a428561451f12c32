"""Accuracy and group-fairness bias measures over binary predictions.

All measures are absolute differences of a group-conditional probability
between the protected group (z=0) and the non-protected group (z=1).
Labels and predictions live in {-1, +1} with +1 the positive outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError


class BiasMeasureId(Enum):
    DI = "DI"            # disparate impact: P(yhat=1 | z)
    EO = "EO"            # equal opportunity: P(yhat=1 | z, y=1)
    DM_OMR = "DM_OMR"    # overall misclassification rate: P(yhat != y | z)
    DM_FPR = "DM_FPR"    # false positive rate: P(yhat != y | y=-1, z)
    DM_FNR = "DM_FNR"    # false negative rate: P(yhat != y | y=1, z)
    DM_FOR = "DM_FOR"    # false omission rate: P(yhat != y | yhat=-1, z)
    DM_FDR = "DM_FDR"    # false discovery rate: P(yhat != y | yhat=1, z)


@dataclass(frozen=True)
class LabeledPredictions:
    """Actual labels, predictions and group membership for one attribute."""

    y: np.ndarray
    yhat: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y)
        yhat = np.asarray(self.yhat)
        z = np.asarray(self.z)
        if not (len(y) == len(yhat) == len(z)):
            raise DataError("y, yhat and z must have equal length")
        if not np.isin(y, (-1, 1)).all() or not np.isin(yhat, (-1, 1)).all():
            raise DataError("labels and predictions must be in {-1, +1}")
        if not np.isin(z, (0, 1)).all():
            raise DataError("group membership must be in {0, 1}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "yhat", yhat)
        object.__setattr__(self, "z", z)


@dataclass(frozen=True)
class GroupConfusion:
    """Per-group confusion counts; the sufficient statistic for every measure.

    Index 0 holds the protected group, index 1 the non-protected group.
    """

    n: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    tn: np.ndarray
    fn: np.ndarray

    def __post_init__(self):
        for g in (0, 1):
            total = self.tp[g] + self.fp[g] + self.tn[g] + self.fn[g]
            if total != self.n[g]:
                raise DataError(f"group {g}: confusion cells sum to {total}, expected {self.n[g]}")


@dataclass(frozen=True)
class BiasResult:
    """A bias measure value plus a flag marking undefined conditionals.

    When the conditioning event is empty in either group the value is the
    sentinel 1.0 and ``undefined`` is set, so a degenerate predictor is
    never rewarded during optimization.
    """

    value: float
    undefined: bool = False


def confusion_by_group(lp: LabeledPredictions) -> GroupConfusion:
    """Count per-group confusion cells in a single pass."""
    n = np.zeros(2, dtype=np.int64)
    tp = np.zeros(2, dtype=np.int64)
    fp = np.zeros(2, dtype=np.int64)
    tn = np.zeros(2, dtype=np.int64)
    fn = np.zeros(2, dtype=np.int64)
    for g in (0, 1):
        mask = lp.z == g
        y, yhat = lp.y[mask], lp.yhat[mask]
        n[g] = mask.sum()
        tp[g] = np.count_nonzero((y == 1) & (yhat == 1))
        fp[g] = np.count_nonzero((y == -1) & (yhat == 1))
        tn[g] = np.count_nonzero((y == -1) & (yhat == -1))
        fn[g] = np.count_nonzero((y == 1) & (yhat == -1))
    return GroupConfusion(n=n, tp=tp, fp=fp, tn=tn, fn=fn)


def accuracy(gc: GroupConfusion) -> float:
    total = int(gc.n.sum())
    if total == 0:
        raise DataError("accuracy of an empty sample is undefined")
    return float((gc.tp.sum() + gc.tn.sum()) / total)


def _conditional(gc: GroupConfusion, mid: BiasMeasureId, g: int):
    """Return (numerator, denominator) counts of the group-conditional probability."""
    tp, fp, tn, fn = gc.tp[g], gc.fp[g], gc.tn[g], gc.fn[g]
    if mid is BiasMeasureId.DI:
        return tp + fp, gc.n[g]
    if mid is BiasMeasureId.EO:
        return tp, tp + fn
    if mid is BiasMeasureId.DM_OMR:
        return fp + fn, gc.n[g]
    if mid is BiasMeasureId.DM_FPR:
        return fp, fp + tn
    if mid is BiasMeasureId.DM_FNR:
        return fn, tp + fn
    if mid is BiasMeasureId.DM_FOR:
        return fn, fn + tn
    if mid is BiasMeasureId.DM_FDR:
        return fp, tp + fp
    raise ValueError(f"unknown bias measure {mid!r}")


def bias_measure(gc: GroupConfusion, mid: BiasMeasureId) -> BiasResult:
    """Absolute difference of the measure's conditional probability across groups."""
    probs = []
    for g in (0, 1):
        num, den = _conditional(gc, mid, g)
        if den == 0:
            return BiasResult(value=1.0, undefined=True)
        probs.append(num / den)
    return BiasResult(value=abs(probs[0] - probs[1]))


def bias_vector(y, yhat, z_attrs: dict, measure_ids, attr_names, collapse: bool = False) -> np.ndarray:
    """Objective vector: error rate first, then the selected bias components.

    Without collapse the bias components are one per (measure, attribute)
    pair, measures outermost.  With collapse each measure contributes a
    single component equal to its maximum over the attributes.
    """
    if not measure_ids or not attr_names:
        raise DataError("need at least one measure and one attribute")
    for a in attr_names:
        if a not in z_attrs:
            raise DataError(f"unknown sensitive attribute {a!r}")
    confusions = {a: confusion_by_group(LabeledPredictions(y, yhat, z_attrs[a])) for a in attr_names}
    any_gc = next(iter(confusions.values()))
    components = [1.0 - accuracy(any_gc)]
    for mid in measure_ids:
        values = [bias_measure(confusions[a], mid).value for a in attr_names]
        if collapse:
            components.append(max(values))
        else:
            components.extend(values)
    return np.asarray(components, dtype=float)
