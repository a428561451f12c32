import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faircredit.hypervolume import (
    HypervolumeContractError,
    hypervolume,
    hypervolume_contribution,
)
from .conftest import monte_carlo_hypervolume


def test_single_point_box():
    # exact box volume: (1.1 - 0.3) * (1.1 - 0.4) = 0.56
    assert hypervolume([[0.3, 0.4]], [1.1, 1.1]) == pytest.approx(0.56, abs=1e-12)


def test_single_point_box_high_dim():
    pt = [0.1, 0.2, 0.3, 0.4]
    ref = [1.1] * 4
    expected = np.prod([r - p for p, r in zip(pt, ref)])
    assert hypervolume([pt], ref) == pytest.approx(expected, abs=1e-12)


def test_empty_front_is_zero():
    assert hypervolume(np.empty((0, 3)), [1.1, 1.1, 1.1]) == 0.0


def test_dominated_point_ignored():
    front = [[0.2, 0.8], [0.8, 0.2]]
    with_dup = front + [[0.9, 0.9], [0.2, 0.8]]
    ref = [1.1, 1.1]
    assert hypervolume(with_dup, ref) == pytest.approx(hypervolume(front, ref), abs=1e-14)


def test_three_point_3d_inclusion_exclusion():
    # Union of three boxes [p, ref], computed by inclusion-exclusion by hand.
    pts = np.array([[0.1, 0.5, 0.7], [0.4, 0.2, 0.6], [0.6, 0.6, 0.1]])
    ref = np.array([1.0, 1.0, 1.0])

    def box(p):
        return np.prod(ref - p)

    def inter(*ps):
        return np.prod(ref - np.max(ps, axis=0))

    expected = (
        box(pts[0]) + box(pts[1]) + box(pts[2])
        - inter(pts[0], pts[1]) - inter(pts[0], pts[2]) - inter(pts[1], pts[2])
        + inter(pts[0], pts[1], pts[2])
    )
    assert hypervolume(pts, ref) == pytest.approx(expected, abs=1e-12)


def test_four_point_4d_inclusion_exclusion():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 1, size=(4, 4))
    ref = np.full(4, 1.1)
    total = 0.0
    for k in range(1, 5):
        for subset in itertools.combinations(range(4), k):
            vol = np.prod(ref - pts[list(subset)].max(axis=0))
            total += (-1) ** (k + 1) * vol
    assert hypervolume(pts, ref) == pytest.approx(total, rel=1e-12)


def test_ref_must_be_dominated():
    with pytest.raises(HypervolumeContractError):
        hypervolume([[0.5, 1.2]], [1.1, 1.1])
    with pytest.raises(HypervolumeContractError):
        hypervolume([[1.1, 0.5]], [1.1, 1.1])


def test_dimension_bounds():
    with pytest.raises(HypervolumeContractError):
        hypervolume([[0.1] * 5], [1.1] * 5)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_permutation_invariance(d):
    rng = np.random.default_rng(11)
    pts = rng.uniform(0, 1, size=(30, d))
    ref = np.full(d, 1.1)
    base = hypervolume(pts, ref)
    for seed in range(5):
        perm = np.random.default_rng(seed).permutation(len(pts))
        assert hypervolume(pts[perm], ref) == pytest.approx(base, rel=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_monotone_in_added_points(d):
    rng = np.random.default_rng(23)
    pts = rng.uniform(0, 1, size=(40, d))
    ref = np.full(d, 1.1)
    prev = 0.0
    for k in range(1, len(pts) + 1, 5):
        cur = hypervolume(pts[:k], ref)
        assert cur >= prev - 1e-14
        prev = cur


@pytest.mark.parametrize("d,seed", [(3, 1), (3, 2), (4, 3), (4, 4)])
def test_monte_carlo_agreement(d, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.1, 1.0, size=(40, d))
    ref = np.full(d, 1.1)
    exact = hypervolume(pts, ref)
    est = monte_carlo_hypervolume(pts, ref, n_samples=400_000, seed=seed)
    assert abs(exact - est) / exact < 0.01


@given(
    st.lists(
        st.tuples(st.floats(0, 1), st.floats(0, 1)),
        min_size=1,
        max_size=25,
    )
)
@settings(max_examples=60, deadline=None)
def test_2d_matches_3d_with_slack_axis(points):
    """Padding a constant coordinate multiplies the volume by its slack."""
    pts = np.array(points)
    ref2 = np.array([1.1, 1.1])
    hv2 = hypervolume(pts, ref2)
    padded = np.column_stack([pts, np.full(len(pts), 0.6)])
    hv3 = hypervolume(padded, np.array([1.1, 1.1, 1.1]))
    assert hv3 == pytest.approx(hv2 * 0.5, rel=1e-9, abs=1e-12)


def test_contribution_singleton():
    out = hypervolume_contribution(np.array([[0.3, 0.4]]), np.array([1.1, 1.1]))
    assert out[0] == pytest.approx(0.56, abs=1e-12)


def test_contribution_duplicates_are_zero():
    front = np.array([[0.2, 0.8], [0.5, 0.5], [0.2, 0.8]])
    out = hypervolume_contribution(front, np.array([1.1, 1.1]))
    assert out[0] == 0.0 and out[2] == 0.0
    assert out[1] > 0.0


def test_contribution_dominated_is_zero():
    front = np.array([[0.2, 0.2], [0.5, 0.5]])
    out = hypervolume_contribution(front, np.array([1.1, 1.1]))
    assert out[1] == 0.0


@pytest.mark.parametrize("d", [2, 3, 4])
def test_contribution_matches_leave_one_out(d):
    rng = np.random.default_rng(d)
    pts = rng.uniform(0.1, 1.0, size=(12, d))
    ref = np.full(d, 1.1)
    out = hypervolume_contribution(pts, ref)
    total = hypervolume(pts, ref)
    for i in range(len(pts)):
        rest = np.delete(pts, i, axis=0)
        expected = total - hypervolume(rest, ref)
        # dominated/duplicate members contribute exactly zero
        assert out[i] == pytest.approx(max(expected, 0.0), abs=1e-10)


def test_contribution_sums_below_total():
    rng = np.random.default_rng(9)
    pts = rng.uniform(0.1, 1.0, size=(30, 3))
    ref = np.full(3, 1.1)
    out = hypervolume_contribution(pts, ref)
    assert (out >= 0).all()
    assert out.sum() <= hypervolume(pts, ref) + 1e-12
