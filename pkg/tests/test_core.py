from __future__ import annotations

import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import pair_ratio, random_partial
from lipext import (
    UNBOUNDED,
    AffineMap,
    ConstructionError,
    LabeledMap,
    MissingTargetValue,
    PartialMap,
    d_v,
    forced_segment_value,
    is_unbounded,
    lipschitz_constant,
    sup_distance,
    verify_lipschitz,
)


def test_partial_map_lookup_and_dedup():
    f = PartialMap([[0, 0], [1, 0], [0, 0]], [[1], [2], [1]])
    assert len(f) == 2
    assert f.contains([1.0, 0.0]) and not f.contains([2.0, 0.0])
    np.testing.assert_array_equal(f.evaluate([[1, 0], [0, 0]]), [[2], [1]])
    with pytest.raises(MissingTargetValue):
        f.evaluate([[0.5, 0.0]])


def test_partial_map_conflicting_duplicates():
    with pytest.raises(ConstructionError):
        PartialMap([[0.0], [0.0]], [[1.0], [2.0]])


def test_partial_map_is_read_only():
    f = PartialMap([[0.0]], [[1.0]])
    with pytest.raises(ValueError):
        f.us[0, 0] = 3.0


def test_empty_map_needs_dims():
    with pytest.raises(ConstructionError):
        PartialMap([], [])
    assert len(PartialMap([], [], 2, 3)) == 0


def test_labeled_map():
    f = LabeledMap(["a", "b"], [[0.0, 1.0], [2.0, 3.0]])
    np.testing.assert_array_equal(f.evaluate("b"), [[2.0, 3.0]])
    with pytest.raises(MissingTargetValue):
        f.evaluate(["c"])
    with pytest.raises(ConstructionError):
        LabeledMap(["a", "a"], [[0.0], [1.0]])


def test_affine_map():
    v = AffineMap([[0.6, 0.0], [0.0, 0.8]], [1.0, -1.0])
    assert v.operator_norm == pytest.approx(0.8)
    assert v.is_contraction
    np.testing.assert_allclose(v([1.0, 1.0]), [1.6, -0.2])
    assert not AffineMap(2 * np.eye(2)).is_contraction
    with pytest.raises(ConstructionError):
        AffineMap(np.eye(2), [1.0, 2.0, 3.0])


def test_unbounded_marker():
    assert is_unbounded(UNBOUNDED) and not is_unbounded(float("inf"))
    assert float(UNBOUNDED) == float("inf")
    assert pickle.loads(pickle.dumps(UNBOUNDED)) is UNBOUNDED


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(2, 8))
def test_lipschitz_constant_matches_brute_force(seed, k):
    rng = np.random.default_rng(seed)
    xs = rng.standard_normal((k, 3))
    us = rng.standard_normal((k, 2))
    f = PartialMap(xs, us)
    assert lipschitz_constant(f) == pytest.approx(pair_ratio(xs, us), rel=1e-12)
    check = verify_lipschitz(f, tol=0.0)
    assert check.constant == pytest.approx(pair_ratio(xs, us), rel=1e-12)
    assert bool(check) == (check.constant <= 1.0)


def test_random_partial_is_contraction():
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert verify_lipschitz(random_partial(rng, 6, 2, 3))


def test_sup_distance_and_d_v():
    v = AffineMap(np.eye(2))
    u = PartialMap([[0.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]])
    assert sup_distance(u, v) == pytest.approx(1.0)
    assert d_v([[0.0, 0.0]], [[3.0, 4.0], [1.0, 0.0]], v) == pytest.approx(5.0)
    lab = LabeledMap(["p", "q"], [[0.0], [2.0]])
    assert d_v(["p"], ["p", "q"], lab) == 2.0
    assert d_v([], [[0.0, 0.0]], v) == 0.0


def test_forced_segment_value():
    # isometric pair: the midpoint value is forced
    np.testing.assert_allclose(
        forced_segment_value([-1, 0], [1, 0], [0, -1], [0, 1], [0, 0]), [0, 0])
    np.testing.assert_allclose(
        forced_segment_value([0, 0], [4, 0], [0, 0], [0, 4], [1, 0]), [0, 1])
    # contracting pair or point off the segment: nothing is forced
    assert forced_segment_value([-1, 0], [1, 0], [0, 0], [0, 1], [0, 0]) is None
    assert forced_segment_value([-1, 0], [1, 0], [-1, 0], [1, 0], [0, 0.1]) is None
    assert forced_segment_value([-1, 0], [1, 0], [-1, 0], [1, 0], [2, 0]) is None
    with pytest.raises(ValueError):
        forced_segment_value([0, 0], [0, 0], [0, 0], [0, 0], [0, 0])
