from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import pair_ratio
from lipext import (
    UNBOUNDED,
    AffineMap,
    DomainError,
    ExtensionRequest,
    Mode,
    ModeInapplicable,
    NoDefect,
    kirszbraun_extend,
    nonaffine_counterexample,
    sharp_bound,
    sup_distance,
    triangle,
    triangle_family,
)


def test_sharp_bound_examples():
    assert sharp_bound(0.0, 7.0) == 0.0
    assert sharp_bound(1.0, 4.0) == 3.0
    assert sharp_bound(2.0, 0.0) == 2.0
    assert sharp_bound(1.0, UNBOUNDED) is UNBOUNDED
    assert sharp_bound(0.0, UNBOUNDED) == 0.0
    with pytest.raises(ValueError):
        sharp_bound(-1.0, 1.0)


@settings(max_examples=100)
@given(delta=st.floats(0, 1e3), d=st.floats(0, 1e3))
def test_sharp_bound_square(delta, d):
    assert sharp_bound(delta, d) ** 2 == pytest.approx(delta ** 2 + 2 * delta * d,
                                                      rel=1e-12, abs=1e-300)


def test_triangle_coordinates():
    t = triangle(4.0, 1.0)
    np.testing.assert_array_equal(t.x, [-4.0, 0.0])
    np.testing.assert_array_equal(t.y, [4.0, 0.0])
    np.testing.assert_array_equal(t.u.us, [[-4.0, 0.0], [4.0, 0.0]])
    np.testing.assert_allclose(t.v.us, [[-3.2, 0.6], [3.2, 0.6], [0.0, 3.0]], atol=1e-15)
    np.testing.assert_array_equal(t.forced_value, [0.0, 0.0])
    assert t.bound == 3.0


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0.1, 10), delta=st.floats(0.1, 10), n=st.integers(1, 3),
       m=st.integers(2, 4))
def test_triangle_invariants(a, delta, n, m):
    t = triangle(a, delta, n, m)
    assert sup_distance(t.u, t.v) == pytest.approx(delta, rel=1e-12)
    ux, uy = t.u.us
    assert np.linalg.norm(ux - uy) == pytest.approx(np.linalg.norm(t.x - t.y), rel=1e-15)
    assert pair_ratio(t.v.xs, t.v.us) <= 1 + 1e-12
    res = kirszbraun_extend(ExtensionRequest(t.u, t.v, t.queries))
    dist = np.linalg.norm(res.map.evaluate(t.queries)[0] - t.v.us[2])
    assert dist == pytest.approx(sharp_bound(delta, a), abs=1e-9)


def test_triangle_rejects_bad_parameters():
    with pytest.raises(DomainError):
        triangle(0.0, 1.0)
    with pytest.raises(DomainError):
        triangle(1.0, 1.0, m=1)


def test_family():
    fam = triangle_family(1.0, [4.0, 40.0, 400.0])
    np.testing.assert_allclose(fam.bounds, [3.0, 9.0, np.sqrt(801.0)])
    assert triangle_family(1.0, [1.0, 10.0]).family_bound == pytest.approx(np.sqrt(21.0))
    single = triangle_family(1.0, [1.0])
    np.testing.assert_array_equal(single.v.us, triangle(1.0, 1.0).v.us)
    # the union is still a 1-Lipschitz configuration, and each forced value survives
    assert pair_ratio(fam.u.xs, fam.u.us) <= 1 + 1e-12
    res = kirszbraun_extend(ExtensionRequest(fam.u, fam.v, fam.queries))
    dists = np.linalg.norm(res.map.evaluate(fam.queries) - fam.v.evaluate(fam.queries), axis=1)
    np.testing.assert_allclose(dists, fam.bounds, atol=1e-9)
    with pytest.raises(DomainError):
        triangle_family(1.0, [2.0, 1.0])


def test_counterexample_on_triangle():
    t = triangle(4.0, 1.0)
    vx, vy, vz = t.v.us
    ce = nonaffine_counterexample(t.x, t.y, t.z, vx, vy, vz)
    assert ce.params.mode is Mode.PERPENDICULAR
    assert ce.params.lam == pytest.approx(2.4)
    assert abs(2 * ce.params.mu + ce.params.h) <= 1e-12
    assert ce.certified_violation > 0
    with pytest.raises(ModeInapplicable):
        nonaffine_counterexample(t.x, t.y, t.z, vx, vy, vz, mode=Mode.MIDPOINT_OFFSET)


def test_counterexample_perpendicular_example():
    # |x - y| = 4, h = 2, lam = 1: zeta = 1 and threshold (1 + 1) / 2 = 1, so delta = 2
    x, y = np.array([-2.0, 0.0]), np.array([2.0, 0.0])
    vx, vy = np.array([-1.0, 0.0]), np.array([1.0, 0.0])
    vz = np.array([0.0, 1.0])
    ce = nonaffine_counterexample(x, y, (x + y) / 2, vx, vy, vz, mode="perpendicular")
    assert ce.delta == pytest.approx(2.0)
    assert ce.certified_violation == pytest.approx(1 + 2 * np.sqrt(0.75) - 2, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 4))
def test_counterexample_properties(seed, m):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 2)) * 3
    z = (x + y) / 2
    vals = rng.standard_normal((3, m))
    L = pair_ratio(np.array([x, y, z]), vals)
    vals = vals / max(1.0, L * 1.01)
    try:
        ce = nonaffine_counterexample(x, y, z, *vals)
    except NoDefect:
        assert np.linalg.norm(vals[2] - (vals[0] + vals[1]) / 2) < 1e-6
        return
    ux, uy = ce.u.us
    assert np.linalg.norm(ux - uy) == pytest.approx(np.linalg.norm(x - y), rel=1e-9)
    assert np.linalg.norm(ux - vals[0]) == pytest.approx(ce.delta, rel=1e-9)
    assert np.linalg.norm(uy - vals[1]) == pytest.approx(ce.delta, rel=1e-9)
    gap = np.linalg.norm(vals[2] - ce.forced_value) - ce.delta
    assert gap == pytest.approx(ce.certified_violation, abs=1e-9)
    assert ce.certified_violation > 0


def test_counterexample_errors():
    v = AffineMap([[0.5, 0.0], [0.0, 0.5]])
    x, y = np.array([0.0, 0.0]), np.array([2.0, 0.0])
    z = (x + y) / 2
    with pytest.raises(NoDefect):
        nonaffine_counterexample(x, y, z, *v.evaluate([x, y, z]))
    with pytest.raises(ModeInapplicable):
        nonaffine_counterexample([0.0], [2.0], [1.0], [0.0], [0.5], [1.0])
