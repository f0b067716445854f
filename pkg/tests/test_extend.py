from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import contract, distinct_points, pair_ratio, random_lipschitz_map, random_partial
from lipext import (
    AffineMap,
    BudgetViolatedOnA,
    DirectionSpec,
    DomainError,
    ExtensionRequest,
    GridField,
    LabeledMap,
    NotAnExtension,
    NotLipschitzInput,
    NotMajorized,
    NotPseudoLipschitz,
    OrderPolicy,
    PartialMap,
    TargetNotAffineContraction,
    build_graph,
    clamped_scalar_extend,
    hull_constrained_extend,
    kirszbraun_extend,
    lifted_extend,
    majorized_extend,
    onedim_extend,
    report,
    triangle,
)

IDENTITY2 = AffineMap(np.eye(2))


# -- kirszbraun ---------------------------------------------------------------


def test_single_point_domain():
    u = PartialMap([[1.0, 1.0]], [[5.0, -1.0]])
    res = kirszbraun_extend(ExtensionRequest(u, queries=[[3.0, 0.0]]))
    np.testing.assert_allclose(res.map.evaluate([[3.0, 0.0]]), [[5.0, -1.0]], atol=1e-9)


def test_isometric_pair_forces_midpoint():
    u = PartialMap([[-4.0, 0.0], [4.0, 0.0]], [[1.0, 2.0], [1.0, 10.0]])
    res = kirszbraun_extend(ExtensionRequest(u, queries=[[0.0, 0.0]]))
    np.testing.assert_array_equal(res.map.evaluate([[0.0, 0.0]]), [[1.0, 6.0]])
    assert res.report.extras["forced_values"] == 1


def test_triangle_value_and_report():
    t = triangle(4.0, 1.0)
    res = kirszbraun_extend(ExtensionRequest(t.u, t.v, t.queries))
    np.testing.assert_allclose(res.map.evaluate(t.queries), [[0.0, 0.0]], atol=1e-12)
    rep = res.report
    assert rep.sup_distance_achieved == pytest.approx(3.0, abs=1e-12)
    assert rep.delta_on_A == pytest.approx(1.0)
    # pairwise maximum over A x B: |v(x) - v(y)| = 6.4
    assert rep.d_v_A_B == pytest.approx(6.4)
    assert rep.lipschitz_constant_output == pytest.approx(1.0)


def test_rejects_non_lipschitz_input():
    u = PartialMap([[0.0], [1.0]], [[0.0], [2.0]])
    with pytest.raises(NotLipschitzInput) as exc:
        kirszbraun_extend(ExtensionRequest(u, queries=[[0.5]]))
    assert exc.value.ratio == pytest.approx(2.0)
    assert exc.value.pair == (0, 1)


def test_queries_inside_domain_and_duplicates_are_absorbed():
    u = PartialMap([[0.0], [1.0]], [[0.0], [0.5]])
    res = kirszbraun_extend(ExtensionRequest(u, queries=[[1.0], [3.0], [3.0]]))
    assert len(res.map) == 3


@pytest.mark.parametrize("policy", list(OrderPolicy))
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), m=st.integers(1, 4))
def test_kirszbraun_output_is_extension(policy, seed, n, m):
    rng = np.random.default_rng(seed)
    u = random_partial(rng, int(rng.integers(1, 6)), n, m)
    q = distinct_points(rng, 6, n)
    res = kirszbraun_extend(ExtensionRequest(u, queries=q, order_policy=policy))
    assert pair_ratio(res.map.xs, res.map.us) <= 1 + 1e-8
    np.testing.assert_array_equal(res.map.evaluate(u.xs), u.us)


def test_kirszbraun_sharp_instance_exactly_lipschitz():
    # a u with constant exactly 1 along several pairs
    u = PartialMap([[0, 0], [1, 0], [0, 1]], [[0, 0], [1, 0], [0, 1]])
    res = kirszbraun_extend(ExtensionRequest(u, queries=[[0.3, 0.3], [2, 2], [-1, 0.5]]))
    assert pair_ratio(res.map.xs, res.map.us) <= 1 + 1e-8


# -- lifted -------------------------------------------------------------------


def test_lifted_zero_budget_returns_v():
    v = PartialMap([[0.0], [1.0], [2.0]], [[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]])
    u = PartialMap([[0.0]], [[0.0, 0.0]])
    res = lifted_extend(ExtensionRequest(u, v, [[1.0], [2.0]], delta=0.0))
    np.testing.assert_array_equal(res.map.evaluate(v.xs), v.us)
    assert res.report.extras["epsilon"] == 0.0


def test_lifted_triangle_attains_bound():
    t = triangle(4.0, 1.0)
    res = lifted_extend(ExtensionRequest(t.u, t.v, t.queries, delta=1.0))
    assert res.report.sup_distance_achieved == pytest.approx(3.0, abs=1e-9)
    # epsilon uses d_v(A, B) = 6.4
    assert res.report.extras["epsilon"] == pytest.approx(np.sqrt(1 + 2 * 6.4))


def test_lifted_budget_checks():
    v = PartialMap([[0.0], [1.0]], [[0.0], [0.0]])
    u = PartialMap([[0.0]], [[2.0]])
    with pytest.raises(BudgetViolatedOnA):
        lifted_extend(ExtensionRequest(u, v, [[1.0]], delta=1.0))
    with pytest.raises(DomainError):
        lifted_extend(ExtensionRequest(u, v, [[1.0]]))
    bad_v = PartialMap([[0.0], [1.0]], [[0.0], [3.0]])
    with pytest.raises(NotLipschitzInput):
        lifted_extend(ExtensionRequest(PartialMap([[0.0]], [[0.0]]), bad_v, [[1.0]], delta=1.0))


# -- clamped scalar -----------------------------------------------------------


def test_clamp_examples():
    zero = AffineMap([[0.0]])
    u = PartialMap([[0.0]], [[0.0]])
    res = clamped_scalar_extend(ExtensionRequest(u, zero, [[3.0]], delta=1.0))
    assert res.map.evaluate([[3.0]])[0, 0] == 1.0
    u = PartialMap([[0.0], [4.0]], [[0.0], [0.0]])
    res = clamped_scalar_extend(ExtensionRequest(u, zero, [[1.0]], delta=10.0))
    assert res.map.evaluate([[1.0]])[0, 0] == 1.0


def test_clamp_needs_scalar_values():
    u = PartialMap([[0.0]], [[0.0, 0.0]])
    with pytest.raises(DomainError):
        clamped_scalar_extend(ExtensionRequest(u, IDENTITY2, [[1.0]], delta=1.0))


# -- hull constrained ---------------------------------------------------------


def test_hull_worked_example():
    u = PartialMap([[0.0, 0.0], [2.0, 0.0]], [[0.0, 0.0], [0.0, 2.0]])
    res = hull_constrained_extend(ExtensionRequest(u, IDENTITY2, [[1.0, 0.0]]))
    np.testing.assert_allclose(res.map.evaluate([[1.0, 0.0]]), [[0.0, 1.0]], atol=1e-8)
    assert res.report.extras["max_hull_residual"] <= 1e-9


def test_hull_constant_residual_reproduces_shifted_target():
    rng = np.random.default_rng(0)
    v = AffineMap(np.array([[0.6, 0.0], [0.0, 0.8]]), [1.0, 2.0])
    A = rng.standard_normal((4, 2))
    c = np.array([0.3, -0.2])
    u = PartialMap(A, v.evaluate(A) + c)
    Q = rng.standard_normal((5, 2))
    res = hull_constrained_extend(ExtensionRequest(u, v, Q))
    np.testing.assert_allclose(res.map.evaluate(Q), v.evaluate(Q) + c, atol=1e-8)


def test_hull_rejects_expanding_target():
    u = PartialMap([[0.0, 0.0]], [[0.0, 0.0]])
    with pytest.raises(TargetNotAffineContraction):
        hull_constrained_extend(ExtensionRequest(u, AffineMap(2 * np.eye(2)), [[1.0, 0.0]]))
    with pytest.raises(DomainError):
        hull_constrained_extend(ExtensionRequest(u, u, [[1.0, 0.0]]))


# -- majorized ----------------------------------------------------------------


def test_majorized_worked_example():
    u = PartialMap([[0.0, 0.0], [2.0, 0.0]], [[0.0, 0.0], [0.0, 2.0]])
    res = majorized_extend(ExtensionRequest(u, IDENTITY2, [[1.0, 0.0]], delta=2 * np.sqrt(2)))
    np.testing.assert_allclose(res.map.evaluate([[1.0, 0.0]]), [[0.0, 1.0]], atol=1e-8)


def test_majorized_labels():
    v = LabeledMap(["a", "b", "c"], [[0.0, 0.0], [2.0, 0.0], [1.0, 0.0]])
    u = LabeledMap(["a", "b"], [[0.0, 0.0], [0.0, 2.0]])
    res = majorized_extend(ExtensionRequest(u, v, ["c"], delta=2 * np.sqrt(2)))
    np.testing.assert_allclose(res.map.evaluate("c"), [[0.0, 1.0]], atol=1e-8)
    assert res.report.lipschitz_constant_output is None
    with pytest.raises(DomainError):
        majorized_extend(ExtensionRequest(u, v, ["c"], delta=3.0,
                                          order_policy=OrderPolicy.SORTED_BY_DISTANCE))


def test_majorized_rejects_large_increments():
    v = LabeledMap(["a", "b"], [[0.0], [1.0]])
    u = LabeledMap(["a", "b"], [[0.0], [2.0]])
    with pytest.raises(NotMajorized):
        majorized_extend(ExtensionRequest(u, v, [], delta=5.0))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_majorized_with_tabulated_target(seed):
    rng = np.random.default_rng(seed)
    pts = distinct_points(rng, 10, 2)
    vals = rng.standard_normal((10, 3)) * 3  # v need not be Lipschitz here
    k = 4
    uA = contract(rng, vals[:k], vals[:k] + rng.standard_normal((k, 3)))
    u = PartialMap(pts[:k], uA)
    v = PartialMap(pts, vals)
    res = majorized_extend(ExtensionRequest(u, v, pts[k:], delta_from_data=True))
    ext = res.map.evaluate(pts)
    assert pair_ratio(vals, ext) <= 1 + 1e-8
    assert res.report.sup_distance_achieved <= res.report.delta_on_A + 1e-6


# -- onedim -------------------------------------------------------------------


def _field(func, dims=(12, 12)):
    return GridField.from_function(dims, 1.0, (0.0, 0.0), func)


def test_onedim_constant_target_is_mcshane():
    field = _field(lambda X: np.zeros((len(X), 2)))
    graph = build_graph(field, DirectionSpec([1.0, 0.0]))
    u = PartialMap([[0.0, 0.0], [6.0, 0.0]], [[0.0, 0.0], [2.0, 0.0]])
    res = onedim_extend(ExtensionRequest(u, field, [[3.0, 0.0], [6.0, 5.0]]), graph)
    # McShane: min(t_i + d(q, x_i)) with straight grid paths
    np.testing.assert_allclose(res.map.evaluate([[3.0, 0.0], [6.0, 5.0]]),
                               [[3.0, 0.0], [7.0, 0.0]], atol=1e-12)
    assert res.report.extras["w"].tolist() == [1.0, 0.0]


def test_onedim_degenerate_form_forces_constant():
    field = GridField.from_function((8,), 1.0, (0.0,), lambda X: np.stack([X[:, 0], 0 * X[:, 0]], 1))
    graph = build_graph(field, DirectionSpec([0.0, 1.0]))
    u = PartialMap([[0.0], [1.0]], [[0.0, 0.7], [1.0, 0.7]])
    res = onedim_extend(ExtensionRequest(u, None, [[4.0], [7.0]]), graph)
    np.testing.assert_allclose(res.map.us[:, 1], 0.7)
    bad = PartialMap([[0.0], [1.0]], [[0.0, 0.0], [1.0, 0.5]])
    with pytest.raises(NotPseudoLipschitz):
        onedim_extend(ExtensionRequest(bad, None, [[4.0]]), graph)


def test_onedim_residual_must_lie_on_line():
    field = _field(lambda X: np.zeros((len(X), 2)))
    graph = build_graph(field, DirectionSpec([1.0, 0.0]))
    u = PartialMap([[0.0, 0.0]], [[0.0, 1.0]])
    with pytest.raises(DomainError):
        onedim_extend(ExtensionRequest(u, field, [[1.0, 1.0]]), graph)


def test_onedim_clamp():
    field = _field(lambda X: np.zeros((len(X), 2)))
    graph = build_graph(field, DirectionSpec([1.0, 0.0]))
    u = PartialMap([[0.0, 0.0]], [[0.5, 0.0]])
    res = onedim_extend(ExtensionRequest(u, field, [[9.0, 0.0]], delta=1.0), graph)
    np.testing.assert_allclose(res.map.evaluate([[9.0, 0.0]]), [[1.0, 0.0]])


# -- report -------------------------------------------------------------------


def test_report_no_queries():
    rng = np.random.default_rng(3)
    u = random_partial(rng, 4, 2, 2)
    v = AffineMap(np.eye(2) * 0.5)
    rep = report(u, u, v)
    assert rep.sup_distance_achieved == pytest.approx(rep.delta_on_A)


def test_report_rejects_non_extension():
    u = PartialMap([[0.0]], [[0.0]])
    with pytest.raises(NotAnExtension):
        report(PartialMap([[0.0]], [[1.0]]), u)
    with pytest.raises(NotAnExtension):
        report(PartialMap([[1.0]], [[0.0]]), u)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_lifted_random_within_bound(seed):
    rng = np.random.default_rng(seed)
    B = distinct_points(rng, 7, 2)
    vB = random_lipschitz_map(rng, B, 2)
    uA = contract(rng, B[:3], vB[:3] + rng.standard_normal((3, 2)))
    res = lifted_extend(ExtensionRequest(PartialMap(B[:3], uA), PartialMap(B, vB), B[3:],
                                         delta_from_data=True))
    rep = res.report
    assert rep.lipschitz_constant_output <= 1 + 1e-8
    assert rep.sup_distance_achieved <= rep.sharp_bound + 1e-6
