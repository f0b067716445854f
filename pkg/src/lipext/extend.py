"""Extension engines.

Every engine takes an ``ExtensionRequest`` and returns an ``ExtensionResult``
``(map, report)``. Vector-valued engines extend one query at a time: the value
at a query is a point of an intersection of balls (plus side constraints), and
once chosen it joins the data for later queries, so the outputs are mutually
compatible. On the original domain the output reproduces ``u`` bit for bit;
queries that coincide with domain points are absorbed rather than recomputed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from . import minmax
from ._backend import kernels
from .core import (
    TOL_ISO,
    AffineMap,
    ExtensionReport,
    LabeledMap,
    PartialMap,
    _as_points,
    d_v,
    forced_segment_value,
    lipschitz_constant,
    sup_distance,
    verify_lipschitz,
)
from .errors import (
    BudgetViolatedOnA,
    DomainError,
    NotAnExtension,
    NotLipschitzInput,
    NotMajorized,
    NotPseudoLipschitz,
    SolverInfeasible,
    TargetNotAffineContraction,
)
from .pseudometric import DirectionSpec, GridField, PseudoMetricGraph, check_pseudo_lipschitz
from .sharpness import sharp_bound

LIPSCHITZ_TOL = 1e-9
RESIDUAL_LINE_TOL = 1e-9

CONVENTIONS = {
    "mcshane": "inf_y t(y) + d(x, y)",
    "clamp": "min(max(u0, v - delta), v + delta)",
    "epsilon": "sqrt(delta^2 + 2 delta d_v(A, B))",
}


class OrderPolicy(enum.Enum):
    INPUT = "input"
    SORTED_BY_DISTANCE = "sorted-by-distance"


@dataclass(frozen=True, eq=False)
class ExtensionRequest:
    """Data for one extension run.

    ``u`` is the map on ``A``; ``v`` the reference target (tabulated, affine or
    grid); ``queries`` the points to add (labels for label-keyed maps).
    ``delta=None`` with ``delta_from_data=True`` uses ``sup |u - v|`` on ``A``.
    """

    u: PartialMap | LabeledMap
    v: Any = None
    queries: Any = ()
    delta: float | None = None
    delta_from_data: bool = False
    w: DirectionSpec | None = None
    order_policy: OrderPolicy = OrderPolicy.INPUT
    feas_tol: float = minmax.DEFAULT_FEAS_TOL
    max_iter: int = minmax.DEFAULT_MAX_ITER


class ExtensionResult(NamedTuple):
    map: PartialMap | LabeledMap
    report: ExtensionReport


# ---------------------------------------------------------------------------
# helpers


def _query_points(req: ExtensionRequest) -> np.ndarray:
    """New query points in processing order (duplicates and points of A dropped)."""
    u = req.u
    q = np.asarray(req.queries, dtype=np.float64)
    if q.size == 0:
        return np.zeros((0, u.dim_domain))
    q = _as_points(q, u.dim_domain, "queries")
    seen, keep = set(), []
    for i, p in enumerate(map(tuple, q)):
        if p in seen or u.contains(p):
            continue
        seen.add(p)
        keep.append(i)
    q = q[keep]
    if OrderPolicy(req.order_policy) is OrderPolicy.SORTED_BY_DISTANCE and len(u):
        dist = np.min(np.linalg.norm(q[:, None, :] - u.xs[None, :, :], axis=2), axis=1)
        q = q[np.argsort(dist, kind="stable")]
    return q


def _query_labels(req: ExtensionRequest) -> list[str]:
    qs = [req.queries] if isinstance(req.queries, str) else list(req.queries)
    out, seen = [], set()
    for s in map(str, qs):
        if s in seen or req.u.contains(s):
            continue
        seen.add(s)
        out.append(s)
    if OrderPolicy(req.order_policy) is OrderPolicy.SORTED_BY_DISTANCE:
        raise DomainError("label-keyed domains have no distance to sort by")
    return out


def _budget(req: ExtensionRequest, required: bool) -> float | None:
    delta_a = sup_distance(req.u, req.v)
    if req.delta is None:
        if req.delta_from_data:
            return delta_a
        if required:
            raise DomainError("this method needs a delta budget (or delta_from_data)")
        return None
    delta = float(req.delta)
    if not delta >= 0:
        raise DomainError("delta must be nonnegative")
    if delta_a > delta * (1.0 + 1e-12) + 1e-15:
        raise BudgetViolatedOnA(f"sup |u - v| on A is {delta_a!r} > delta = {delta!r}")
    return delta


def _require_lipschitz(f: PartialMap, what: str = "u"):
    chk = verify_lipschitz(f, LIPSCHITZ_TOL)
    if not chk:
        raise NotLipschitzInput(f"{what} has Lipschitz constant {chk.constant!r} > 1",
                                pair=chk.pair, ratio=chk.constant)


def _target_lipschitz_on(v, points: np.ndarray):
    """Check ``v`` is 1-Lipschitz on the finite set where it will be used."""
    if isinstance(v, AffineMap):
        if not v.is_contraction:
            raise NotLipschitzInput(f"affine target has norm {v.operator_norm!r} > 1",
                                    ratio=v.operator_norm)
        return
    _require_lipschitz(PartialMap(points, v.evaluate(points)), "v")


def _forced_value(xs: np.ndarray, us: np.ndarray, q: np.ndarray):
    """Shortcut: a value pinned by an isometric pair through ``q``."""
    n = xs.shape[0]
    if n < 2:
        return None
    dx = np.linalg.norm(xs[:, None, :] - xs[None, :, :], axis=2)
    du = np.linalg.norm(us[:, None, :] - us[None, :, :], axis=2)
    iso = np.triu(np.abs(du - dx) <= TOL_ISO * dx, k=1) & (dx > 0)
    dq = np.linalg.norm(xs - q, axis=1)
    # q on segment [x_i, x_j] iff |x_i - q| + |q - x_j| == |x_i - x_j|
    on_seg = np.abs(dq[:, None] + dq[None, :] - dx) <= TOL_ISO * dx
    for i, j in zip(*np.nonzero(iso & on_seg)):
        val = forced_segment_value(xs[i], xs[j], us[i], us[j], q)
        if val is not None:
            return val
    return None


def _solve_or_fail(system: minmax.BallSystem, req: ExtensionRequest, where) -> np.ndarray:
    res = minmax.solve(system, req.feas_tol, req.max_iter)
    if not res.feasible:
        raise SolverInfeasible(
            f"solver reported no feasible value at {where} (min F = {res.objective:.3e}, "
            f"hull residual {res.hull_residual:.3e}) although one exists")
    return res.witness


def report(ext: PartialMap | LabeledMap, u: PartialMap | LabeledMap, v=None,
           method: str = "", conventions: dict | None = None,
           extras: dict | None = None) -> ExtensionReport:
    """Summary numbers for an extension ``ext`` of ``u`` against target ``v``.

    Raises ``NotAnExtension`` when ``ext`` moves a value of ``u`` by more than
    ``1e-12``. With ``v=None`` the distance fields are ``None``.
    """
    labeled = isinstance(u, LabeledMap)
    keys_a = list(u.labels) if labeled else u.xs
    keys_b = list(ext.labels) if labeled else ext.xs
    try:
        on_a = ext.evaluate(keys_a)
    except KeyError as exc:
        raise NotAnExtension(f"extension does not cover the domain of u: {exc}") from None
    gap = float(np.max(np.linalg.norm(on_a - u.us, axis=1))) if len(u) else 0.0
    if gap > 1e-12:
        raise NotAnExtension(f"extension differs from u on A by {gap!r}")
    lip = None if labeled else lipschitz_constant(ext)
    if v is None:
        return ExtensionReport(method, lip, None, None, None, None, (),
                               dict(conventions or {}), dict(extras or {}))
    delta_a = sup_distance(u, v)
    dvab = d_v(keys_a, keys_b, v)
    vals = v.evaluate(keys_b)
    res = np.linalg.norm(vals - ext.us, axis=1)
    keys = keys_b if labeled else [tuple(float(c) for c in p) for p in keys_b]
    return ExtensionReport(
        method=method,
        lipschitz_constant_output=lip,
        delta_on_A=delta_a,
        d_v_A_B=dvab,
        sharp_bound=sharp_bound(delta_a, dvab),
        sup_distance_achieved=float(res.max()) if res.size else 0.0,
        per_point_residuals=tuple(zip(keys, map(float, res))),
        conventions=dict(conventions or {}),
        extras=dict(extras or {}),
    )


def _sequential_balls(u: PartialMap, queries: np.ndarray, req: ExtensionRequest,
                      hull: minmax.HullConstraint | None = None,
                      hull_base=None, use_forced: bool = True):
    xs = [*u.xs]
    us = [*u.us]
    n_forced = 0
    for q in queries:
        X = np.asarray(xs)
        U = np.asarray(us)
        val = _forced_value(X, U, q) if use_forced else None
        if val is not None:
            n_forced += 1
        else:
            radii = np.linalg.norm(X - q, axis=1)
            constraint = None
            if hull is not None:
                constraint = minmax.HullConstraint(hull_base(q), hull.generators)
            val = _solve_or_fail(minmax.BallSystem(U, radii, constraint), req, q.tolist())
        xs.append(q)
        us.append(val)
    out = PartialMap(np.asarray(xs), np.asarray(us), u.dim_domain, u.dim_codomain)
    return out, n_forced


def _extras(req: ExtensionRequest, **more) -> dict:
    return {"order_policy": OrderPolicy(req.order_policy).value, **more}


# ---------------------------------------------------------------------------
# engines


def kirszbraun_extend(req: ExtensionRequest) -> ExtensionResult:
    """1-Lipschitz extension of a 1-Lipschitz ``u`` to the query points."""
    u = req.u
    _require_lipschitz(u)
    queries = _query_points(req)
    out, n_forced = _sequential_balls(u, queries, req)
    rep = report(out, u, req.v, "kirszbraun", CONVENTIONS,
                 _extras(req, forced_values=n_forced))
    return ExtensionResult(out, rep)


def lifted_extend(req: ExtensionRequest) -> ExtensionResult:
    """Extension staying within ``sqrt(delta^2 + 2 delta d_v(A, B))`` of ``v``.

    Lift to ``R^{n+1}``: ``h(x, 0) = v(x)`` on ``B`` and ``h(x, eps) = u(x)`` on
    ``A``. This ``h`` is 1-Lipschitz, so its Kirszbraun extension at
    ``(q, eps)`` is a value within ``eps`` of ``v(q)``.
    """
    u, v = req.u, req.v
    if v is None:
        raise DomainError("lifted extension needs a target v")
    _require_lipschitz(u)
    delta = _budget(req, required=True)
    queries = _query_points(req)
    B = np.vstack([u.xs, queries])
    _target_lipschitz_on(v, B)
    dvab = d_v(u.xs, B, v)
    eps = sharp_bound(delta, dvab)
    n, m = u.dim_domain, u.dim_codomain
    if eps == 0.0 or queries.shape[0] == 0:
        vals = v.evaluate(queries) if queries.shape[0] else np.zeros((0, m))
        out = PartialMap(np.vstack([u.xs, queries]), np.vstack([u.us, vals]), n, m)
        n_forced = 0
    else:
        vB = v.evaluate(B)
        lifted_x = np.vstack([np.hstack([B, np.zeros((B.shape[0], 1))]),
                              np.hstack([u.xs, np.full((len(u), 1), eps)])])
        lifted_u = np.vstack([vB, u.us])
        h = PartialMap(lifted_x, lifted_u, n + 1, m)
        lifted_q = np.hstack([queries, np.full((queries.shape[0], 1), eps)])
        ext, n_forced = _sequential_balls(h, lifted_q, req)
        vals = ext.evaluate(lifted_q)
        out = PartialMap(np.vstack([u.xs, queries]), np.vstack([u.us, vals]), n, m)
    rep = report(out, u, v, "lifted", CONVENTIONS,
                 _extras(req, epsilon=eps, delta_budget=delta, forced_values=n_forced))
    return ExtensionResult(out, rep)


def clamped_scalar_extend(req: ExtensionRequest) -> ExtensionResult:
    """Scalar McShane extension clamped into ``[v - delta, v + delta]``."""
    u, v = req.u, req.v
    if u.dim_codomain != 1:
        raise DomainError("clamped scalar extension needs scalar values (m = 1)")
    if v is None:
        raise DomainError("clamped scalar extension needs a target v")
    _require_lipschitz(u)
    delta = _budget(req, required=True)
    queries = _query_points(req)
    B = np.vstack([u.xs, queries])
    _target_lipschitz_on(v, B)
    if queries.shape[0]:
        dist = np.linalg.norm(queries[:, None, :] - u.xs[None, :, :], axis=2)
        base = np.min(u.us[:, 0][None, :] + dist, axis=1)
        vq = v.evaluate(queries)[:, 0]
        vals = np.minimum(np.maximum(base, vq - delta), vq + delta).reshape(-1, 1)
    else:
        vals = np.zeros((0, 1))
    out = PartialMap(B, np.vstack([u.us, vals]), u.dim_domain, 1)
    rep = report(out, u, v, "clamped_scalar", CONVENTIONS,
                 _extras(req, delta_budget=delta))
    return ExtensionResult(out, rep)


def onedim_extend(req: ExtensionRequest, graph: PseudoMetricGraph) -> ExtensionResult:
    """Extension whose residual ``v - u`` stays on the line ``R w``.

    The scalar trace ``t = <u, w>`` is extended by McShane's formula in the
    graph pseudo-metric and optionally clamped into ``<v, w> +- delta``.
    """
    u = req.u
    field: GridField = graph.field
    v = req.v if req.v is not None else field
    if req.v is None:
        req = ExtensionRequest(**{**req.__dict__, "v": field})
    w = req.w if req.w is not None else graph.w
    if not isinstance(w, DirectionSpec):
        w = DirectionSpec(w)
    if not np.allclose(w.w, graph.w.w, rtol=0, atol=1e-12):
        raise DomainError("request direction differs from the graph's direction")
    if u.dim_codomain != w.dim:
        raise DomainError("direction and values have different dimensions")
    queries = _query_points(req)
    nodes_a = graph.node_index(u.xs)
    nodes_q = graph.node_index(queries) if queries.shape[0] else np.zeros(0, dtype=np.int64)
    vA = v.evaluate(u.xs)
    resid = vA - u.us
    along = resid @ w.w
    off = np.linalg.norm(resid - along[:, None] * w.w, axis=1)
    if np.any(off > RESIDUAL_LINE_TOL * (1.0 + np.abs(along))):
        raise DomainError("v - u does not lie on the line spanned by w on A")
    t = u.us @ w.w
    chk = check_pseudo_lipschitz(u.xs, t, graph, LIPSCHITZ_TOL)
    if not chk:
        raise NotPseudoLipschitz(
            f"<u, w> is not 1-Lipschitz for the pseudo-metric (ratio {chk.ratio!r})",
            pair=chk.pair, ratio=chk.ratio)
    delta = _budget(req, required=False)
    if queries.shape[0]:
        tq = np.full(queries.shape[0], np.inf)
        for node, tv in zip(nodes_a, t):
            tq = np.minimum(tq, tv + graph.distances_from(int(node))[nodes_q])
        vq = v.evaluate(queries)
        sq = vq @ w.w
        if delta is not None:
            tq = np.minimum(np.maximum(tq, sq - delta), sq + delta)
        vals = vq - np.outer(sq, w.w) + np.outer(tq, w.w)
    else:
        vals = np.zeros((0, u.dim_codomain))
    out = PartialMap(np.vstack([u.xs, queries]), np.vstack([u.us, vals]),
                     u.dim_domain, u.dim_codomain)
    rep = report(out, u, v, "onedim", CONVENTIONS,
                 _extras(req, delta_budget=delta, w=w.w, distance="graph shortest path",
                         clamped_edges=graph.diagnostics.get("clamped_edges", 0)))
    return ExtensionResult(out, rep)


def hull_constrained_extend(req: ExtensionRequest) -> ExtensionResult:
    """Extension whose residuals ``v - u`` stay in the hull of those on ``A``.

    Needs an affine 1-Lipschitz target. Each value is a point of the usual
    ball intersection restricted to ``v(q) + Conv{u(z) - v(z) : z in A}``.
    """
    u, v = req.u, req.v
    if not isinstance(v, AffineMap):
        raise DomainError("hull-constrained extension needs an affine target")
    if not v.is_contraction:
        raise TargetNotAffineContraction(
            f"affine target has operator norm {v.operator_norm!r} > 1")
    if len(u) == 0:
        raise DomainError("hull-constrained extension needs a nonempty domain")
    _require_lipschitz(u)
    delta = _budget(req, required=False)
    queries = _query_points(req)
    gens = u.us - v.evaluate(u.xs)
    hull = minmax.HullConstraint(np.zeros(u.dim_codomain), gens)
    out, _ = _sequential_balls(u, queries, req, hull=hull, hull_base=v, use_forced=False)
    res_q = (v.evaluate(queries) - out.evaluate(queries)) if queries.shape[0] else None
    worst = 0.0
    if res_q is not None:
        worst = max(minmax.hull_distance(r, np.zeros(u.dim_codomain), -gens) for r in res_q)
    rep = report(out, u, v, "hull_constrained", CONVENTIONS,
                 _extras(req, delta_budget=delta, max_hull_residual=worst))
    return ExtensionResult(out, rep)


def majorized_extend(req: ExtensionRequest) -> ExtensionResult:
    """Extension with increments majorised by those of ``v`` and ``|v - u| <= delta``.

    The domain acts only through ``v``, so label-keyed maps are accepted.
    """
    u, v = req.u, req.v
    if v is None:
        raise DomainError("majorised extension needs a target v")
    labeled = isinstance(u, LabeledMap)
    keys_a = list(u.labels) if labeled else u.xs
    vA = v.evaluate(keys_a)
    if len(u) >= 2:
        ratio, i, j = kernels.max_pair_ratio(vA, u.us)
        if ratio > 1.0 + 1e-9:
            raise NotMajorized(
                f"increments of u exceed those of v by the factor {ratio!r}",
                pair=(int(i), int(j)), ratio=float(ratio))
    delta = _budget(req, required=True)
    queries = _query_labels(req) if labeled else _query_points(req)
    vq = v.evaluate(queries) if len(queries) else np.zeros((0, u.dim_codomain))
    vals_v = [*vA]
    vals_u = [*u.us]
    for t, vt in zip(queries, vq):
        V = np.asarray(vals_v)
        centers = np.vstack([np.asarray(vals_u), vt])
        radii = np.append(np.linalg.norm(V - vt, axis=1), delta)
        val = _solve_or_fail(minmax.BallSystem(centers, radii), req, t)
        vals_v.append(vt)
        vals_u.append(val)
    us = np.asarray(vals_u).reshape(-1, u.dim_codomain)
    if labeled:
        out = LabeledMap(list(u.labels) + list(queries), us, u.dim_codomain)
    else:
        out = PartialMap(np.vstack([u.xs, queries]), us, u.dim_domain, u.dim_codomain)
    allv = np.asarray(vals_v).reshape(-1, u.dim_codomain)
    major = float(kernels.max_pair_ratio(allv, us)[0]) if us.shape[0] >= 2 else 0.0
    rep = report(out, u, v, "majorized", CONVENTIONS,
                 _extras(req, delta_budget=delta, majorization_ratio=major))
    return ExtensionResult(out, rep)


METHODS = {
    "kirszbraun": kirszbraun_extend,
    "lifted": lifted_extend,
    "clamped_scalar": clamped_scalar_extend,
    "onedim": onedim_extend,
    "hull_constrained": hull_constrained_extend,
    "majorized": majorized_extend,
}

__all__ = [
    "ExtensionRequest",
    "ExtensionResult",
    "OrderPolicy",
    "report",
    "kirszbraun_extend",
    "lifted_extend",
    "clamped_scalar_extend",
    "onedim_extend",
    "hull_constrained_extend",
    "majorized_extend",
    "METHODS",
]
