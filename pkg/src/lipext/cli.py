"""Command-line front end.

Exit status: 0 on success, 1 when the input violates a precondition or is
malformed (including a failed ``verify``), 2 when a solver fails numerically.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .core import UNBOUNDED, AffineMap, LabeledMap, d_v, is_unbounded, sup_distance
from .errors import DomainError, NumericalFailure
from .extend import METHODS, ExtensionRequest, OrderPolicy, report
from .kfunction import KFunctionSpec, check_kfunction
from .minmax import hull_distance
from .pseudometric import DirectionSpec, GridField, build_graph, geodesic_convexity_defect
from .sharpness import Mode, nonaffine_counterexample, sharp_bound, triangle, triangle_family

SEED_ENV = "LIPEXT_SEED"
REPORT_FIELDS = ("lipschitz_constant_output", "delta_on_A", "d_v_A_B", "sharp_bound",
                 "sup_distance_achieved")


class VerificationFailed(DomainError):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise DomainError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _emit(data, out):
    if out:
        io.write_json(out, data)
    else:
        json.dump(io.to_jsonable(data), sys.stdout, indent=1)
        sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# commands


def cmd_extend(args) -> int:
    u = io.load_map(args.u)
    v = io.load_target(args.v) if args.v else None
    queries = io.load_queries(args.queries) if args.queries else []
    w = DirectionSpec(args.w) if args.w else None
    req = ExtensionRequest(u, v, queries, delta=args.delta,
                           delta_from_data=args.delta_from_data, w=w,
                           order_policy=OrderPolicy(args.order), feas_tol=args.feas_tol,
                           max_iter=args.max_iter)
    if args.method == "onedim":
        if not isinstance(v, GridField) or w is None:
            raise DomainError("onedim needs a grid-field target and --w")
        result = METHODS["onedim"](req, build_graph(v, w))
    else:
        result = METHODS[args.method](req)
    out = Path(args.out)
    rep_path = Path(args.report) if args.report else out.with_suffix(".report.json")
    io.write_json(out, io.map_to_json(result.map))
    io.write_json(rep_path, result.report)
    return 0


def _close(a, b, tol=1e-9) -> bool:
    if a is None or b is None:
        return a is b
    if isinstance(a, str) or isinstance(b, str):
        return a == b
    return abs(a - b) <= tol * (1.0 + abs(b))


def cmd_verify(args) -> int:
    u = io.load_map(args.u)
    ext = io.load_map(args.ext)
    v = io.load_target(args.v) if args.v else None
    stored = io.read_json(args.report) if args.report else {}
    method = args.method or stored.get("method", "kirszbraun")
    extras = stored.get("extras", {})
    rep = report(ext, u, v, method)
    checks: dict[str, bool] = {"extends_u": True}
    if method in ("kirszbraun", "lifted", "clamped_scalar", "hull_constrained"):
        checks["lipschitz"] = rep.lipschitz_constant_output <= 1.0 + 1e-8
    budget = extras.get("delta_budget")
    if v is not None:
        if method == "lifted" and not is_unbounded(rep.sharp_bound):
            eps = extras.get("epsilon", rep.sharp_bound)
            checks["within_lifted_bound"] = rep.sup_distance_achieved <= eps + 1e-6
        if method in ("clamped_scalar", "hull_constrained", "majorized", "onedim") \
                and budget is not None:
            checks["within_budget"] = rep.sup_distance_achieved <= budget + 1e-6
        if method == "majorized":
            keys = list(ext.labels) if isinstance(ext, LabeledMap) else ext.xs
            vals = v.evaluate(keys)
            dv = np.linalg.norm(vals[:, None] - vals[None], axis=2)
            du = np.linalg.norm(ext.us[:, None] - ext.us[None], axis=2)
            checks["majorized"] = bool(np.all(du <= dv + 1e-8))
        if method == "hull_constrained" and isinstance(v, AffineMap):
            gens = v.evaluate(u.xs) - u.us
            res = v.evaluate(ext.xs) - ext.us
            worst = max(hull_distance(r, np.zeros(u.dim_codomain), gens) for r in res)
            checks["hull_residual"] = worst <= 1e-6
        if method == "onedim" and "w" in extras:
            w = np.asarray(extras["w"], dtype=np.float64)
            res = v.evaluate(ext.xs) - ext.us
            off = res - np.outer(res @ w, w)
            checks["residual_on_line"] = bool(np.all(np.linalg.norm(off, axis=1) <= 1e-8))
    if stored:
        fresh = io.to_jsonable(rep)
        for key in REPORT_FIELDS:
            if key in stored:
                checks[f"report.{key}"] = _close(stored[key], fresh[key])
    ok = all(checks.values())
    _emit({"ok": ok, "method": method, "checks": checks}, None)
    if not ok:
        failed = ", ".join(k for k, good in checks.items() if not good)
        raise VerificationFailed(f"verification failed: {failed}")
    return 0


def cmd_bound(args) -> int:
    if args.u:
        u = io.load_map(args.u)
        v = io.load_target(args.v)
        q = io.load_queries(args.queries) if args.queries else np.zeros((0, u.dim_domain))
        B = np.vstack([u.xs, q]) if len(q) else u.xs
        delta = args.delta if args.delta is not None else sup_distance(u, v)
        d = d_v(u.xs, B, v)
    else:
        if args.delta is None or args.d is None:
            raise DomainError("bound needs --delta and --d, or --u/--v/--queries")
        delta = args.delta
        d = UNBOUNDED if math.isinf(args.d) else args.d
    _emit({"delta": delta, "d_v_A_B": d, "sharp_bound": sharp_bound(delta, d)}, args.out)
    return 0


def _write_instance(out_dir, u, v, queries, extra=None):
    out_dir = Path(out_dir)
    io.write_json(out_dir / "u.json", io.map_to_json(u))
    io.write_json(out_dir / "v.json", io.target_to_json(v))
    io.write_json(out_dir / "queries.json", io.queries_to_json(queries))
    if extra is not None:
        io.write_json(out_dir / "instance.json", extra)


def cmd_gen(args) -> int:
    if args.kind == "triangle":
        t = triangle(args.a, args.delta, args.n, args.m)
        _write_instance(args.out_dir, t.u, t.v, t.queries,
                        {"a": t.a, "delta": t.delta, "sharp_bound": t.bound,
                         "forced_value": t.forced_value})
    elif args.kind == "family":
        fam = triangle_family(args.delta, args.a_seq, args.n, args.m)
        _write_instance(args.out_dir, fam.u, fam.v, fam.queries,
                        {"delta": fam.delta, "a_seq": [i.a for i in fam.instances],
                         "bounds": fam.bounds, "family_bound": fam.family_bound})
    else:
        spec = io.read_json(args.triple)
        keys = ("x", "y", "v_x", "v_y", "v_z")
        if not isinstance(spec, dict) or any(k not in spec for k in keys):
            raise io.InputFormatError(f"{args.triple}: expected keys {', '.join(keys)}")
        x, y, *vals = (np.asarray(io.parse_vector(spec[k], args.triple, k)) for k in keys)
        z = (x + y) / 2.0
        ce = nonaffine_counterexample(x, y, z, *vals, mode=Mode(args.mode))
        _write_instance(args.out_dir, ce.u, ce.v, z.reshape(1, -1),
                        {"delta": ce.delta, "certified_violation": ce.certified_violation,
                         "forced_value": ce.forced_value, "params": ce.params})
    return 0


def cmd_check_kfunction(args) -> int:
    if args.kind == "increments":
        spec = KFunctionSpec.increments()
        n = m = args.n
    else:
        if not args.v:
            raise DomainError("the affine K-function needs --v")
        v = io.load_target(args.v)
        spec = KFunctionSpec.affine(v)
        n = getattr(v, "dim_domain", args.n)
        m = v.dim_codomain
    verdict = check_kfunction(spec, n, m, args.l, args.count, _seed(args), args.jobs)
    _emit(verdict, args.out)
    return 0


def cmd_pseudometric(args) -> int:
    field = io.load_target(args.field)
    if not isinstance(field, GridField):
        raise DomainError(f"{args.field}: expected a grid field")
    graph = build_graph(field, DirectionSpec(args.w))
    out: dict = {"diagnostics": graph.diagnostics}
    if args.p is not None:
        if args.q is None:
            raise DomainError("--p needs --q")
        out["distance"] = graph.distance(args.p, args.q)
    if args.set:
        pts = io.load_queries(args.set)
        out["convexity_defect"] = geodesic_convexity_defect(pts, graph)
    _emit(out, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lipext", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("extend", help="extend a partial map to query points")
    e.add_argument("--method", required=True, choices=sorted(METHODS))
    e.add_argument("--u", required=True, help="partial map file")
    e.add_argument("--v", help="target file (partial map, affine or grid)")
    e.add_argument("--queries", help="queries file")
    g = e.add_mutually_exclusive_group()
    g.add_argument("--delta", type=float, help="distance budget")
    g.add_argument("--delta-from-data", action="store_true",
                   help="use sup |u - v| on the domain as the budget")
    e.add_argument("--w", type=float, nargs="+", help="unit direction (onedim)")
    e.add_argument("--order", default="input", choices=[o.value for o in OrderPolicy])
    e.add_argument("--feas-tol", type=float, default=1e-9)
    e.add_argument("--max-iter", type=int, default=100_000)
    e.add_argument("--out", required=True, help="output map file")
    e.add_argument("--report", help="report file (default: <out>.report.json)")
    e.set_defaults(func=cmd_extend)

    vf = sub.add_parser("verify", help="re-check an extension and its report")
    vf.add_argument("--u", required=True)
    vf.add_argument("--ext", required=True, help="extended map file")
    vf.add_argument("--v")
    vf.add_argument("--report")
    vf.add_argument("--method", choices=sorted(METHODS))
    vf.set_defaults(func=cmd_verify)

    b = sub.add_parser("bound", help="evaluate sqrt(delta^2 + 2 delta d)")
    b.add_argument("--delta", type=float)
    b.add_argument("--d", type=float)
    b.add_argument("--u")
    b.add_argument("--v")
    b.add_argument("--queries")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bound)

    gen = sub.add_parser("gen", help="write adversarial instances")
    gsub = gen.add_subparsers(dest="kind", required=True)
    t = gsub.add_parser("triangle")
    t.add_argument("--a", type=float, required=True)
    t.add_argument("--delta", type=float, required=True)
    t.add_argument("--n", type=int, default=2)
    t.add_argument("--m", type=int, default=2)
    t.add_argument("--out-dir", required=True)
    f = gsub.add_parser("family")
    f.add_argument("--delta", type=float, required=True)
    f.add_argument("--a", dest="a_seq", type=float, nargs="+", required=True)
    f.add_argument("--n", type=int, default=2)
    f.add_argument("--m", type=int, default=2)
    f.add_argument("--out-dir", required=True)
    c = gsub.add_parser("counterexample")
    c.add_argument("--triple", required=True,
                   help="JSON with x, y, v_x, v_y, v_z (z is the midpoint)")
    c.add_argument("--mode", default="auto", choices=[m.value for m in Mode])
    c.add_argument("--out-dir", required=True)
    gen.set_defaults(func=cmd_gen)

    k = sub.add_parser("check-kfunction", help="search for K-function violations")
    k.add_argument("--kind", required=True, choices=["affine", "increments"])
    k.add_argument("--v", help="target for the affine kind")
    k.add_argument("--n", type=int, default=2)
    k.add_argument("--l", type=int, default=3)
    k.add_argument("--count", type=int, default=1000)
    k.add_argument("--jobs", type=int, default=1)
    k.add_argument("--seed", type=int, default=None,
                   help=f"random seed (falls back to ${SEED_ENV}, then 0)")
    k.add_argument("--out")
    k.set_defaults(func=cmd_check_kfunction)

    pm = sub.add_parser("pseudometric", help="graph distances for a grid field")
    pm.add_argument("--field", required=True)
    pm.add_argument("--w", type=float, nargs="+", required=True)
    pm.add_argument("--p", type=float, nargs="+")
    pm.add_argument("--q", type=float, nargs="+")
    pm.add_argument("--set", help="queries file with the node set for the convexity defect")
    pm.add_argument("--out")
    pm.set_defaults(func=cmd_pseudometric)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"lipext: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ValueError, KeyError) as exc:
        print(f"lipext: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
