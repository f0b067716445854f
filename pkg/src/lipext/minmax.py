"""Feasibility of ball intersections, optionally inside a translated hull.

The engine minimises the convex piecewise-quadratic function

    F(z) = max_i (|z - c_i|^2 - r_i^2)

over R^m, or over ``base + Conv(generators)``; the balls share a point iff
``min F <= 0``. Writing ``s = t - |z|^2`` turns the epigraph form into a small
convex QP with linear constraints (all pieces share the Hessian ``2I``), which
is solved exactly by a primal active-set method after a short subgradient warm
start. The KKT multipliers of the ball constraints are the convex weights that
place the minimiser in ``Conv(centers)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import ConstructionError, DidNotConverge

DEFAULT_FEAS_TOL = 1e-9
DEFAULT_MAX_ITER = 100_000

_WARM_ITERS = 64
_MAX_GRID_POINTS = 500_000_000


class Status(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class HullConstraint:
    base: np.ndarray
    generators: np.ndarray

    def __init__(self, base, generators):
        base = np.asarray(base, dtype=np.float64).ravel()
        gens = np.atleast_2d(np.asarray(generators, dtype=np.float64))
        if gens.shape[0] == 0:
            raise ConstructionError("hull constraint needs at least one generator")
        if gens.shape[1] != base.size:
            raise ConstructionError("generators and base differ in dimension")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "generators", gens)


@dataclass(frozen=True, eq=False)
class BallSystem:
    """Closed balls ``B(c_i, r_i)`` in R^m plus an optional hull restriction."""

    centers: np.ndarray
    radii: np.ndarray
    hull: HullConstraint | None = None

    def __init__(self, centers, radii, hull: HullConstraint | None = None,
                 dim: int | None = None):
        radii = np.asarray(radii, dtype=np.float64).ravel()
        centers = np.asarray(centers, dtype=np.float64)
        if centers.size == 0:
            if dim is None:
                dim = hull.base.size if hull is not None else None
            if dim is None:
                raise ConstructionError("an empty ball system needs its dimension")
            centers = np.zeros((0, dim))
        centers = np.atleast_2d(centers)
        if centers.shape[0] != radii.size:
            raise ConstructionError(f"{centers.shape[0]} centers but {radii.size} radii")
        if np.any(radii < 0) or not np.all(np.isfinite(radii)):
            raise ConstructionError("radii must be finite and nonnegative")
        if not np.all(np.isfinite(centers)):
            raise ConstructionError("centers must be finite")
        if hull is not None and hull.base.size != centers.shape[1]:
            raise ConstructionError("hull constraint lives in a different dimension")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "hull", hull)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def __len__(self) -> int:
        return self.radii.size

    def objective(self, z) -> float:
        """``F(z) = max_i |z - c_i|^2 - r_i^2``."""
        z = np.asarray(z, dtype=np.float64)
        return float(np.max(np.sum((self.centers - z) ** 2, axis=1) - self.radii ** 2))

    def max_violation(self, z) -> float:
        """``max_i |z - c_i| - r_i``; negative when strictly inside every ball."""
        z = np.asarray(z, dtype=np.float64)
        return float(np.max(np.linalg.norm(self.centers - z, axis=1) - self.radii))


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    status: Status
    witness: np.ndarray
    max_violation: float
    hull_residual: float
    objective: float
    weights: np.ndarray | None = None
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE


# ---------------------------------------------------------------------------
# dense active-set QP


class _QPStall(Exception):
    def __init__(self, y, mu):
        self.y = y
        self.mu = mu


def _null_space(M: np.ndarray, n: int) -> np.ndarray:
    if M.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0])))
    return vt[rank:].T


def _active_set_qp(H, g, Aeq, beq, Ain, bin_, y, work, max_iter):
    """Minimise ``y'Hy/2 + g'y`` s.t. ``Aeq y = beq``, ``Ain y >= bin_``.

    ``H`` may be singular; the objective must be bounded below on the feasible
    set. ``y`` must be feasible and the rows in ``work`` active at ``y``.
    Returns ``(y, mu_in, iterations)`` with ``mu_in`` the multipliers of the
    inequality rows (zero off the final working set).
    """
    n = y.size
    n_eq = Aeq.shape[0]
    W = list(work)
    mu = np.zeros(Ain.shape[0])
    for it in range(1, max_iter + 1):
        M = np.vstack([Aeq, Ain[W]]) if W else Aeq
        grad = H @ y + g
        gscale = 1.0 + float(np.linalg.norm(grad))
        Z = _null_space(M, n)
        unbounded = False
        if Z.shape[1] == 0:
            p = np.zeros(n)
        else:
            ev, Q = np.linalg.eigh(Z.T @ H @ Z)
            pos = ev > 1e-12 * max(1.0, float(ev.max()) if ev.size else 1.0)
            gq = Q.T @ (Z.T @ grad)
            flat = gq[~pos]
            if flat.size and np.linalg.norm(flat) > 1e-12 * gscale:
                p = -Z @ (Q[:, ~pos] @ flat)
                unbounded = True
            else:
                p = -Z @ (Q[:, pos] @ (gq[pos] / ev[pos]))
        if not unbounded and np.linalg.norm(p) <= 1e-13 * (1.0 + np.linalg.norm(y)):
            mu_w = np.linalg.lstsq(M.T, grad, rcond=None)[0][n_eq:] if M.shape[0] else np.zeros(0)
            if mu_w.size == 0 or mu_w.min() >= -1e-11 * gscale:
                mu = np.zeros(Ain.shape[0])
                mu[W] = np.maximum(mu_w, 0.0)
                return y, mu, it
            W.pop(int(np.argmin(mu_w)))
            continue
        Ap = Ain @ p
        slack = np.maximum(Ain @ y - bin_, 0.0)
        alpha = np.inf if unbounded else 1.0
        block = None
        in_w = np.zeros(Ain.shape[0], dtype=bool)
        in_w[W] = True
        cand = np.nonzero((~in_w) & (Ap < -1e-14 * (1.0 + np.abs(Ap).max())))[0]
        for i in cand:
            a = slack[i] / -Ap[i]
            if a < alpha:
                alpha, block = a, int(i)
        if not np.isfinite(alpha):
            raise ArithmeticError("QP objective is unbounded below")
        y = y + alpha * p
        if block is not None:
            W.append(block)
    M = np.vstack([Aeq, Ain[W]]) if W else Aeq
    mu = np.zeros(Ain.shape[0])
    if M.shape[0]:
        mu[W] = np.linalg.lstsq(M.T, H @ y + g, rcond=None)[0][n_eq:]
    raise _QPStall(y, mu)


def _independent_rows(rows: np.ndarray, order, limit: int) -> list[int]:
    chosen: list[int] = []
    for i in order:
        trial = rows[chosen + [i]]
        if np.linalg.matrix_rank(trial, tol=1e-10 * max(1.0, np.abs(trial).max())) == len(chosen) + 1:
            chosen.append(int(i))
        if len(chosen) == limit:
            break
    return chosen


def _solve_free(C, r2, max_iter):
    """Unconstrained minimiser of F; centers already translated."""
    k, m = C.shape
    b = np.sum(C * C, axis=1) - r2
    z0, _, _ = kernels.polyak_warm_start(C, r2, C.mean(axis=0), min(max_iter, _WARM_ITERS))
    s0 = float(np.max(b - 2.0 * C @ z0))
    y0 = np.append(z0, s0)
    Ain = np.hstack([2.0 * C, np.ones((k, 1))])
    slack = Ain @ y0 - b
    order = np.argsort(slack, kind="stable")
    tight = [i for i in order if slack[i] <= 1e-9 * (1.0 + abs(s0))] or [int(order[0])]
    work = _independent_rows(Ain, tight, m + 1)
    # tight rows are active only up to rounding; move s so the first is exact
    y0[-1] = float(b[work[0]] - 2.0 * C[work[0]] @ z0)
    y0[-1] = max(y0[-1], float(np.max(b - 2.0 * C @ z0)))
    work = [i for i in work if abs(Ain[i] @ y0 - b[i]) <= 1e-9 * (1.0 + abs(y0[-1]))] or [work[0]]
    H = np.zeros((m + 1, m + 1))
    H[:m, :m] = 2.0 * np.eye(m)
    g = np.zeros(m + 1)
    g[-1] = 1.0
    y, mu, it = _active_set_qp(H, g, np.zeros((0, m + 1)), np.zeros(0), Ain, b, y0,
                               work, max_iter)
    return y[:m], mu, it


def _solve_hull(C, r2, base, G, max_iter):
    """Minimiser of F over ``base + Conv(columns of G)``; translated frame."""
    k, m = C.shape
    p = G.shape[1]
    b = np.sum(C * C, axis=1) - r2
    theta0 = np.full(p, 1.0 / p)
    z0 = base + G @ theta0
    rhs = b - 2.0 * C @ base
    ball_rows = np.hstack([2.0 * C @ G, np.ones((k, 1))])
    s0 = float(np.max(rhs - ball_rows[:, :p] @ theta0))
    y0 = np.append(theta0, s0)
    Ain = np.vstack([np.hstack([np.eye(p), np.zeros((p, 1))]), ball_rows])
    bin_ = np.concatenate([np.zeros(p), rhs])
    Aeq = np.append(np.ones(p), 0.0).reshape(1, -1)
    beq = np.ones(1)
    H = np.zeros((p + 1, p + 1))
    H[:p, :p] = 2.0 * G.T @ G
    g = np.append(2.0 * G.T @ base, 1.0)
    work = [p + int(np.argmax(rhs - ball_rows[:, :p] @ theta0))]
    del z0
    y, mu, it = _active_set_qp(H, g, Aeq, beq, Ain, bin_, y0, work, max_iter)
    theta = np.maximum(y[:p], 0.0)
    theta /= theta.sum()
    return base + G @ theta, mu[p:], it, theta


def solve(system: BallSystem, feas_tol: float = DEFAULT_FEAS_TOL,
          max_iter: int = DEFAULT_MAX_ITER) -> FeasibilityResult:
    """Find a point of ``∩ B(c_i, r_i)`` (inside the hull constraint, if any).

    Feasible iff ``min F <= feas_tol * (1 + max r^2)`` (and, with a hull
    constraint, the witness lies within ``feas_tol`` of the hull).

    Raises ``DidNotConverge`` when ``max_iter`` active-set iterations end with
    neither a feasible point nor a positive certified lower bound on ``min F``.
    """
    if len(system) == 0:
        raise ValueError("solve needs at least one ball")
    if feas_tol <= 0:
        raise ValueError("feas_tol must be positive")
    C0, r = system.centers, system.radii
    r2 = r * r
    scale = 1.0 + float(np.max(r2))
    shift = C0.mean(axis=0)
    C = C0 - shift
    theta = None
    try:
        if system.hull is None:
            z, mu, iters = _solve_free(C, r2, max_iter)
        else:
            base = system.hull.base - shift
            G = system.hull.generators.T
            z, mu, iters, theta = _solve_hull(C, r2, base, G, max_iter)
    except _QPStall as stall:
        return _after_stall(system, stall, shift, r2, scale, feas_tol, max_iter)
    witness = z + shift

    zero = np.nonzero(r == 0.0)[0]
    if zero.size and system.hull is None:
        # a radius-0 ball pins every feasible point to its center
        snapped = C0[zero[0]].copy()
        if system.objective(snapped) <= feas_tol * scale:
            witness = snapped

    F = system.objective(witness)
    hull_res = 0.0
    if system.hull is not None:
        hull_res = hull_distance(witness, system.hull.base, system.hull.generators)
    ok = F <= feas_tol * scale and hull_res <= feas_tol
    weights = mu / mu.sum() if mu.sum() > 0 else mu
    info = {"scale": scale}
    if theta is not None:
        info["hull_weights"] = theta
    return FeasibilityResult(Status.FEASIBLE if ok else Status.INFEASIBLE, witness,
                             system.max_violation(witness), hull_res, F, weights,
                             iters, info)


def _after_stall(system, stall, shift, r2, scale, feas_tol, max_iter):
    m = system.dim
    if system.hull is None:
        z = stall.y[:m]
        mu = np.maximum(stall.mu, 0.0)
        C = system.centers - shift
        lower = -np.inf
        if mu.sum() > 0:
            lam = mu / mu.sum()
            y = lam @ C
            lower = float(lam @ (np.sum(C * C, axis=1) - r2) - y @ y)
    else:
        p = system.hull.generators.shape[0]
        theta = np.maximum(stall.y[:p], 0.0)
        theta /= theta.sum()
        z = system.hull.base - shift + system.hull.generators.T @ theta
        lower = -np.inf
    witness = z + shift
    F = system.objective(witness)
    if F <= feas_tol * scale:
        hull_res = 0.0
        if system.hull is not None:
            hull_res = hull_distance(witness, system.hull.base, system.hull.generators)
        if hull_res <= feas_tol:
            return FeasibilityResult(Status.FEASIBLE, witness, system.max_violation(witness),
                                     hull_res, F, None, max_iter, {"scale": scale})
    if lower > feas_tol * scale:
        return FeasibilityResult(Status.INFEASIBLE, witness, system.max_violation(witness),
                                 0.0, F, None, max_iter,
                                 {"scale": scale, "lower_bound": lower})
    raise DidNotConverge(f"no verdict after {max_iter} iterations (F = {F:.3e})",
                         best_point=witness, best_value=F)


# ---------------------------------------------------------------------------
# independent checks


def hull_distance(z, base, generators, tol: float = 1e-10) -> float:
    """Euclidean distance from ``z`` to ``base + Conv(generators)``.

    Wolfe's minimum-norm-point method: conditional-gradient steps over the
    generator vertices with exact corrections on the current face.
    """
    z = np.asarray(z, dtype=np.float64).ravel()
    P = np.atleast_2d(np.asarray(generators, dtype=np.float64)) + (
        np.asarray(base, dtype=np.float64).ravel() - z)
    n_pts = P.shape[0]
    norms2 = np.sum(P * P, axis=1)
    big = float(norms2.max())
    if big == 0.0:
        return 0.0
    S = [int(np.argmin(norms2))]
    lam = np.array([1.0])
    x = P[S[0]].copy()
    for _ in range(50 * n_pts + 100):
        xx = float(x @ x)
        if xx <= (tol * tol) * 1e-4:
            break
        dots = P @ x
        j = int(np.argmin(dots))
        if xx - dots[j] <= 1e-14 * big or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            Q = P[S]
            k = len(S)
            K = np.zeros((k + 1, k + 1))
            K[:k, :k] = Q @ Q.T
            K[:k, k] = 1.0
            K[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            alpha = np.linalg.lstsq(K, rhs, rcond=None)[0][:k]
            if np.all(alpha > 1e-15):
                lam = alpha
                break
            neg = alpha <= 1e-15
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg, lam / (lam - alpha), np.inf)
            step = float(np.min(ratios))
            lam = lam + step * (alpha - lam)
            keep = lam > 1e-15
            keep[int(np.argmin(np.where(neg, ratios, np.inf)))] = False
            S = [s for s, kp in zip(S, keep) if kp]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = lam @ P[S]
    return float(np.linalg.norm(x))


def brute_force_oracle(system: BallSystem, grid_step: float = 1e-3,
                       bounding_box=None) -> FeasibilityResult:
    """Exhaustive grid scan of ``F`` over a box, independent of ``solve``.

    Feasible iff some grid node has ``F <= grid_step * L`` where ``L`` bounds
    the Lipschitz constant of ``F`` on the box. ``info["grid_error"]`` holds
    that threshold, so ``min F`` lies in ``[objective - grid_error, objective]``.
    """
    if system.hull is not None:
        raise ValueError("the grid oracle does not handle hull constraints")
    d = system.dim
    if d > 3:
        raise ValueError("the grid oracle supports dimensions up to 3")
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    C, r = system.centers, system.radii
    if bounding_box is None:
        if len(system) == 0:
            raise ValueError("an empty system needs an explicit bounding box")
        lo, hi = C.min(axis=0) - r.max(), C.max(axis=0) + r.max()
    else:
        lo, hi = (np.asarray(a, dtype=np.float64).ravel() for a in bounding_box)
        if len(system):
            need_lo, need_hi = C.min(axis=0) - r.max(), C.max(axis=0) + r.max()
            if np.any(lo > need_lo + 1e-12) or np.any(hi < need_hi - 1e-12):
                raise ValueError("bounding box must contain the centers inflated "
                                 "by the largest radius")
    if len(system) == 0:
        center = (lo + hi) / 2.0
        return FeasibilityResult(Status.FEASIBLE, center, -np.inf, 0.0, -np.inf,
                                 info={"grid_error": 0.0})
    counts = [int(np.floor((hi[a] - lo[a]) / grid_step + 1e-9)) + 1 for a in range(d)]
    if float(np.prod(counts, dtype=np.float64)) > _MAX_GRID_POINTS:
        raise ValueError("grid too fine for the box; increase grid_step")
    value, flat = kernels.grid_min(C, r * r, lo, grid_step, counts)
    idx = np.array(np.unravel_index(int(flat), counts), dtype=np.float64)
    witness = lo + grid_step * idx
    far = np.maximum(np.abs(lo - C), np.abs(hi - C))
    lip = 2.0 * float(np.max(np.linalg.norm(far, axis=1)))
    err = grid_step * lip
    status = Status.FEASIBLE if value <= err else Status.INFEASIBLE
    return FeasibilityResult(status, witness, system.max_violation(witness), 0.0,
                             float(value), info={"grid_error": err, "counts": counts})
