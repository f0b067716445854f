"""The sharp continuity bound and the instances that attain or refute it.

``triangle`` builds the isosceles configuration on which every 1-Lipschitz
extension is forced to drift exactly ``sqrt(delta^2 + 2 delta a)`` from the
reference map; ``triangle_family`` strings such triangles together so the
drift is unbounded on the union. ``nonaffine_counterexample`` takes a triple
``x, y, z = (x + y) / 2`` on which ``v`` is not affine and builds a map ``u`` on
``{x, y}`` whose forced value at ``z`` breaks the budget ``delta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import UNBOUNDED, PartialMap, is_unbounded
from .errors import DomainError, ModeInapplicable, NoDefect, NotLipschitzInput

DEFECT_TOL = 1e-6
_SEARCH_STEPS = 200


def sharp_bound(delta: float, d):
    """``sqrt(delta^2 + 2 delta d)``; ``d`` may be the ``UNBOUNDED`` marker."""
    if delta < 0 or (not is_unbounded(d) and d < 0):
        raise ValueError("delta and d must be nonnegative")
    if is_unbounded(d):
        return UNBOUNDED if delta > 0 else 0.0
    return math.sqrt(delta * delta + 2.0 * delta * d)


def _unit(dim: int, k: int = 0) -> np.ndarray:
    e = np.zeros(dim)
    e[k] = 1.0
    return e


@dataclass(frozen=True, eq=False)
class TriangleInstance:
    a: float
    delta: float
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    u: PartialMap
    v: PartialMap

    @property
    def queries(self) -> np.ndarray:
        return self.z.reshape(1, -1)

    @property
    def forced_value(self) -> np.ndarray:
        """The value every 1-Lipschitz extension of ``u`` takes at ``z``."""
        ux, uy = self.u.evaluate([self.x, self.y])
        return (ux + uy) / 2.0

    @property
    def bound(self) -> float:
        return sharp_bound(self.delta, self.a)


def triangle(a: float, delta: float, n: int = 2, m: int = 2,
             shift=None) -> TriangleInstance:
    """Triangle with ``x = -a e1``, ``y = a e1``, ``z = 0`` (plus ``shift``).

    ``u`` maps ``x, y`` isometrically onto ``(-a, 0), (a, 0)``; ``v(z)`` is the
    apex ``(0, sqrt(delta^2 + 2 delta a))`` and ``v(x), v(y)`` sit at distance
    ``delta`` from ``u(x), u(y)`` on the edges towards the apex.
    """
    if a <= 0 or delta <= 0:
        raise DomainError("triangle needs a > 0 and delta > 0")
    if m < 2 or n < 1:
        raise DomainError("triangle needs n >= 1 and m >= 2")
    off = np.zeros(n) if shift is None else np.asarray(shift, dtype=np.float64).ravel()
    x = -a * _unit(n) + off
    y = a * _unit(n) + off
    z = np.zeros(n) + off
    ux = -a * _unit(m)
    uy = a * _unit(m)
    apex = math.sqrt(delta * delta + 2.0 * delta * a) * _unit(m, 1)
    t = delta / (a + delta)
    vx = ux + t * (apex - ux)
    vy = uy + t * (apex - uy)
    u = PartialMap([x, y], [ux, uy])
    v = PartialMap([x, y, z], [vx, vy, apex])
    return TriangleInstance(float(a), float(delta), x, y, z, u, v)


@dataclass(frozen=True, eq=False)
class TriangleFamily:
    delta: float
    instances: tuple[TriangleInstance, ...]
    u: PartialMap
    v: PartialMap
    queries: np.ndarray

    @property
    def bounds(self) -> list[float]:
        return [inst.bound for inst in self.instances]

    @property
    def family_bound(self) -> float:
        return max(self.bounds)


def triangle_family(delta: float, a_seq, n: int = 2, m: int = 2) -> TriangleFamily:
    """Disjoint triangles with growing ``a``, spread out along the first axis.

    Only the domain is translated. Codomain values stay within ``a + delta`` of
    the origin, so with centres ``D > 4 (max a + delta)`` apart every
    cross-instance pair is strictly contracted.
    """
    a_seq = [float(a) for a in a_seq]
    if not a_seq:
        raise DomainError("a_seq must be nonempty")
    if any(b <= a for a, b in zip(a_seq, a_seq[1:])):
        raise DomainError("a_seq must be strictly increasing")
    gap = 4.0 * (max(a_seq) + delta) + 1.0
    instances = tuple(triangle(a, delta, n, m, shift=k * gap * _unit(n))
                      for k, a in enumerate(a_seq))
    u = PartialMap(np.vstack([i.u.xs for i in instances]),
                   np.vstack([i.u.us for i in instances]))
    v = PartialMap(np.vstack([i.v.xs for i in instances]),
                   np.vstack([i.v.us for i in instances]))
    queries = np.vstack([i.queries for i in instances])
    return TriangleFamily(float(delta), instances, u, v, queries)


# ---------------------------------------------------------------------------
# counterexamples for non-affine targets


class Mode(enum.Enum):
    AUTO = "auto"
    MIDPOINT_OFFSET = "midpoint-offset"
    PERPENDICULAR = "perpendicular"


@dataclass(frozen=True)
class CounterexampleParams:
    """Frame and construction constants.

    ``v_z - v_x = lam r + mu w`` with ``w`` along ``v_x - v_y`` and ``lam >= 0``;
    ``h = |v_x - v_y|``, ``gamma = (|x - y|^2 - h^2) / 2``. MidpointOffset uses
    ``alpha, beta``; Perpendicular uses ``rho, eta, zeta``.
    """

    mode: Mode
    h: float
    lam: float
    mu: float
    gamma: float
    delta: float
    w: np.ndarray
    r: np.ndarray
    alpha: float | None = None
    beta: float | None = None
    rho: float | None = None
    eta: float | None = None
    zeta: float | None = None
    swapped: bool = False


@dataclass(frozen=True, eq=False)
class Counterexample:
    u: PartialMap
    v: PartialMap
    delta: float
    certified_violation: float
    forced_value: np.ndarray
    z: np.ndarray
    params: CounterexampleParams


def _orthogonal_unit(v: np.ndarray) -> np.ndarray:
    """A unit vector orthogonal to ``v`` (``v`` nonzero, length >= 2)."""
    k = int(np.argmin(np.abs(v)))
    e = _unit(v.size, k)
    e -= (e @ v) / (v @ v) * v
    return e / np.linalg.norm(e)


def _frame(vx, vy, vz):
    m = vx.size
    h = float(np.linalg.norm(vx - vy))
    e = vz - vx
    scale = 1.0 + max(np.linalg.norm(vx), np.linalg.norm(vy), np.linalg.norm(vz))
    if h > 1e-12 * scale:
        w = (vx - vy) / h
        mu = float(e @ w)
        perp = e - mu * w
        lam = float(np.linalg.norm(perp))
        if lam > 1e-12 * scale:
            r = perp / lam
        else:
            lam = 0.0
            r = _orthogonal_unit(w) if m >= 2 else np.zeros(m)
    else:
        h = 0.0
        lam = float(np.linalg.norm(e))
        r = e / lam
        w = _orthogonal_unit(r) if m >= 2 else np.zeros(m)
        mu = 0.0
    return h, w, r, lam, mu


def _midpoint_values(vx, vy, vz, w, r, h, gamma, delta):
    beta = 1.0 - gamma / (delta * delta - delta * h)
    alpha = math.sqrt(max(0.0, 1.0 - beta * beta))
    ux = vx - delta * w
    uy = vy - delta * (alpha * r + beta * w)
    forced = (ux + uy) / 2.0
    return ux, uy, forced, alpha, beta


def _midpoint_offset(x, y, vx, vy, vz, D, frame):
    h, w, r, lam, mu = frame
    gamma = (D * D - h * h) / 2.0
    if not h < D * (1.0 - 1e-12):
        raise ModeInapplicable("midpoint-offset needs |v(x) - v(y)| < |x - y|")
    if 2.0 * mu + h <= DEFECT_TOL:
        raise ModeInapplicable("midpoint-offset needs the defect to point along v(x) - v(y)")

    def violation(delta):
        if delta <= h or gamma >= delta * delta - delta * h:
            return -np.inf
        ux, uy, forced, _, _ = _midpoint_values(vx, vy, vz, w, r, h, gamma, delta)
        return float(np.linalg.norm(vz - forced)) - delta

    lo = max(h, math.sqrt(gamma), 1e-12)
    hi = 2.0 * lo
    for _ in range(_SEARCH_STEPS):
        if violation(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ModeInapplicable("no budget found for the midpoint-offset construction")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if violation(mid) > 0:
            hi = mid
        else:
            lo = mid
    # step clear of the threshold so the certified margin is not a rounding artefact
    delta = 2.0 * hi
    while violation(delta) <= 0:
        delta *= 2.0
    ux, uy, forced, alpha, beta = _midpoint_values(vx, vy, vz, w, r, h, gamma, delta)
    params = CounterexampleParams(Mode.MIDPOINT_OFFSET, h, lam, mu, gamma, delta, w, r,
                                  alpha=alpha, beta=beta)
    return ux, uy, forced, delta, params


def _perpendicular(x, y, vx, vy, vz, D, frame):
    h, w, r, lam, mu = frame
    gamma = (D * D - h * h) / 2.0
    if lam <= DEFECT_TOL:
        raise ModeInapplicable("perpendicular construction needs a defect orthogonal "
                               "to v(x) - v(y)")
    zeta = (D - h) / 2.0
    threshold = (zeta * zeta + lam * lam) / (2.0 * lam)
    delta = 2.0 * threshold
    for _ in range(_SEARCH_STEPS):
        rho = zeta / delta
        eta = math.sqrt(1.0 - rho * rho)
        ux = vx + delta * (rho * w - eta * r)
        uy = vy + delta * (-rho * w - eta * r)
        forced = (ux + uy) / 2.0
        if float(np.linalg.norm(vz - forced)) - delta > 0:
            break
        delta *= 2.0
    else:
        raise ModeInapplicable("no budget found for the perpendicular construction")
    params = CounterexampleParams(Mode.PERPENDICULAR, h, lam, mu, gamma, delta, w, r,
                                  rho=rho, eta=eta, zeta=zeta)
    return ux, uy, forced, delta, params


def nonaffine_counterexample(x, y, z, v_x, v_y, v_z, mode: Mode | str = Mode.AUTO
                             ) -> Counterexample:
    """Budget-breaking data for a target that is not affine on ``x, y, z``.

    Returns ``u`` on ``{x, y}`` with ``|u - v| = delta`` there and ``|u(x) - u(y)|
    = |x - y|``, so the value of any 1-Lipschitz extension at the midpoint ``z``
    is forced; it lies ``certified_violation > 0`` beyond the budget.
    """
    mode = Mode(mode)
    x, y, z, vx, vy, vz = (np.asarray(p, dtype=np.float64).ravel()
                           for p in (x, y, z, v_x, v_y, v_z))
    D = float(np.linalg.norm(x - y))
    if D == 0.0:
        raise DomainError("x and y must differ")
    if np.linalg.norm(z - (x + y) / 2.0) > 1e-9 * D:
        raise DomainError("z must be the midpoint of x and y")
    pts = [x, y, z]
    vals = [vx, vy, vz]
    for i in range(3):
        for j in range(i + 1, 3):
            dx = float(np.linalg.norm(pts[i] - pts[j]))
            dv = float(np.linalg.norm(vals[i] - vals[j]))
            if dv > dx * (1.0 + 1e-9):
                raise NotLipschitzInput("target is not 1-Lipschitz on the triple",
                                        pair=(i, j), ratio=dv / dx)
    if np.linalg.norm(vz - (vx + vy) / 2.0) < DEFECT_TOL:
        raise NoDefect("target is affine on this triple; no counterexample exists")
    if vx.size < 2:
        raise ModeInapplicable("scalar targets always admit a budget-preserving "
                               "extension; no counterexample exists")

    frame = _frame(vx, vy, vz)
    h, _, _, lam, mu = frame
    swapped = False
    if mode is Mode.AUTO:
        s = 2.0 * mu + h
        if abs(s) <= DEFECT_TOL and lam > DEFECT_TOL:
            mode = Mode.PERPENDICULAR
        elif s < -DEFECT_TOL:
            # relabelling x <-> y flips w and turns 2 mu + h into -(2 mu + h)
            x, y, vx, vy = y, x, vy, vx
            frame = _frame(vx, vy, vz)
            swapped = True
            mode = Mode.MIDPOINT_OFFSET
        else:
            mode = Mode.MIDPOINT_OFFSET
    if mode is Mode.MIDPOINT_OFFSET:
        ux, uy, forced, delta, params = _midpoint_offset(x, y, vx, vy, vz, D, frame)
    else:
        ux, uy, forced, delta, params = _perpendicular(x, y, vx, vy, vz, D, frame)
    if swapped:
        x, y, vx, vy, ux, uy = y, x, vy, vx, uy, ux
        params = CounterexampleParams(**{**params.__dict__, "swapped": True})
    violation = float(np.linalg.norm(vz - forced)) - delta
    u = PartialMap([x, y], [ux, uy])
    v = PartialMap([x, y, z], [vx, vy, vz])
    return Counterexample(u, v, float(delta), violation, forced, z, params)
