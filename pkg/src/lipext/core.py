"""Domain types for partial maps and targets, plus exact elementary quantities.

Everything here is immutable and side-effect free. Points are stored as
``float64`` arrays with the write flag cleared, so a ``PartialMap`` can be
shared freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Protocol, Sequence

import numpy as np

from ._backend import kernels
from .errors import ConstructionError, MissingTargetValue

TOL_ISO = 1e-9
"""Relative tolerance for isometric-pair and collinearity detection."""

AFFINE_NORM_TOL = 1e-9


class _Unbounded:
    """Marker for a supremum that is +infinity.

    Kept distinct from ``float('inf')`` so that an unbounded value in a report
    cannot be confused with an overflow.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __float__(self):
        return math.inf

    def __reduce__(self):
        return (_Unbounded, ())


UNBOUNDED = _Unbounded()


def is_unbounded(value) -> bool:
    return value is UNBOUNDED


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def _as_points(points, dim: int | None = None, what: str = "points") -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, dim or 0)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ConstructionError(f"{what} must be a 2-d array of coordinates")
    if dim is not None and arr.shape[0] and arr.shape[1] != dim:
        raise ConstructionError(f"{what} have dimension {arr.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ConstructionError(f"{what} contain non-finite coordinates")
    return arr


class Target(Protocol):
    """Anything that can be evaluated as the reference map ``v``."""

    dim_codomain: int

    def evaluate(self, points) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class PartialMap:
    """A finite tabulation ``x_i -> u_i`` of a map from R^n to R^m.

    Duplicate domain points with identical values are merged; duplicates with
    different values raise ``ConstructionError``.
    """

    xs: np.ndarray
    us: np.ndarray

    def __init__(self, xs, us, dim_domain: int | None = None,
                 dim_codomain: int | None = None):
        xs = _as_points(xs, dim_domain, "domain points")
        us = _as_points(us, dim_codomain, "values")
        if xs.shape[0] != us.shape[0]:
            raise ConstructionError(
                f"{xs.shape[0]} domain points but {us.shape[0]} values")
        if xs.shape[0] == 0 and (dim_domain is None or dim_codomain is None):
            raise ConstructionError("an empty map needs explicit dimensions")
        keep = []
        seen: dict[tuple, int] = {}
        for i, x in enumerate(map(tuple, xs)):
            j = seen.get(x)
            if j is None:
                seen[x] = i
                keep.append(i)
            elif not np.array_equal(us[i], us[j]):
                raise ConstructionError(
                    f"domain point {list(x)} appears with two different values")
        if xs.shape[0] == 0:
            xs = np.zeros((0, dim_domain))
            us = np.zeros((0, dim_codomain))
        object.__setattr__(self, "xs", _frozen(xs[keep]))
        object.__setattr__(self, "us", _frozen(us[keep]))

    @classmethod
    def from_entries(cls, entries: Sequence[tuple[Sequence[float], Sequence[float]]]):
        xs = [e[0] for e in entries]
        us = [e[1] for e in entries]
        return cls(xs, us)

    @property
    def dim_domain(self) -> int:
        return self.xs.shape[1]

    @property
    def dim_codomain(self) -> int:
        return self.us.shape[1]

    def __len__(self) -> int:
        return self.xs.shape[0]

    def __iter__(self):
        return iter(zip(self.xs, self.us))

    def __repr__(self):
        return (f"PartialMap(n={self.dim_domain}, m={self.dim_codomain}, "
                f"entries={len(self)})")

    @cached_property
    def _index(self) -> dict[tuple, int]:
        return {tuple(x): i for i, x in enumerate(self.xs)}

    def index_of(self, point) -> int | None:
        return self._index.get(tuple(np.asarray(point, dtype=np.float64).ravel()))

    def contains(self, point) -> bool:
        return self.index_of(point) is not None

    def evaluate(self, points) -> np.ndarray:
        """Look up values at domain points; exact coordinate match required."""
        pts = _as_points(points, self.dim_domain)
        out = np.empty((pts.shape[0], self.dim_codomain))
        for k, p in enumerate(pts):
            i = self._index.get(tuple(p))
            if i is None:
                raise MissingTargetValue(f"no tabulated value at {p.tolist()}")
            out[k] = self.us[i]
        return out

    def merged(self, other: "PartialMap") -> "PartialMap":
        return PartialMap(np.vstack([self.xs, other.xs]),
                          np.vstack([self.us, other.us]))


@dataclass(frozen=True, eq=False)
class LabeledMap:
    """A map on an abstract finite set, keyed by string labels.

    Only the increment-majorised extension uses this: there the domain acts
    solely through the values of the reference map.
    """

    labels: tuple[str, ...]
    us: np.ndarray

    def __init__(self, labels, us, dim_codomain: int | None = None):
        labels = tuple(str(s) for s in labels)
        us = _as_points(us, dim_codomain, "values")
        if len(labels) != us.shape[0]:
            raise ConstructionError(f"{len(labels)} labels but {us.shape[0]} values")
        keep, seen = [], {}
        for i, s in enumerate(labels):
            j = seen.get(s)
            if j is None:
                seen[s] = i
                keep.append(i)
            elif not np.array_equal(us[i], us[j]):
                raise ConstructionError(f"label {s!r} appears with two different values")
        object.__setattr__(self, "labels", tuple(labels[i] for i in keep))
        object.__setattr__(self, "us", _frozen(us[keep]))

    @property
    def dim_codomain(self) -> int:
        return self.us.shape[1]

    def __len__(self) -> int:
        return len(self.labels)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.labels)}

    def contains(self, label) -> bool:
        return label in self._index

    def evaluate(self, labels) -> np.ndarray:
        if isinstance(labels, str):
            labels = [labels]
        out = np.empty((len(labels), self.dim_codomain))
        for k, s in enumerate(labels):
            i = self._index.get(s)
            if i is None:
                raise MissingTargetValue(f"no tabulated value for label {s!r}")
            out[k] = self.us[i]
        return out


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``x -> matrix @ x + offset``; records whether it is a contraction."""

    matrix: np.ndarray
    offset: np.ndarray
    operator_norm: float = field(init=False)
    is_contraction: bool = field(init=False)

    def __init__(self, matrix, offset=None, tol: float = AFFINE_NORM_TOL):
        M = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        if not np.all(np.isfinite(M)):
            raise ConstructionError("affine matrix has non-finite entries")
        b = np.zeros(M.shape[0]) if offset is None else np.asarray(offset, dtype=np.float64).ravel()
        if b.shape != (M.shape[0],):
            raise ConstructionError(
                f"offset has length {b.size}, matrix has {M.shape[0]} rows")
        norm = float(np.linalg.norm(M, 2))
        object.__setattr__(self, "matrix", _frozen(M))
        object.__setattr__(self, "offset", _frozen(b))
        object.__setattr__(self, "operator_norm", norm)
        object.__setattr__(self, "is_contraction", norm <= 1.0 + tol)

    @classmethod
    def identity(cls, dim: int, shift=None) -> "AffineMap":
        return cls(np.eye(dim), shift)

    @property
    def dim_domain(self) -> int:
        return self.matrix.shape[1]

    @property
    def dim_codomain(self) -> int:
        return self.matrix.shape[0]

    def evaluate(self, points) -> np.ndarray:
        pts = _as_points(points, self.dim_domain)
        return pts @ self.matrix.T + self.offset

    def __call__(self, point) -> np.ndarray:
        return self.evaluate(np.asarray(point, dtype=np.float64).reshape(1, -1))[0]


@dataclass(frozen=True)
class ExtensionReport:
    """Summary numbers of an extension run.

    ``sharp_bound`` is ``sqrt(delta_on_A**2 + 2*delta_on_A*d_v_A_B)`` and is
    ``UNBOUNDED`` exactly when ``d_v_A_B`` is (and the budget is positive).
    ``lipschitz_constant_output`` is ``None`` for label-keyed domains.
    """

    method: str
    lipschitz_constant_output: float | None
    delta_on_A: float
    d_v_A_B: Any
    sharp_bound: Any
    sup_distance_achieved: float
    per_point_residuals: tuple[tuple[Any, float], ...]
    conventions: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LipschitzCheck:
    ok: bool
    constant: float
    pair: tuple[int, int] | None

    def __bool__(self):
        return self.ok


def lipschitz_constant(f: PartialMap) -> float:
    """Max ``|u(x) - u(y)| / |x - y|`` over distinct pairs; 0 for one entry."""
    if len(f) < 2:
        return 0.0
    ratio, _, _ = kernels.max_pair_ratio(f.xs, f.us)
    return float(ratio)


def verify_lipschitz(f: PartialMap, tol: float = 1e-9) -> LipschitzCheck:
    if len(f) < 2:
        return LipschitzCheck(True, 0.0, None)
    ratio, i, j = kernels.max_pair_ratio(f.xs, f.us)
    pair = (int(i), int(j)) if i >= 0 else None
    return LipschitzCheck(bool(ratio <= 1.0 + tol), float(ratio), pair)


def _target_values(v, keys) -> np.ndarray:
    if isinstance(v, LabeledMap):
        return v.evaluate(list(keys))
    return v.evaluate(keys)


def sup_distance(f: PartialMap | LabeledMap, v: Target) -> float:
    """``max_x |v(x) - u(x)|`` over the entries of ``f``."""
    if len(f) == 0:
        return 0.0
    keys = f.labels if isinstance(f, LabeledMap) else f.xs
    vals = _target_values(v, keys)
    return float(np.max(np.linalg.norm(vals - f.us, axis=1)))


def d_v(A, B, v: Target) -> float:
    """``sup{|v(x) - v(y)| : x in A, y in B}`` for finite point (or label) sets."""
    if len(A) == 0 or len(B) == 0:
        return 0.0
    va = _target_values(v, A)
    vb = _target_values(v, B)
    diff = va[:, None, :] - vb[None, :, :]
    return float(np.max(np.sqrt(np.sum(diff * diff, axis=2))))


def forced_segment_value(x, y, u_x, u_y, z, tol: float = TOL_ISO):
    """The value a 1-Lipschitz map must take at ``z`` on an isometric segment.

    If ``|u_x - u_y| == |x - y|`` and ``z = t x + (1 - t) y`` with ``t`` in
    ``[0, 1]`` (both up to ``tol`` relative to ``|x - y|``), every 1-Lipschitz
    extension has ``u(z) = t u_x + (1 - t) u_y``; that point is returned.
    Otherwise ``None``.
    """
    x, y, z = (np.asarray(p, dtype=np.float64).ravel() for p in (x, y, z))
    u_x = np.asarray(u_x, dtype=np.float64).ravel()
    u_y = np.asarray(u_y, dtype=np.float64).ravel()
    seg = x - y
    length = float(np.linalg.norm(seg))
    if length == 0.0:
        raise ValueError("forced_segment_value needs x != y")
    if abs(float(np.linalg.norm(u_x - u_y)) - length) > tol * length:
        return None
    t = float(np.dot(z - y, seg)) / (length * length)
    if t < -tol or t > 1.0 + tol:
        return None
    t = min(max(t, 0.0), 1.0)
    if np.linalg.norm(z - (t * x + (1.0 - t) * y)) > tol * length:
        return None
    if t == 1.0:
        return u_x.copy()
    if t == 0.0:
        return u_y.copy()
    return t * u_x + (1.0 - t) * u_y
