"""Grid discretisation of the degenerate form ``g(s, s) = |s|^2 - |Dv s|^2 + <w, Dv s>^2``.

The form is never differentiated at nodes: along each graph edge with step
``s`` and increment ``dv = v(q) - v(p)`` the edge length is

    sqrt(max(0, |s|^2 - |dv|^2 + <w, dv>^2)),

and the pseudo-metric is the shortest-path distance. Edges join nodes that
differ by at most one step along at most two axes (8 neighbours in 2-D, 18 in
3-D). Zero-length edges are kept, so the search tolerates them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._backend import kernels
from .core import UNBOUNDED, _frozen
from .errors import ConstructionError, OffGraphPoint

_NODE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DirectionSpec:
    """A unit vector ``w`` in the codomain."""

    w: np.ndarray

    def __init__(self, w):
        w = np.asarray(w, dtype=np.float64).ravel()
        if w.size == 0 or not np.all(np.isfinite(w)):
            raise ConstructionError("direction must be a finite nonzero vector")
        if abs(float(np.linalg.norm(w)) - 1.0) > 1e-12:
            raise ConstructionError(f"direction has norm {np.linalg.norm(w)!r}, not 1")
        object.__setattr__(self, "w", _frozen(w))

    @classmethod
    def normalized(cls, w) -> "DirectionSpec":
        w = np.asarray(w, dtype=np.float64).ravel()
        return cls(w / np.linalg.norm(w))

    @property
    def dim(self) -> int:
        return self.w.size


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples of ``v`` on a rectangular grid (1 to 3 axes), row-major."""

    dims: tuple[int, ...]
    spacing: np.ndarray
    origin: np.ndarray
    values: np.ndarray

    def __init__(self, dims, spacing, origin, values):
        dims = tuple(int(d) for d in dims)
        n = len(dims)
        if n not in (1, 2, 3):
            raise ConstructionError("grid must have 1, 2 or 3 axes")
        if any(d < 2 for d in dims):
            raise ConstructionError("every grid axis needs at least 2 nodes")
        spacing = np.broadcast_to(np.asarray(spacing, dtype=np.float64), (n,)).copy()
        origin = np.asarray(origin, dtype=np.float64).ravel()
        if np.any(spacing <= 0) or not np.all(np.isfinite(spacing)):
            raise ConstructionError("spacing must be positive")
        if origin.size != n:
            raise ConstructionError(f"origin has length {origin.size}, grid has {n} axes")
        values = np.asarray(values, dtype=np.float64)
        total = int(np.prod(dims))
        if values.ndim == 1:
            if values.size % total:
                raise ConstructionError(
                    f"{values.size} values do not divide into {total} nodes")
            values = values.reshape(total, -1)
        values = values.reshape(total, -1)
        if not np.all(np.isfinite(values)):
            raise ConstructionError("grid values must be finite")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", _frozen(spacing))
        object.__setattr__(self, "origin", _frozen(origin))
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def from_function(cls, dims, spacing, origin, func) -> "GridField":
        """Sample ``func`` (mapping an (N, n) array to (N, m)) at every node."""
        proto = cls(dims, spacing, origin, np.zeros(int(np.prod(dims))))
        return cls(dims, spacing, origin, np.asarray(func(proto.coords), dtype=np.float64))

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def dim_domain(self) -> int:
        return len(self.dims)

    @property
    def dim_codomain(self) -> int:
        return self.values.shape[1]

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @cached_property
    def coords(self) -> np.ndarray:
        grids = np.meshgrid(*[np.arange(d) for d in self.dims], indexing="ij")
        idx = np.stack([g.ravel() for g in grids], axis=1).astype(np.float64)
        return _frozen(self.origin + idx * self.spacing)

    def node_index(self, points) -> np.ndarray:
        """Flat indices of grid nodes at ``points``; ``OffGraphPoint`` otherwise."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.ndim) if self.ndim == 1 else pts.reshape(1, -1)
        if pts.shape[1] != self.ndim:
            raise OffGraphPoint(f"points have dimension {pts.shape[1]}, grid has {self.ndim}")
        rel = (pts - self.origin) / self.spacing
        idx = np.rint(rel)
        bad = (np.abs(rel - idx) > _NODE_TOL * np.maximum(1.0, np.abs(rel))).any(axis=1)
        bad |= ((idx < 0) | (idx >= np.asarray(self.dims))).any(axis=1)
        if bad.any():
            raise OffGraphPoint(f"{pts[np.argmax(bad)].tolist()} is not a grid node")
        return np.ravel_multi_index(tuple(idx.astype(np.int64).T), self.dims)

    def evaluate(self, points) -> np.ndarray:
        return self.values[self.node_index(points)]


def _offsets(n: int) -> list[tuple[int, ...]]:
    out = []
    for o in itertools.product((-1, 0, 1), repeat=n):
        nz = sum(1 for c in o if c)
        if 1 <= nz <= 2:
            out.append(o)
    return out


@dataclass(frozen=True, eq=False)
class PseudoMetricGraph:
    """CSR graph over the nodes of a ``GridField`` with form-induced weights."""

    field: GridField
    w: DirectionSpec
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.field.size

    def node_index(self, points) -> np.ndarray:
        return self.field.node_index(points)

    def distances_from(self, source, mask=None) -> np.ndarray:
        """Distances from one node (a point or a flat index) to every node."""
        s = int(source) if np.ndim(source) == 0 else int(self.node_index(source)[0])
        m = None if mask is None else np.ascontiguousarray(mask, dtype=np.uint8)
        return kernels.dijkstra(self.indptr, self.indices, self.weights, s, m)

    def distance(self, p, q) -> float:
        j = int(self.node_index(q)[0])
        return float(self.distances_from(p)[j])

    def distance_matrix(self, nodes) -> np.ndarray:
        """Pairwise distances among ``nodes`` (flat indices)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        return np.stack([self.distances_from(int(i))[nodes] for i in nodes])


def build_graph(field: GridField, w: DirectionSpec | np.ndarray) -> PseudoMetricGraph:
    if not isinstance(w, DirectionSpec):
        w = DirectionSpec(w)
    if w.dim != field.dim_codomain:
        raise ConstructionError(
            f"direction has dimension {w.dim}, field values have {field.dim_codomain}")
    dims = np.asarray(field.dims)
    n = field.ndim
    grid_idx = np.stack(np.unravel_index(np.arange(field.size), field.dims), axis=1)
    src_parts, dst_parts, wt_parts = [], [], []
    clamped = 0
    for off in _offsets(n):
        off = np.asarray(off)
        tgt = grid_idx + off
        ok = np.all((tgt >= 0) & (tgt < dims), axis=1)
        src = np.nonzero(ok)[0]
        dst = np.ravel_multi_index(tuple(tgt[ok].T), field.dims)
        step2 = float(np.sum((off * field.spacing) ** 2))
        dv = field.values[dst] - field.values[src]
        disc = step2 - np.sum(dv * dv, axis=1) + (dv @ w.w) ** 2
        clamped += int(np.count_nonzero(disc < 0))
        src_parts.append(src)
        dst_parts.append(dst)
        wt_parts.append(np.sqrt(np.maximum(disc, 0.0)))
    src = np.concatenate(src_parts)
    dst = np.concatenate(dst_parts)
    wts = np.concatenate(wt_parts)
    order = np.argsort(src, kind="stable")
    indptr = np.zeros(field.size + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=field.size), out=indptr[1:])
    # every directed edge appears once per direction, so the count is even
    return PseudoMetricGraph(field, w, _frozen_int(indptr), _frozen_int(dst[order]),
                             _frozen(wts[order]),
                             {"clamped_edges": clamped // 2, "edges": int(src.size) // 2})


def _frozen_int(a) -> np.ndarray:
    a = np.array(a, dtype=np.int64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PseudoLipschitzCheck:
    ok: bool
    ratio: float
    pair: tuple[int, int] | None

    def __bool__(self):
        return self.ok


def check_pseudo_lipschitz(points, t, graph: PseudoMetricGraph,
                           tol: float = 1e-9) -> PseudoLipschitzCheck:
    """Does ``|t(x) - t(y)| <= d(x, y) + tol`` hold for all pairs of ``points``?

    ``pair`` indexes into ``points``; the ratio is ``inf`` when ``d = 0`` and the
    values differ.
    """
    nodes = graph.node_index(points)
    t = np.asarray(t, dtype=np.float64).ravel()
    if t.size != nodes.size:
        raise ConstructionError(f"{t.size} values for {nodes.size} points")
    if nodes.size < 2:
        return PseudoLipschitzCheck(True, 0.0, None)
    D = graph.distance_matrix(nodes)
    dt = np.abs(t[:, None] - t[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(D > 0, dt / np.where(D > 0, D, 1.0), np.where(dt > 0, np.inf, 0.0))
    np.fill_diagonal(ratio, 0.0)
    i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    ok = bool(np.all(dt <= D + tol))
    worst = float(ratio[i, j])
    return PseudoLipschitzCheck(ok, worst, (int(i), int(j)) if worst > 0 else None)


def geodesic_convexity_defect(points, graph: PseudoMetricGraph):
    """Largest excess of the distance restricted to ``points`` over the full one.

    Zero means the node set is geodesically convex at grid resolution; the
    ``UNBOUNDED`` marker means some pair cannot be joined inside the set.
    """
    nodes = np.unique(graph.node_index(points))
    if nodes.size < 2:
        raise ValueError("geodesic convexity needs at least two nodes")
    mask = np.zeros(graph.n_nodes, dtype=np.uint8)
    mask[nodes] = 1
    worst = 0.0
    for i in nodes:
        full = graph.distances_from(int(i))[nodes]
        inside = graph.distances_from(int(i), mask)[nodes]
        if np.any(np.isinf(inside)):
            return UNBOUNDED
        worst = max(worst, float(np.max(inside - full)))
    return worst
