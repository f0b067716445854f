"""The weighted K-function inequality and a randomised refuter for it.

For a configuration ``(x_i, y_i)``, convex weights ``lam`` and a point ``y``,
the gap is

    sum_ij lam_i lam_j Phi(x_i - x_j, y_i, y_j) - 2 sum_i lam_i Phi(x_i - xbar, y_i, y)

with ``xbar = sum_j lam_j x_j``; the inequality holds iff the gap is >= 0.
Two instances are built in: ``increments`` (gap identically zero) and
``affine`` for a target ``v`` (gap equals twice ``al_inequality``).
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import AffineMap, PartialMap
from .errors import ConstructionError, DomainError

GAP_TOL = 1e-9


class Kind(enum.Enum):
    AFFINE = "affine"
    INCREMENTS = "increments"


@dataclass(frozen=True, eq=False)
class KFunctionSpec:
    """``Phi(x, y, y')`` with ``x`` in R^m and ``y, y'`` in R^n."""

    kind: Kind
    v: Any = None

    @classmethod
    def increments(cls) -> "KFunctionSpec":
        return cls(Kind.INCREMENTS)

    @classmethod
    def affine(cls, v) -> "KFunctionSpec":
        if v is None:
            raise ConstructionError("the affine K-function needs a target v")
        return cls(Kind.AFFINE, v)

    def _v(self, y: np.ndarray) -> np.ndarray:
        flat = y.reshape(-1, y.shape[-1])
        return self.v.evaluate(flat).reshape(*y.shape[:-1], -1)

    def __call__(self, x, y, y2) -> np.ndarray:
        """Evaluate on broadcastable batches; the last axis holds coordinates."""
        x, y, y2 = (np.asarray(a, dtype=np.float64) for a in (x, y, y2))
        xx = np.sum(x * x, axis=-1)
        if self.kind is Kind.INCREMENTS:
            return xx + 2.0 * np.sum(x * (y - y2), axis=-1)
        dv = self._v(y) - self._v(y2)
        dy = y - y2
        return (xx + 2.0 * np.sum(x * dv, axis=-1) - np.sum(dy * dy, axis=-1)
                + np.sum(dv * dv, axis=-1))


@dataclass(frozen=True, eq=False)
class SimplexWeights:
    lam: np.ndarray

    def __init__(self, lam):
        lam = np.asarray(lam, dtype=np.float64).ravel()
        if lam.size == 0 or np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-12:
            raise ConstructionError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "lam", lam)

    def __len__(self) -> int:
        return self.lam.size


def _weights(lam) -> np.ndarray:
    return lam.lam if isinstance(lam, SimplexWeights) else SimplexWeights(lam).lam


def kfunction_gap(phi: KFunctionSpec, xs, ys, lam, y) -> float:
    """Left side minus right side of the K-function inequality."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    ys = np.atleast_2d(np.asarray(ys, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    lam = _weights(lam)
    if not (xs.shape[0] == ys.shape[0] == lam.size):
        raise DomainError(f"{xs.shape[0]} points, {ys.shape[0]} labels, {lam.size} weights")
    if ys.shape[1] != y.size:
        raise DomainError("y has a different dimension from the y_i")
    if phi.kind is Kind.INCREMENTS and xs.shape[1] != ys.shape[1]:
        raise DomainError("the increments K-function needs x and y in the same space")
    lhs = lam @ phi(xs[:, None, :] - xs[None, :, :], ys[:, None, :], ys[None, :, :]) @ lam
    xbar = lam @ xs
    rhs = 2.0 * lam @ phi(xs - xbar, ys, np.broadcast_to(y, ys.shape))
    return float(lhs - rhs)


def al_inequality(v, lam, ys, y) -> float:
    """``|sum lam_i y_i - y|^2 - |sum lam_i v(y_i) - v(y)|^2``."""
    lam = _weights(lam)
    ys = np.atleast_2d(np.asarray(ys, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    vy = v.evaluate(np.vstack([ys, y]))
    a = lam @ ys - y
    b = lam @ vy[:-1] - vy[-1]
    return float(a @ a - b @ b)


def _scale(phi: KFunctionSpec, xs, ys, y) -> float:
    arrays = [xs, ys, y.reshape(1, -1)]
    if phi.kind is Kind.AFFINE:
        arrays.append(phi.v.evaluate(np.vstack([ys, y])))
    return 1.0 + max(float(np.max(np.sum(a * a, axis=1))) for a in arrays)


@dataclass
class Verdict:
    """Outcome of a refutation search.

    ``ok`` means no configuration with gap below ``-1e-9 * scale`` was found
    among ``samples`` tries; it is not a proof.
    """

    ok: bool
    min_gap: float
    min_relative_gap: float
    samples: int
    witness: dict | None = None
    probes: dict = field(default_factory=dict)


def _table_points(v) -> np.ndarray | None:
    return v.xs if isinstance(v, PartialMap) else None


def _midpoint_triples(table: np.ndarray) -> list[tuple[int, int, int]]:
    index = {tuple(p): i for i, p in enumerate(table)}
    out = []
    for i in range(len(table)):
        for j in range(i + 1, len(table)):
            k = index.get(tuple((table[i] + table[j]) / 2.0))
            if k is not None:
                out.append((i, j, k))
    return out


def _config(phi, n, m, l, rng, kind, table, triples):
    """One random configuration; ``kind`` is 'random', 'barycenter' or 'pair'."""
    xs = rng.standard_normal((l, m))
    lam = rng.dirichlet(np.ones(l))
    if table is not None:
        if kind == "barycenter" and triples:
            i, j, k = triples[rng.integers(len(triples))]
            ys = table[[i, j]]
            xs = xs[:2]
            lam = np.array([0.5, 0.5])
            y = table[k]
        else:
            ys = table[rng.integers(len(table), size=l)]
            y = table[rng.integers(len(table))]
    else:
        ys = rng.standard_normal((l, n))
        y = rng.standard_normal(n)
        if kind == "barycenter":
            y = lam @ ys
    if kind == "pair":
        lam = np.zeros(l)
        lam[0] = 1.0
        if isinstance(phi.v, AffineMap) and rng.random() < 0.5:
            # along the most expanded direction of the linear part
            y = ys[0] + np.linalg.svd(phi.v.matrix)[2][0] * (1.0 + rng.random())
    return xs, ys, lam, y


def _run_chunk(args):
    phi, n, m, l, seeds, kinds, table, triples = args
    best = (np.inf, np.inf, None)
    for ss, kind in zip(seeds, kinds):
        rng = np.random.default_rng(ss)
        xs, ys, lam, y = _config(phi, n, m, l, rng, kind, table, triples)
        gap = kfunction_gap(phi, xs, ys, lam, y)
        rel = gap / _scale(phi, xs, ys, y)
        if rel < best[1]:
            best = (gap, rel, {"xs": xs, "ys": ys, "lam": lam, "y": y,
                               "gap": gap, "probe": kind})
    return best


def check_kfunction(phi: KFunctionSpec, n: int, m: int, l: int = 3, count: int = 1000,
                    seed: int = 0, jobs: int = 1) -> Verdict:
    """Search for a configuration violating the K-function inequality.

    Besides ``count`` random configurations (Gaussian points, Dirichlet
    weights) two probe families are always run: the barycentric probe sets
    ``y = sum lam_i y_i`` (detects non-affine targets) and the pair probe puts
    all weight on one point (detects expansion). Tabulated targets are only
    sampled at table points; their barycentric probe uses midpoint triples of
    the table. Every configuration has its own seed, so results do not depend
    on ``jobs``.
    """
    if count < 1:
        raise DomainError("count must be at least 1")
    if l < 1:
        raise DomainError("l must be at least 1")
    table = _table_points(phi.v) if phi.kind is Kind.AFFINE else None
    if table is not None:
        n = table.shape[1]
    triples = _midpoint_triples(table) if table is not None else []
    n_probe = max(1, count // 4)
    kinds = (["random"] * count + ["barycenter"] * n_probe + ["pair"] * n_probe)
    seeds = np.random.SeedSequence(seed).spawn(len(kinds))
    chunks = max(1, int(jobs))
    parts = [(phi, n, m, l, seeds[c::chunks], kinds[c::chunks], table, triples)
             for c in range(chunks)]
    if chunks == 1:
        results = [_run_chunk(parts[0])]
    else:
        with ProcessPoolExecutor(max_workers=chunks) as pool:
            results = list(pool.map(_run_chunk, parts))
    gap, rel, witness = min(results, key=lambda r: r[1])
    ok = rel >= -GAP_TOL
    return Verdict(ok, float(gap), float(rel), len(kinds), None if ok else witness,
                   {"random": count, "barycenter": n_probe, "pair": n_probe,
                    "midpoint_triples": len(triples)})


__all__ = [
    "Kind",
    "KFunctionSpec",
    "SimplexWeights",
    "Verdict",
    "kfunction_gap",
    "al_inequality",
    "check_kfunction",
]
