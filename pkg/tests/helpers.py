"""Random instance builders shared by the test modules."""

from __future__ import annotations

import numpy as np

from lipext import PartialMap


def pair_ratio(xs, us) -> float:
    """Brute-force Lipschitz constant, independent of the package kernels."""
    xs = np.asarray(xs, dtype=float)
    us = np.asarray(us, dtype=float)
    best = 0.0
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            dx = np.linalg.norm(xs[i] - xs[j])
            du = np.linalg.norm(us[i] - us[j])
            if dx == 0:
                if du > 0:
                    return np.inf
                continue
            best = max(best, du / dx)
    return best


def random_map_values(rng, xs, m):
    """Values of a random smooth map at ``xs``, not yet contracted."""
    n = xs.shape[1]
    M = rng.standard_normal((m, n))
    W = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    return xs @ M.T + np.sin(xs @ W.T + b) + rng.standard_normal(m)


def contract(rng, xs, us, target=None):
    """Scale ``us`` about its mean so the map is 1-Lipschitz on ``xs``.

    ``target`` (default uniform in [0.5, 1)) is the resulting constant when the
    original constant exceeds it.
    """
    L = pair_ratio(xs, us)
    target = rng.uniform(0.5, 1.0) if target is None else target
    if L <= target or L == 0:
        return us
    c = us.mean(axis=0)
    return c + (us - c) * (target / L)


def random_lipschitz_map(rng, xs, m, target=None) -> np.ndarray:
    return contract(rng, xs, random_map_values(rng, xs, m), target)


def distinct_points(rng, k, n, scale=2.0):
    pts = rng.standard_normal((k, n)) * scale
    return np.round(pts, 12)


def random_partial(rng, k, n, m) -> PartialMap:
    xs = distinct_points(rng, k, n)
    return PartialMap(xs, random_lipschitz_map(rng, xs, m))


def hull_residual_oracle(r, gens) -> float:
    """Distance from ``r`` to Conv(gens) by enumerating faces.

    Every subset of generators is projected onto its affine hull; the smallest
    distance among projections with nonnegative barycentric weights is exact.
    Meant for a handful of generators only.
    """
    from itertools import combinations

    gens = np.atleast_2d(np.asarray(gens, dtype=float))
    r = np.asarray(r, dtype=float)
    best = np.inf
    for size in range(1, len(gens) + 1):
        for idx in combinations(range(len(gens)), size):
            G = gens[list(idx)]
            D = (G[1:] - G[0]).T
            if size == 1:
                best = min(best, float(np.linalg.norm(r - G[0])))
                continue
            coef, *_ = np.linalg.lstsq(D, r - G[0], rcond=None)
            theta = np.concatenate([[1.0 - coef.sum()], coef])
            if theta.min() < -1e-12:
                continue
            best = min(best, float(np.linalg.norm(G[0] + D @ coef - r)))
    return best
