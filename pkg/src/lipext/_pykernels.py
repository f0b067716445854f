"""Pure-Python/numpy implementations of the hot kernels.

Each function here has a twin with an identical signature in ``_ckernels.pyx``.
The compiled module is preferred at import time (see ``_backend``); this one is
the fallback and the reference the compiled kernels are tested against.
"""

from __future__ import annotations

import heapq

import numpy as np

BACKEND_NAME = "python"

_COARSE_STRIDE = 16
_ROW_BLOCK = 128


def max_pair_ratio(X, U):
    """Largest ``|U_i - U_j| / |X_i - X_j|`` over pairs ``i < j``.

    Pairs with ``X_i == X_j`` contribute ``inf`` when their ``U`` differ and
    nothing otherwise. Returns ``(ratio, i, j)``; ``(0.0, -1, -1)`` when no
    pair contributes.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    U = np.ascontiguousarray(U, dtype=np.float64)
    n = X.shape[0]
    best, bi, bj = 0.0, -1, -1
    for i in range(n - 1):
        dx = np.sqrt(np.sum((X[i + 1:] - X[i]) ** 2, axis=1))
        du = np.sqrt(np.sum((U[i + 1:] - U[i]) ** 2, axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(dx > 0.0, du / np.where(dx > 0.0, dx, 1.0),
                         np.where(du > 0.0, np.inf, 0.0))
        k = int(np.argmax(r))
        if r[k] > best:
            best, bi, bj = float(r[k]), i, i + 1 + k
    return best, bi, bj


def _grid_axes(lo, step, counts):
    return [lo[a] + step * np.arange(counts[a], dtype=np.float64)
            for a in range(len(counts))]


def _eval_block(pts, centers, radii2):
    # pts: (P, d) -> max_i |p - c_i|^2 - r_i^2
    d2 = np.sum((pts[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    return np.max(d2 - radii2[None, :], axis=1)


def grid_min(centers, radii2, lo, step, counts):
    """Exhaustive minimum of ``max_i |z - c_i|^2 - r_i^2`` over a regular grid.

    The grid has ``counts[a]`` nodes along axis ``a`` starting at ``lo[a]``
    with spacing ``step``; flat indices are row-major. Returns
    ``(value, flat_index)``.
    """
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    radii2 = np.ascontiguousarray(radii2, dtype=np.float64)
    counts = [int(c) for c in counts]
    d = len(counts)
    axes = _grid_axes(np.asarray(lo, dtype=np.float64), float(step), counts)

    # seed the incumbent from a strided subgrid; this only affects pruning
    sub = np.meshgrid(*[ax[::_COARSE_STRIDE] for ax in axes], indexing="ij")
    sub_idx = np.meshgrid(*[np.arange(0, c, _COARSE_STRIDE) for c in counts],
                          indexing="ij")
    pts = np.stack([s.ravel() for s in sub], axis=1)
    vals = _eval_block(pts, centers, radii2)
    k = int(np.argmin(vals))
    best = float(vals[k])
    best_flat = int(np.ravel_multi_index(tuple(ix.ravel()[k] for ix in sub_idx),
                                         counts))

    last = axes[-1]
    prefix_counts = counts[:-1]
    if prefix_counts:
        prefix = np.stack([g.ravel() for g in np.meshgrid(*axes[:-1], indexing="ij")],
                          axis=1)
        lb = np.max(np.sum((prefix[:, None, :] - centers[None, :, :-1]) ** 2, axis=2)
                    - radii2[None, :], axis=1)
    else:
        prefix = np.zeros((1, 0))
        lb = np.full(1, -np.inf)
    rows = np.nonzero(lb < best)[0]
    n_last = counts[-1]
    for start in range(0, rows.size, _ROW_BLOCK):
        blk = rows[start:start + _ROW_BLOCK]
        # partial squared distance from the row prefix, then add the last axis
        if d > 1:
            pre = np.sum((prefix[blk][:, None, :] - centers[None, :, :-1]) ** 2,
                         axis=2) - radii2[None, :]
        else:
            pre = -radii2[None, :]
        tail = (last[:, None] - centers[None, :, -1]) ** 2  # (n_last, k)
        vals = np.max(pre[:, None, :] + tail[None, :, :], axis=2)  # (rows, n_last)
        k = int(np.argmin(vals))
        v = float(vals.flat[k])
        if v < best:
            r, c = divmod(k, n_last)
            best = v
            best_flat = int(blk[r]) * n_last + c
    return best, best_flat


def dijkstra(indptr, indices, weights, source, mask=None):
    """Single-source shortest paths on a CSR graph with nonnegative weights.

    Zero weights are legitimate edges. When ``mask`` is given, paths may only
    visit nodes with a nonzero mask entry.
    """
    n = len(indptr) - 1
    dist = np.full(n, np.inf)
    if mask is not None and not mask[source]:
        return dist
    dist[source] = 0.0
    done = np.zeros(n, dtype=bool)
    heap = [(0.0, int(source))]
    indptr = np.asarray(indptr)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for e in range(indptr[u], indptr[u + 1]):
            v = int(indices[e])
            if done[v] or (mask is not None and not mask[v]):
                continue
            nd = d + weights[e]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def polyak_warm_start(centers, radii2, z0, iters):
    """Subgradient descent on ``max_i |z - c_i|^2 - r_i^2`` with Polyak steps.

    The step target is a running dual lower bound built from the step-weighted
    average of active-piece indicators. Returns ``(z_best, f_best, weights)``.
    """
    C = np.ascontiguousarray(centers, dtype=np.float64)
    r2 = np.ascontiguousarray(radii2, dtype=np.float64)
    z = np.array(z0, dtype=np.float64)
    k = C.shape[0]
    b = np.sum(C * C, axis=1) - r2
    lower = float(np.max(-r2))
    acc = np.zeros(k)
    wsum = 0.0
    z_best = z.copy()
    f_best = np.inf
    lam = np.zeros(k)
    lam[0] = 1.0
    for _ in range(int(iters)):
        f_all = np.sum((z - C) ** 2, axis=1) - r2
        i = int(np.argmax(f_all))
        f = float(f_all[i])
        if f < f_best:
            f_best = f
            z_best = z.copy()
        g = 2.0 * (z - C[i])
        gn2 = float(g @ g)
        if gn2 == 0.0 or f - lower <= 0.0:
            break
        alpha = (f - lower) / gn2
        acc[i] += alpha
        wsum += alpha
        lam = acc / wsum
        y = lam @ C
        lower = max(lower, float(lam @ b - y @ y))
        z = z - alpha * g
    return z_best, float(f_best), lam
