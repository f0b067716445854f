"""Compiled kernels against the numpy fallback and independent oracles."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helpers import pair_ratio
from lipext import _pykernels

try:
    from lipext import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

BACKENDS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])
ids = [k.BACKEND_NAME for k in BACKENDS]

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_compiled_backend_is_built():
    assert _ckernels is not None and _ckernels.BACKEND_NAME == "cython"


@pytest.mark.parametrize("k", BACKENDS, ids=ids)
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_max_pair_ratio_matches_brute_force(k, data):
    n = data.draw(st.integers(2, 12))
    X = np.round(data.draw(arrays(np.float64, (n, 2), elements=finite)), 6)
    U = data.draw(arrays(np.float64, (n, 3), elements=finite))
    if len({tuple(x) for x in X}) < n:
        return
    ratio, i, j = k.max_pair_ratio(X, U)
    assert ratio == pytest.approx(pair_ratio(X, U), rel=1e-12, abs=1e-300)
    if ratio > 0:
        assert np.linalg.norm(U[i] - U[j]) / np.linalg.norm(X[i] - X[j]) == pytest.approx(ratio)


@pytest.mark.parametrize("k", BACKENDS, ids=ids)
def test_max_pair_ratio_duplicate_points(k):
    X = np.array([[0.0, 0.0], [0.0, 0.0]])
    assert k.max_pair_ratio(X, np.array([[1.0], [2.0]]))[0] == np.inf
    assert k.max_pair_ratio(X, np.array([[1.0], [1.0]])) == (0.0, -1, -1)


@pytest.mark.parametrize("k", BACKENDS, ids=ids)
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_grid_min_matches_dense_scan(k, dim):
    rng = np.random.default_rng(dim)
    C = rng.uniform(-1, 1, (4, dim))
    r2 = rng.uniform(0.1, 1.0, 4)
    lo = np.full(dim, -1.5)
    counts = np.full(dim, {1: 301, 2: 61, 3: 21}[dim], dtype=np.int64)
    step = 3.0 / (counts[0] - 1)
    axes = [lo[a] + step * np.arange(counts[a]) for a in range(dim)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, dim)
    F = np.max(np.sum((grid[:, None] - C[None]) ** 2, axis=2) - r2, axis=1)
    value, idx = k.grid_min(C, r2, lo, step, counts)
    assert value == pytest.approx(F.min(), abs=1e-12)
    assert F[idx] == pytest.approx(value, abs=1e-12)


def _random_csr(rng, n, p=0.2, zero_frac=0.3):
    rows, cols, w = [], [], []
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < p:
                rows.append(i)
                cols.append(j)
                w.append(0.0 if rng.random() < zero_frac else rng.uniform(0, 3))
    order = np.lexsort((cols, rows))
    rows, cols, w = np.array(rows)[order], np.array(cols)[order], np.array(w)[order]
    indptr = np.searchsorted(rows, np.arange(n + 1)).astype(np.int64)
    return indptr, cols.astype(np.int64), w, rows


@pytest.mark.parametrize("k", BACKENDS, ids=ids)
@pytest.mark.parametrize("seed", range(5))
def test_dijkstra_against_networkx(k, seed):
    nx = pytest.importorskip("networkx")
    rng = np.random.default_rng(seed)
    n = 30
    indptr, indices, w, rows = _random_csr(rng, n)
    G = nx.DiGraph()
    G.add_nodes_from(range(n))
    for a, b, c in zip(rows, indices, w):
        G.add_edge(int(a), int(b), weight=float(c))
    mask = rng.random(n) < 0.8
    mask[0] = True
    for m in (None, mask):
        H = G if m is None else G.subgraph(np.flatnonzero(m).tolist())
        ref = nx.single_source_dijkstra_path_length(H, 0)
        dist = k.dijkstra(indptr, indices, w, 0, None if m is None else m.astype(np.uint8))
        for node in range(n):
            assert dist[node] == pytest.approx(ref.get(node, np.inf), abs=1e-12)


@pytest.mark.parametrize("k", BACKENDS, ids=ids)
def test_dijkstra_masked_source(k):
    indptr = np.array([0, 1, 1], dtype=np.int64)
    dist = k.dijkstra(indptr, np.array([1], dtype=np.int64), np.array([1.0]), 0,
                      np.array([0, 1], dtype=np.uint8))
    assert np.all(np.isinf(dist))


@pytest.mark.parametrize("k", BACKENDS, ids=ids)
def test_polyak_warm_start_descends(k):
    rng = np.random.default_rng(0)
    C = rng.standard_normal((6, 3))
    r2 = rng.uniform(0.5, 2.0, 6)
    z0 = np.zeros(3)
    z, f, weights = k.polyak_warm_start(C, r2, z0, 200)
    f0 = np.max(np.sum((z0 - C) ** 2, axis=1) - r2)
    assert f <= f0
    assert f == pytest.approx(np.max(np.sum((z - C) ** 2, axis=1) - r2))
    assert np.all(weights >= 0) and weights.sum() == pytest.approx(1.0)


def test_backends_agree_on_warm_start():
    if _ckernels is None:
        pytest.skip("compiled kernels unavailable")
    rng = np.random.default_rng(1)
    C = rng.standard_normal((5, 2))
    r2 = rng.uniform(0.5, 2.0, 5)
    a = _pykernels.polyak_warm_start(C, r2, np.zeros(2), 64)
    b = _ckernels.polyak_warm_start(C, r2, np.zeros(2), 64)
    np.testing.assert_allclose(a[0], b[0], atol=1e-10)
    assert a[1] == pytest.approx(b[1], abs=1e-10)


def test_pure_python_backend_end_to_end():
    import os
    import subprocess
    import sys

    code = ("import lipext; from lipext import *; t = triangle(4.0, 1.0); "
            "r = kirszbraun_extend(ExtensionRequest(t.u, t.v, t.queries)); "
            "print(lipext.BACKEND, r.report.sup_distance_achieved)")
    env = {**os.environ, "LIPEXT_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env=env, check=True).stdout.split()
    assert out[0] == "python" and float(out[1]) == pytest.approx(3.0)
