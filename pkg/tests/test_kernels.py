"""The compiled kernels and the numpy fallback must agree exactly."""
import numpy as np
import pytest

from betagraph import _kernels_py, kernels

try:
    from betagraph import _kernels as ext
except ImportError:  # pragma: no cover
    ext = None

needs_ext = pytest.mark.skipif(ext is None, reason="compiled extension not built")


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
    if ext is not None:
        assert kernels.BACKEND == "cython"


@needs_ext
@pytest.mark.parametrize("n", [2, 3, 17, 60])
def test_coupled_degrees_identical(n, rng):
    m = n * (n - 1) // 2
    u = rng.random(m)
    labels = rng.integers(0, 3, n).astype(np.int64)
    table = rng.random((3, 3))
    table = np.ascontiguousarray((table + table.T) / 2)
    d1, m1 = ext.coupled_degrees(u, labels, table, True)
    d2, m2 = _kernels_py.coupled_degrees(u, labels, table, True)
    assert np.array_equal(d1, d2)
    assert np.array_equal(m1, m2)
    d3, m3 = ext.coupled_degrees(u, labels, table, False)
    assert m3 is None and np.array_equal(d3, d1)


def _run_walk(fn, gaps_list, *args):
    deg = np.zeros(args[-1], dtype=np.int64)
    cursor = 0
    trace = []
    for gaps in gaps_list:
        cursor = fn(gaps, cursor, *args[:-1], deg)
        trace.append(cursor)
    return deg, trace


@needs_ext
@pytest.mark.parametrize("seed", range(5))
def test_walk_triangle_identical(seed):
    rng = np.random.default_rng(seed)
    n = 40
    verts = np.sort(rng.choice(n, 25, replace=False)).astype(np.int64)
    gaps = [rng.geometric(0.05, size=12).astype(np.int64) for _ in range(40)]
    total = 25 * 24 // 2
    d1 = np.zeros(n, dtype=np.int64)
    d2 = np.zeros(n, dtype=np.int64)
    c1 = c2 = 0
    for g in gaps:
        if c1 >= total:
            break
        c1 = ext.walk_triangle(g, c1, verts, d1)
        c2 = _kernels_py.walk_triangle(g, c2, verts, d2)
        assert c1 == c2
    assert np.array_equal(d1, d2)


@needs_ext
@pytest.mark.parametrize("seed", range(5))
def test_walk_rectangle_identical(seed):
    rng = np.random.default_rng(seed)
    n = 50
    perm = rng.permutation(n).astype(np.int64)
    rows, cols = np.sort(perm[:12]), np.sort(perm[12:])
    total = rows.size * cols.size
    d1 = np.zeros(n, dtype=np.int64)
    d2 = np.zeros(n, dtype=np.int64)
    c1 = c2 = 0
    while c1 < total:
        g = rng.geometric(0.08, size=9).astype(np.int64)
        c1 = ext.walk_rectangle(g, c1, rows, cols, d1)
        c2 = _kernels_py.walk_rectangle(g, c2, rows, cols, d2)
        assert c1 == c2
    assert np.array_equal(d1, d2)


def test_walk_triangle_visits_every_pair_with_unit_gaps():
    verts = np.array([1, 3, 4, 7], dtype=np.int64)
    deg = np.zeros(8, dtype=np.int64)
    done = _kernels_py.walk_triangle(np.ones(10, dtype=np.int64), 0, verts, deg)
    assert done == 6
    assert deg.tolist() == [0, 3, 0, 3, 3, 0, 0, 3]


def test_walk_rectangle_visits_every_pair_with_unit_gaps():
    rows = np.array([0, 2], dtype=np.int64)
    cols = np.array([1, 3, 4], dtype=np.int64)
    deg = np.zeros(5, dtype=np.int64)
    done = kernels.walk_rectangle(np.ones(7, dtype=np.int64), 0, rows, cols, deg)
    assert done == 6
    assert deg.tolist() == [3, 2, 3, 2, 2]
