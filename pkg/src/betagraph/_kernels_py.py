"""Pure numpy implementations of the sampling loops in ``_kernels.pyx``.

Both backends consume identical inputs and return identical integers, so the
choice of backend never changes a sample.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _pairs(n):
    i, j = np.triu_indices(n, 1)
    return i.astype(np.int64), j.astype(np.int64)


def coupled_degrees(u, labels, table, want_mask=False):
    n = labels.shape[0]
    i, j = _pairs(n)
    mask = u < table[labels[i], labels[j]]
    degrees = np.bincount(i[mask], minlength=n) + np.bincount(j[mask], minlength=n)
    return degrees.astype(np.int64), (mask if want_mask else None)


def _positions(gaps, cursor, total):
    pos = cursor - 1 + np.cumsum(gaps)
    if pos.size == 0:
        return pos, cursor
    nxt = total if pos[-1] >= total else int(pos[-1]) + 1
    return pos[pos < total], nxt


def walk_triangle(gaps, cursor, verts, degrees):
    m = verts.shape[0]
    pos, nxt = _positions(gaps, cursor, m * (m - 1) // 2)
    a_idx = np.arange(m, dtype=np.int64)
    offsets = a_idx * (m - 1) - a_idx * (a_idx - 1) // 2
    a = np.searchsorted(offsets, pos, side="right") - 1
    b = pos - offsets[a] + a + 1
    np.add.at(degrees, verts[a], 1)
    np.add.at(degrees, verts[b], 1)
    return nxt


def walk_rectangle(gaps, cursor, rows, cols, degrees):
    n2 = cols.shape[0]
    total = rows.shape[0] * n2
    pos, nxt = _positions(gaps, cursor, total)
    np.add.at(degrees, rows[pos // n2], 1)
    np.add.at(degrees, cols[pos % n2], 1)
    return nxt
