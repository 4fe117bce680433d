# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling loops; mirrors betagraph._kernels_py exactly."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def coupled_degrees(const double[::1] u, const cnp.int64_t[::1] labels,
                    const double[:, ::1] table, bint want_mask=False):
    cdef Py_ssize_t n = labels.shape[0]
    cdef Py_ssize_t i, j, r = 0
    cdef cnp.int64_t li
    degrees = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] deg = degrees
    mask = None
    cdef cnp.uint8_t[::1] m
    if want_mask:
        mask = np.zeros(u.shape[0], dtype=np.uint8)
        m = mask
    for i in range(n - 1):
        li = labels[i]
        for j in range(i + 1, n):
            if u[r] < table[li, labels[j]]:
                deg[i] += 1
                deg[j] += 1
                if want_mask:
                    m[r] = 1
            r += 1
    if want_mask:
        return degrees, mask.view(np.bool_)
    return degrees, None


def walk_triangle(const cnp.int64_t[::1] gaps, cnp.int64_t cursor,
                  const cnp.int64_t[::1] verts, cnp.int64_t[::1] degrees):
    """Add the edges at positions cursor-1+cumsum(gaps) of the pair triangle of
    ``verts`` (row-major, a<b) to ``degrees``.  Returns the next cursor, or the
    block size once the walk has left the block."""
    cdef Py_ssize_t m = verts.shape[0]
    cdef cnp.int64_t total = m * (m - 1) // 2
    cdef cnp.int64_t pos = cursor - 1
    cdef cnp.int64_t a = 0, row_start = 0, row_len = m - 1
    cdef Py_ssize_t g
    for g in range(gaps.shape[0]):
        pos += gaps[g]
        if pos >= total:
            return total
        while pos >= row_start + row_len:
            row_start += row_len
            a += 1
            row_len -= 1
        degrees[verts[a]] += 1
        degrees[verts[a + 1 + (pos - row_start)]] += 1
    return pos + 1


def walk_rectangle(const cnp.int64_t[::1] gaps, cnp.int64_t cursor,
                   const cnp.int64_t[::1] rows, const cnp.int64_t[::1] cols,
                   cnp.int64_t[::1] degrees):
    cdef cnp.int64_t n2 = cols.shape[0]
    cdef cnp.int64_t total = rows.shape[0] * n2
    cdef cnp.int64_t pos = cursor - 1
    cdef Py_ssize_t g
    for g in range(gaps.shape[0]):
        pos += gaps[g]
        if pos >= total:
            return total
        degrees[rows[pos // n2]] += 1
        degrees[cols[pos % n2]] += 1
    return pos + 1
