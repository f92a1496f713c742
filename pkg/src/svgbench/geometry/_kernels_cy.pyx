# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry kernels; mirrors _kernels_py exactly (same tie-breaking,
same sequential accumulation order) so results are bit-equal across impls."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

IMPL_NAME = "compiled"

cdef int[4] _DX = [1, 0, -1, 0]
cdef int[4] _DY = [0, 1, 0, -1]


def trace_outer_ring(padded, int start_x, int start_y):
    """See _kernels_py.trace_outer_ring."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] grid = np.ascontiguousarray(
        padded, dtype=np.uint8
    )
    cdef Py_ssize_t h2 = grid.shape[0]
    cdef Py_ssize_t w2 = grid.shape[1]
    cdef long x = start_x
    cdef long y = start_y
    cdef int d = 0
    cdef int nd
    cdef cnp.uint8_t al, ar
    cdef long max_steps = 4 * h2 * w2 + 8
    cdef long step
    # Worst-case vertex count is bounded by the number of boundary edges.
    cdef cnp.ndarray[cnp.float64_t, ndim=2] buf = np.empty(
        (max_steps, 2), dtype=np.float64
    )
    cdef Py_ssize_t count = 0
    for step in range(max_steps):
        x += _DX[d]
        y += _DY[d]
        if d == 0:
            al = grid[y, x + 1]
            ar = grid[y + 1, x + 1]
        elif d == 1:
            al = grid[y + 1, x + 1]
            ar = grid[y + 1, x]
        elif d == 2:
            al = grid[y + 1, x]
            ar = grid[y, x]
        else:
            al = grid[y, x]
            ar = grid[y, x + 1]
        if al and ar:
            nd = (d - 1) % 4
        elif ar:
            nd = d
        else:
            nd = (d + 1) % 4
        if x == start_x and y == start_y:
            if nd != d:
                buf[count, 0] = x
                buf[count, 1] = y
                count += 1
            return np.array(buf[:count], dtype=np.float64)
        if nd != d:
            buf[count, 0] = x
            buf[count, 1] = y
            count += 1
        d = nd
    raise RuntimeError("boundary walk did not close; corrupt mask input")


def shoelace_signed(xs, ys):
    """Signed shoelace area, sequential accumulation."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] vx = np.ascontiguousarray(
        xs, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] vy = np.ascontiguousarray(
        ys, dtype=np.float64
    )
    cdef Py_ssize_t n = vx.shape[0]
    cdef Py_ssize_t i, j
    cdef double total = 0.0
    for i in range(n):
        j = i + 1 if i + 1 < n else 0
        total += vx[i] * vy[j] - vx[j] * vy[i]
    return 0.5 * total


cdef inline double _ear(double* xs, double* ys, Py_ssize_t p, Py_ssize_t i,
                        Py_ssize_t nx) nogil:
    return 0.5 * (
        (xs[i] - xs[p]) * (ys[nx] - ys[p]) - (xs[nx] - xs[p]) * (ys[i] - ys[p])
    )


def decimate_ring(xs, ys, double area_tol_abs, long max_vertices):
    """See _kernels_py.decimate_ring."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] vx = np.ascontiguousarray(
        xs, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] vy = np.ascontiguousarray(
        ys, dtype=np.float64
    )
    cdef Py_ssize_t n = vx.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] keep = np.ones(n, dtype=np.uint8)
    if n <= 3:
        return keep, n <= max_vertices

    cdef cnp.ndarray[cnp.int64_t, ndim=1] nxt = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] prv = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ears = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] alive = np.ones(n, dtype=np.uint8)
    cdef double* px = &vx[0]
    cdef double* py = &vy[0]
    cdef Py_ssize_t i, p, nx, pick
    cdef double area0, area, best, cand, drift

    for i in range(n):
        nxt[i] = i + 1 if i + 1 < n else 0
        prv[i] = i - 1 if i > 0 else n - 1
    area0 = shoelace_signed(vx, vy)
    area = area0
    for i in range(n):
        ears[i] = _ear(px, py, prv[i], i, nxt[i])

    cdef Py_ssize_t alive_count = n
    while alive_count > 3:
        # first minimum of |ear| among alive
        pick = -1
        best = 0.0
        for i in range(n):
            if alive[i]:
                cand = ears[i] if ears[i] >= 0.0 else -ears[i]
                if pick < 0 or cand < best:
                    best = cand
                    pick = i
        cand = (area - ears[pick]) - area0
        if cand < 0.0:
            cand = -cand
        if cand > area_tol_abs:
            if alive_count <= max_vertices:
                break
            # drift-optimal fallback (allows sign cancellation)
            pick = -1
            best = 0.0
            for i in range(n):
                if alive[i]:
                    drift = (area - ears[i]) - area0
                    if drift < 0.0:
                        drift = -drift
                    if pick < 0 or drift < best:
                        best = drift
                        pick = i
            if best > area_tol_abs:
                return keep_out(keep, alive, n), False
        area -= ears[pick]
        alive[pick] = 0
        alive_count -= 1
        p = prv[pick]
        nx = nxt[pick]
        nxt[p] = nx
        prv[nx] = p
        ears[p] = _ear(px, py, prv[p], p, nxt[p])
        ears[nx] = _ear(px, py, prv[nx], nx, nxt[nx])

    return keep_out(keep, alive, n), alive_count <= max_vertices


cdef keep_out(cnp.ndarray[cnp.uint8_t, ndim=1] keep,
              cnp.ndarray[cnp.uint8_t, ndim=1] alive, Py_ssize_t n):
    cdef Py_ssize_t i
    for i in range(n):
        keep[i] = alive[i]
    return keep
