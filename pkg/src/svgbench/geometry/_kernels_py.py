"""Pure-Python/numpy geometry kernels (fallback for the compiled extension).

Both implementations must stay behaviorally identical: same tie-breaking
(first minimum wins), same sequential summation order, so that results are
bit-equal whichever one the dispatcher picks.
"""

from typing import List, Tuple

import numpy as np

IMPL_NAME = "python"

# Direction encoding for the boundary walk: 0=+x, 1=+y, 2=-x, 3=-y.
_DX = (1, 0, -1, 0)
_DY = (0, 1, 0, -1)


def trace_outer_ring(padded: np.ndarray, start_x: int, start_y: int) -> np.ndarray:
    """Walk the outer boundary of a 4-connected foreground component.

    `padded` is the component mask with a 1-pixel zero border, so the pixel
    at mask coords (row, col) lives at padded[row+1, col+1]. (start_x,
    start_y) is the lattice corner at the top-left of the component's first
    foreground pixel in scan order; the walk starts eastward along its top
    edge and keeps foreground on the right (image coords, y down).

    Returns the ring's turn corners as float64 (n, 2) in (x, y) lattice
    coordinates of the unpadded mask. Positive shoelace orientation under
    y-down axes.
    """
    grid = np.ascontiguousarray(padded, dtype=np.uint8)
    h2, w2 = grid.shape
    x, y = int(start_x), int(start_y)
    d = 0
    verts: List[Tuple[float, float]] = []
    max_steps = 4 * h2 * w2 + 8
    for _ in range(max_steps):
        x += _DX[d]
        y += _DY[d]
        # Pixels ahead-left / ahead-right of the corner relative to travel.
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
                verts.append((float(x), float(y)))
            return np.asarray(verts, dtype=np.float64)
        if nd != d:
            verts.append((float(x), float(y)))
        d = nd
    raise RuntimeError("boundary walk did not close; corrupt mask input")


def shoelace_signed(xs: np.ndarray, ys: np.ndarray) -> float:
    """Signed shoelace area, accumulated sequentially for cross-impl parity."""
    n = len(xs)
    total = 0.0
    for i in range(n):
        j = i + 1 if i + 1 < n else 0
        total += xs[i] * ys[j] - xs[j] * ys[i]
    return 0.5 * total


def _ear(xs: np.ndarray, ys: np.ndarray, p: int, i: int, nx: int) -> float:
    """Signed area of triangle (prev, i, next); removing i shifts the ring's
    shoelace area by exactly -ear."""
    return 0.5 * (
        (xs[i] - xs[p]) * (ys[nx] - ys[p]) - (xs[nx] - xs[p]) * (ys[i] - ys[p])
    )


def decimate_ring(
    xs: np.ndarray,
    ys: np.ndarray,
    area_tol_abs: float,
    max_vertices: int,
) -> Tuple[np.ndarray, bool]:
    """Greedily remove vertices while the ring's area drift stays bounded.

    At each step the vertex with the smallest-magnitude ear is removed if the
    cumulative |area - area0| stays within area_tol_abs. When the vertex
    budget is still exceeded but the min-ear vertex would overshoot, the
    drift-optimal vertex (the one whose removal minimizes cumulative drift,
    allowing sign cancellation) is tried before giving up.

    Returns (keep mask uint8[n], ok); ok is False when no removal sequence
    found satisfies both the budget and the tolerance.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    n = len(xs)
    keep = np.ones(n, dtype=np.uint8)
    if n <= 3:
        return keep, n <= max_vertices
    nxt = np.arange(1, n + 1, dtype=np.int64)
    nxt[-1] = 0
    prv = np.arange(-1, n - 1, dtype=np.int64)
    prv[0] = n - 1

    area0 = shoelace_signed(xs, ys)
    area = area0
    ears = np.empty(n, dtype=np.float64)
    for i in range(n):
        ears[i] = _ear(xs, ys, prv[i], i, nxt[i])
    alive = np.ones(n, dtype=bool)
    alive_count = n

    while alive_count > 3:
        abs_ears = np.where(alive, np.abs(ears), np.inf)
        pick = int(np.argmin(abs_ears))
        if abs((area - ears[pick]) - area0) > area_tol_abs:
            if alive_count <= max_vertices:
                break
            drift = np.where(alive, np.abs((area - ears) - area0), np.inf)
            pick = int(np.argmin(drift))
            if drift[pick] > area_tol_abs:
                return keep_mask(keep, alive), False
        area -= ears[pick]
        alive[pick] = False
        alive_count -= 1
        p, nx = prv[pick], nxt[pick]
        nxt[p] = nx
        prv[nx] = p
        ears[p] = _ear(xs, ys, prv[p], p, nxt[p])
        ears[nx] = _ear(xs, ys, prv[nx], nx, nxt[nx])

    return keep_mask(keep, alive), alive_count <= max_vertices


def keep_mask(keep: np.ndarray, alive: np.ndarray) -> np.ndarray:
    keep[:] = 0
    keep[alive] = 1
    return keep
