"""Compiled grid-walk kernels (Amanatides-Woo cell stepping).

All coordinates here are in grid units: x along columns, y along rows, cell (r, c)
spans [c, c+1) x [r, r+1).
"""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _walk_init(gx, gy, dx, dy):
    col = int(math.floor(gx))
    row = int(math.floor(gy))
    if dx > 0.0:
        step_c = 1
        t_max_x = (col + 1.0 - gx) / dx
        t_dx = 1.0 / dx
    elif dx < 0.0:
        step_c = -1
        t_max_x = (gx - col) / -dx
        t_dx = -1.0 / dx
    else:
        step_c = 0
        t_max_x = np.inf
        t_dx = np.inf
    if dy > 0.0:
        step_r = 1
        t_max_y = (row + 1.0 - gy) / dy
        t_dy = 1.0 / dy
    elif dy < 0.0:
        step_r = -1
        t_max_y = (gy - row) / -dy
        t_dy = -1.0 / dy
    else:
        step_r = 0
        t_max_y = np.inf
        t_dy = np.inf
    return row, col, step_r, step_c, t_max_x, t_max_y, t_dx, t_dy


@njit(cache=True)
def cast_rays(occ, gx, gy, angles, max_t):
    """Distance (grid units) to the first occupied cell along each bearing.

    Returns (t, hit). Rays leaving the raster or exceeding ``max_t`` report
    ``max_t`` and hit=False.
    """
    n_rows, n_cols = occ.shape
    n = angles.shape[0]
    out_t = np.empty(n)
    out_hit = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        dx = math.cos(angles[i])
        dy = math.sin(angles[i])
        row, col, step_r, step_c, t_max_x, t_max_y, t_dx, t_dy = _walk_init(gx, gy, dx, dy)
        out_t[i] = max_t
        if 0 <= row < n_rows and 0 <= col < n_cols and occ[row, col]:
            out_t[i] = 0.0
            out_hit[i] = True
            continue
        while True:
            if t_max_x < t_max_y:
                t = t_max_x
                t_max_x += t_dx
                col += step_c
            else:
                t = t_max_y
                t_max_y += t_dy
                row += step_r
            if t > max_t:
                break
            if row < 0 or row >= n_rows or col < 0 or col >= n_cols:
                break
            if occ[row, col]:
                out_t[i] = t
                out_hit[i] = True
                break
    return out_t, out_hit


@njit(cache=True)
def mark_scan(marks, gx, gy, angles, lengths, hits, nudge):
    """Mark cells seen by one scan: 1 = traversed free, 2 = beam endpoint hit.

    Cells strictly between the sensor cell and the endpoint cell are marked free.
    A hit mark is never downgraded to free within the same scan.
    """
    n_rows, n_cols = marks.shape
    for i in range(angles.shape[0]):
        dx = math.cos(angles[i])
        dy = math.sin(angles[i])
        length = lengths[i]
        ex = gx + (length + nudge) * dx
        ey = gy + (length + nudge) * dy
        end_c = int(math.floor(ex))
        end_r = int(math.floor(ey))
        row, col, step_r, step_c, t_max_x, t_max_y, t_dx, t_dy = _walk_init(gx, gy, dx, dy)
        while True:
            if t_max_x < t_max_y:
                t = t_max_x
                t_max_x += t_dx
                col += step_c
            else:
                t = t_max_y
                t_max_y += t_dy
                row += step_r
            if t >= length + nudge:
                break
            if row == end_r and col == end_c:
                break
            if row < 0 or row >= n_rows or col < 0 or col >= n_cols:
                break
            if marks[row, col] == 0:
                marks[row, col] = 1
        if hits[i] and 0 <= end_r < n_rows and 0 <= end_c < n_cols:
            marks[end_r, end_c] = 2
