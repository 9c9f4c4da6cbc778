# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pixel-loop kernels; see ``_pykernels`` for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ceil, fabs, round as c_round

cnp.import_array()

cdef int DX[8]
cdef int DY[8]
DX[:] = [-1, -1, 0, 1, 1, 1, 0, -1]
DY[:] = [0, 1, 1, 1, 0, -1, -1, -1]

cdef double ON_EDGE_EPS = 1e-7


cdef inline Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t root = i, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


def label8(mask):
    cdef const cnp.uint8_t[:, ::1] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef Py_ssize_t[:, ::1] prov = np.zeros((h, w), dtype=np.intp)
    cdef Py_ssize_t[::1] parent = np.zeros(h * w + 1, dtype=np.intp)
    cdef Py_ssize_t nlab = 1
    cdef Py_ssize_t x, y, k, xx, lab, r, n_neigh
    cdef Py_ssize_t neigh[4]
    cdef int dx

    with nogil:
        for y in range(h):
            for x in range(w):
                if m[y, x] == 0:
                    continue
                n_neigh = 0
                if x > 0 and m[y, x - 1]:
                    neigh[n_neigh] = prov[y, x - 1]
                    n_neigh += 1
                if y > 0:
                    for dx in range(-1, 2):
                        xx = x + dx
                        if 0 <= xx < w and m[y - 1, xx]:
                            neigh[n_neigh] = prov[y - 1, xx]
                            n_neigh += 1
                if n_neigh == 0:
                    parent[nlab] = nlab
                    prov[y, x] = nlab
                    nlab += 1
                    continue
                lab = _find(parent, neigh[0])
                for k in range(1, n_neigh):
                    r = _find(parent, neigh[k])
                    if r < lab:
                        lab = r
                prov[y, x] = lab
                for k in range(n_neigh):
                    r = _find(parent, neigh[k])
                    if r != lab:
                        if r < lab:
                            parent[lab] = r
                            lab = r
                        else:
                            parent[r] = lab

    out_arr = np.zeros((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] out = out_arr
    cdef Py_ssize_t[::1] final = np.zeros(nlab + 1, dtype=np.intp)
    cdef Py_ssize_t count = 0
    with nogil:
        for y in range(h):
            for x in range(w):
                if prov[y, x]:
                    r = _find(parent, prov[y, x])
                    if final[r] == 0:
                        count += 1
                        final[r] = count
                    out[y, x] = <cnp.int32_t>final[r]
    return out_arr, int(count)


cdef inline bint _fg(const cnp.uint8_t[:, ::1] m, Py_ssize_t x, Py_ssize_t y) noexcept nogil:
    return 0 <= x < m.shape[1] and 0 <= y < m.shape[0] and m[y, x] != 0


def moore_trace(mask, Py_ssize_t sx, Py_ssize_t sy):
    cdef const cnp.uint8_t[:, ::1] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef Py_ssize_t limit = 4 * h * w + 8
    buf_arr = np.empty((limit + 1, 2), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] buf = buf_arr
    cdef Py_ssize_t n = 1, it, j, cx, cy, bx, by, curx = sx, cury = sy
    cdef Py_ssize_t fmx = -1, fmy = -1, nx, ny
    cdef int k0 = 0, d, pd, kk
    cdef bint found, have_first = False

    buf[0, 0] = sx
    buf[0, 1] = sy
    with nogil:
        for it in range(limit):
            found = False
            for j in range(8):
                d = (k0 + j) % 8
                cx = curx + DX[d]
                cy = cury + DY[d]
                if _fg(m, cx, cy):
                    found = True
                    nx = cx
                    ny = cy
                    pd = (k0 + j + 7) % 8
                    bx = curx + DX[pd] - cx
                    by = cury + DY[pd] - cy
                    for kk in range(8):
                        if DX[kk] == bx and DY[kk] == by:
                            k0 = kk
                            break
                    break
            if not found:
                break
            if not have_first:
                have_first = True
                fmx = nx
                fmy = ny
            elif curx == sx and cury == sy and nx == fmx and ny == fmy:
                break
            buf[n, 0] = nx
            buf[n, 1] = ny
            n += 1
            curx = nx
            cury = ny
    if n > 1 and buf[n - 1, 0] == sx and buf[n - 1, 1] == sy:
        n -= 1
    return buf_arr[:n].copy()


def bilinear(field, xs, ys):
    cdef const double[:, ::1] f = np.ascontiguousarray(field, dtype=np.float64)
    cdef const double[::1] px = np.ascontiguousarray(xs, dtype=np.float64).ravel()
    cdef const double[::1] py = np.ascontiguousarray(ys, dtype=np.float64).ravel()
    cdef Py_ssize_t h = f.shape[0], w = f.shape[1], n = px.shape[0], i
    cdef Py_ssize_t x0, y0, x1, y1, xmax = w - 2 if w >= 2 else 0, ymax = h - 2 if h >= 2 else 0
    cdef double fx, fy, top, bot
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n):
            x0 = <Py_ssize_t>floor(px[i])
            y0 = <Py_ssize_t>floor(py[i])
            if x0 < 0:
                x0 = 0
            if x0 > xmax:
                x0 = xmax
            if y0 < 0:
                y0 = 0
            if y0 > ymax:
                y0 = ymax
            fx = px[i] - x0
            fy = py[i] - y0
            x1 = x0 + 1 if x0 + 1 < w else w - 1
            y1 = y0 + 1 if y0 + 1 < h else h - 1
            top = f[y0, x0] * (1.0 - fx) + f[y0, x1] * fx
            bot = f[y1, x0] * (1.0 - fx) + f[y1, x1] * fx
            out[i] = top * (1.0 - fy) + bot * fy
    return out_arr.reshape(np.shape(xs))


def fill_polygon(pts, Py_ssize_t height, Py_ssize_t width):
    cdef const double[:, ::1] p = np.ascontiguousarray(pts, dtype=np.float64).reshape(-1, 2)
    out_arr = np.zeros((height, width), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t n = p.shape[0], i, j, k, y, xi, yi, lo, hi, ncross, ylo, yhi
    cdef double x0, y0, x1, y1, t, xv, tmp, eps = ON_EDGE_EPS
    if n == 0:
        return out_arr
    cross_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] cross = cross_arr

    with nogil:
        for y in range(height):
            ncross = 0
            for i in range(n):
                y0 = p[i, 1]
                y1 = p[(i + 1) % n, 1]
                if (y0 <= y < y1) or (y1 <= y < y0):
                    x0 = p[i, 0]
                    x1 = p[(i + 1) % n, 0]
                    t = (y - y0) / (y1 - y0)
                    cross[ncross] = x0 + t * (x1 - x0)
                    ncross += 1
            # insertion sort; crossing counts per row are small
            for i in range(1, ncross):
                tmp = cross[i]
                j = i - 1
                while j >= 0 and cross[j] > tmp:
                    cross[j + 1] = cross[j]
                    j -= 1
                cross[j + 1] = tmp
            k = 0
            while k + 1 < ncross:
                lo = <Py_ssize_t>ceil(cross[k] - eps)
                hi = <Py_ssize_t>floor(cross[k + 1] + eps)
                if lo < 0:
                    lo = 0
                if hi > width - 1:
                    hi = width - 1
                for xi in range(lo, hi + 1):
                    out[y, xi] = 1
                k += 2

        for i in range(n):
            x0 = p[i, 0]
            y0 = p[i, 1]
            x1 = p[(i + 1) % n, 0]
            y1 = p[(i + 1) % n, 1]
            if fabs(y1 - y0) < eps:
                yi = <Py_ssize_t>c_round(y0)
                if fabs(y0 - yi) < eps and 0 <= yi < height:
                    lo = <Py_ssize_t>ceil((x0 if x0 < x1 else x1) - eps)
                    hi = <Py_ssize_t>floor((x1 if x0 < x1 else x0) + eps)
                    if lo < 0:
                        lo = 0
                    if hi > width - 1:
                        hi = width - 1
                    for xi in range(lo, hi + 1):
                        out[yi, xi] = 1
                continue
            ylo = <Py_ssize_t>ceil((y0 if y0 < y1 else y1) - eps)
            yhi = <Py_ssize_t>floor((y1 if y0 < y1 else y0) + eps)
            if ylo < 0:
                ylo = 0
            if yhi > height - 1:
                yhi = height - 1
            for yi in range(ylo, yhi + 1):
                xv = x0 + (yi - y0) / (y1 - y0) * (x1 - x0)
                xi = <Py_ssize_t>c_round(xv)
                if fabs(xv - xi) < eps and 0 <= xi < width:
                    out[yi, xi] = 1
    return out_arr
