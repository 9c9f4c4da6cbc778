"""Pure-Python implementations of the pixel-loop kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature
and bit-identical results. These are used when the compiled extension is
unavailable, and always serve as the reference in backend-equivalence tests.
"""

import math

import numpy as np

# Moore neighbourhood, counterclockwise as displayed (rows grow downward),
# starting from the west neighbour.
MOORE_DIRS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))

ON_EDGE_EPS = 1e-7


def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        parent[i], i = root, parent[i]
    return root


def label8(mask):
    """8-connected labelling; labels are 1..n in raster order of first pixel."""
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    h, w = mask.shape
    prov = np.zeros((h, w), dtype=np.int64)
    parent = [0]
    m = mask.tolist()
    for y in range(h):
        row = m[y]
        for x in range(w):
            if not row[x]:
                continue
            neigh = []
            if x > 0 and row[x - 1]:
                neigh.append(prov[y, x - 1])
            if y > 0:
                up = m[y - 1]
                for dx in (-1, 0, 1):
                    xx = x + dx
                    if 0 <= xx < w and up[xx]:
                        neigh.append(prov[y - 1, xx])
            if not neigh:
                lab = len(parent)
                parent.append(lab)
                prov[y, x] = lab
                continue
            lab = min(_find(parent, int(n)) for n in neigh)
            prov[y, x] = lab
            for n in neigh:
                r = _find(parent, int(n))
                if r != lab:
                    lo, hi = (r, lab) if r < lab else (lab, r)
                    parent[hi] = lo
                    lab = lo

    out = np.zeros((h, w), dtype=np.int32)
    final = {}
    for y in range(h):
        for x in range(w):
            p = prov[y, x]
            if p:
                r = _find(parent, int(p))
                if r not in final:
                    final[r] = len(final) + 1
                out[y, x] = final[r]
    return out, len(final)


def moore_trace(mask, sx, sy):
    """Trace the outer boundary of the component containing (sx, sy).

    (sx, sy) must be the raster-first pixel of its component so that the
    west neighbour is background. Returns a (K, 2) int array of (x, y).
    """
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    h, w = mask.shape

    def fg(x, y):
        return 0 <= x < w and 0 <= y < h and mask[y, x] != 0

    start = (sx, sy)
    pts = [start]
    cur = start
    k0 = 0
    first_move = None
    limit = 4 * h * w + 8
    for _ in range(limit):
        nxt = None
        for j in range(8):
            d = MOORE_DIRS[(k0 + j) % 8]
            cx, cy = cur[0] + d[0], cur[1] + d[1]
            if fg(cx, cy):
                nxt = (cx, cy)
                prev = MOORE_DIRS[(k0 + j - 1) % 8]
                bx = cur[0] + prev[0] - cx
                by = cur[1] + prev[1] - cy
                k0 = MOORE_DIRS.index((bx, by))
                break
        if nxt is None:
            break
        if first_move is None:
            first_move = nxt
        elif cur == start and nxt == first_move:
            break
        pts.append(nxt)
        cur = nxt
    if len(pts) > 1 and pts[-1] == start:
        pts.pop()
    return np.array(pts, dtype=np.int64).reshape(-1, 2)


def bilinear(field, xs, ys):
    field = np.asarray(field, dtype=np.float64)
    h, w = field.shape
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.clip(x0, 0, max(w - 2, 0))
    y0 = np.clip(y0, 0, max(h - 2, 0))
    fx = xs - x0
    fy = ys - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    top = field[y0, x0] * (1.0 - fx) + field[y0, x1] * fx
    bot = field[y1, x0] * (1.0 - fx) + field[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def fill_polygon(pts, height, width):
    """Rasterize a closed polygon: pixel centres inside (even-odd) or on an edge."""
    pts = np.asarray(pts, dtype=np.float64)
    out = np.zeros((height, width), dtype=np.uint8)
    n = len(pts)
    if n == 0:
        return out
    eps = ON_EDGE_EPS
    xa = pts[:, 0]
    ya = pts[:, 1]
    xb = np.roll(xa, -1)
    yb = np.roll(ya, -1)

    for y in range(height):
        cross = []
        for i in range(n):
            y0, y1 = ya[i], yb[i]
            if (y0 <= y < y1) or (y1 <= y < y0):
                t = (y - y0) / (y1 - y0)
                cross.append(xa[i] + t * (xb[i] - xa[i]))
        cross.sort()
        for k in range(0, len(cross) - 1, 2):
            lo = max(0, math.ceil(cross[k] - eps))
            hi = min(width - 1, math.floor(cross[k + 1] + eps))
            if hi >= lo:
                out[y, lo:hi + 1] = 1

    for i in range(n):
        x0, y0, x1, y1 = xa[i], ya[i], xb[i], yb[i]
        if abs(y1 - y0) < eps:
            yi = round(y0)
            if abs(y0 - yi) < eps and 0 <= yi < height:
                lo = max(0, math.ceil(min(x0, x1) - eps))
                hi = min(width - 1, math.floor(max(x0, x1) + eps))
                if hi >= lo:
                    out[yi, lo:hi + 1] = 1
            continue
        ylo = max(0, math.ceil(min(y0, y1) - eps))
        yhi = min(height - 1, math.floor(max(y0, y1) + eps))
        for yi in range(ylo, yhi + 1):
            xv = x0 + (yi - y0) / (y1 - y0) * (x1 - x0)
            xi = round(xv)
            if abs(xv - xi) < eps and 0 <= xi < width:
                out[yi, xi] = 1
    return out
