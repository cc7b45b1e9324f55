"""Numba kernels for the hot geometric scans.

All kernels mirror quickvis.kernels.numpy_impl exactly (same formulas, same
branch structure) so the two backends are bit-compatible.
"""

import numpy as np
from numba import njit

from .common import ORIENT_ERR

NAME = "numba"


@njit(cache=True, inline="always")
def _orient(ax, ay, bx, by, cx, cy):
    detl = (bx - ax) * (cy - ay)
    detr = (by - ay) * (cx - ax)
    det = detl - detr
    err = ORIENT_ERR * (abs(detl) + abs(detr))
    if det > err:
        return 1
    if det < -err:
        return -1
    return 0


@njit(cache=True)
def orient_filtered(ax, ay, bx, by, cx, cy):
    return _orient(ax, ay, bx, by, cx, cy)


@njit(cache=True, inline="always")
def _edge_contact(px, py, qx, qy, ax, ay, bx, by):
    """Contact of closed segment pq with closed edge ab; 0/1/2 as in common."""
    if max(ax, bx) < min(px, qx) or min(ax, bx) > max(px, qx):
        return 0
    if max(ay, by) < min(py, qy) or min(ay, by) > max(py, qy):
        return 0
    o1 = _orient(px, py, qx, qy, ax, ay)
    o2 = _orient(px, py, qx, qy, bx, by)
    if o1 * o2 > 0:
        return 0
    o3 = _orient(ax, ay, bx, by, px, py)
    o4 = _orient(ax, ay, bx, by, qx, qy)
    if o3 * o4 > 0:
        return 0
    if o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return 1
    # Some orientation is (or may be) zero: touching configuration.
    if o1 == 0 and o2 == 0:
        return 2  # collinear-ish overlap; resolve exactly
    code = 0
    if o1 == 0:
        # edge vertex a on the line of pq
        if (ax == px and ay == py) or (ax == qx and ay == qy):
            pass  # shared endpoint
        else:
            dx = qx - px
            dy = qy - py
            s = (ax - px) * dx + (ay - py) * dy
            den = dx * dx + dy * dy
            if 0 < s < den and o3 * o4 <= 0:
                return 2  # vertex touches open segment interior
            code = max(code, 0)
    if o2 == 0:
        if (bx == px and by == py) or (bx == qx and by == qy):
            pass
        else:
            dx = qx - px
            dy = qy - py
            s = (bx - px) * dx + (by - py) * dy
            den = dx * dx + dy * dy
            if 0 < s < den and o3 * o4 <= 0:
                return 2
            code = max(code, 0)
    # o3/o4 zero with o1*o2 <= 0: contact at p or q itself; fine for a closed
    # free-space test (an endpoint may sit on the boundary).
    return code


@njit(cache=True)
def seg_code_scan(px, py, qx, qy, edges):
    """Worst contact code of segment pq against all edges (no parity check)."""
    worst = 0
    for i in range(edges.shape[0]):
        c = _edge_contact(px, py, qx, qy, edges[i, 0], edges[i, 1], edges[i, 2], edges[i, 3])
        if c == 1:
            return 1
        if c == 2:
            worst = 2
    return worst


@njit(cache=True, inline="always")
def _parity_code(tx, ty, edges, ring_of, nrings, parity):
    """Even-odd ring parities at (tx,ty); returns 2 on boundary-ambiguity."""
    for r in range(nrings):
        parity[r] = 0
    for i in range(edges.shape[0]):
        x1 = edges[i, 0]
        y1 = edges[i, 1]
        x2 = edges[i, 2]
        y2 = edges[i, 3]
        if (y1 > ty) != (y2 > ty):
            xint = x1 + (ty - y1) * (x2 - x1) / (y2 - y1)
            err = 4e-15 * (abs(x1) + abs(x2) + abs(tx) + 1.0)
            if abs(xint - tx) <= err:
                return 2
            if xint > tx:
                parity[ring_of[i]] += 1
        elif y1 == ty and y2 == ty:
            # horizontal edge at the test height: on-edge check
            if min(x1, x2) <= tx <= max(x1, x2):
                return 2
        elif y1 == ty or y2 == ty:
            # ray passes through a vertex: resolve exactly
            vx = x1 if y1 == ty else x2
            if vx >= tx:
                return 2
    return 0


@njit(cache=True)
def point_free_code(tx, ty, edges, ring_of, nrings):
    """0 strictly inside free space, 1 strictly outside, 2 on/near boundary."""
    parity = np.zeros(nrings, dtype=np.int64)
    c = _parity_code(tx, ty, edges, ring_of, nrings, parity)
    if c == 2:
        return 2
    if parity[0] % 2 != 1:
        return 1
    for r in range(1, nrings):
        if parity[r] % 2 == 1:
            return 1
    return 0


@njit(cache=True)
def point_free_batch(pts, edges, ring_of, nrings):
    out = np.empty(pts.shape[0], dtype=np.int8)
    parity = np.zeros(nrings, dtype=np.int64)
    for k in range(pts.shape[0]):
        c = _parity_code(pts[k, 0], pts[k, 1], edges, ring_of, nrings, parity)
        if c == 2:
            out[k] = 2
        else:
            ok = parity[0] % 2 == 1
            if ok:
                for r in range(1, nrings):
                    if parity[r] % 2 == 1:
                        ok = False
                        break
            out[k] = 0 if ok else 1
    return out


@njit(cache=True)
def visible_code(px, py, qx, qy, edges, ring_of, nrings):
    """Visibility of q from p in the closed free space; 0/1/2."""
    c = seg_code_scan(px, py, qx, qy, edges)
    if c != 0:
        return c
    mx = 0.5 * (px + qx)
    my = 0.5 * (py + qy)
    pc = point_free_code(mx, my, edges, ring_of, nrings)
    if pc == 1:
        return 1
    if pc == 2:
        return 2
    return 0


@njit(cache=True)
def visible_batch(pts, tx, ty, edges, ring_of, nrings):
    out = np.empty(pts.shape[0], dtype=np.int8)
    for k in range(pts.shape[0]):
        out[k] = visible_code(pts[k, 0], pts[k, 1], tx, ty, edges, ring_of, nrings)
    return out


@njit(cache=True)
def dmin_scan(tx, ty, sx, sy, w, ids, edges, ring_of, nrings, skip1, skip2):
    """Min over sites of w_i + |site_i - t| subject to clear visibility.

    Sites must be sorted by ascending w. Returns (best, best_pos, graze_min):
    graze_min is the smallest f among grazing-coded candidates that were not
    clearly beaten (inf if none); best_pos is -1 when nothing clear is visible.
    """
    best = np.inf
    best_pos = -1
    graze_min = np.inf
    for i in range(sx.shape[0]):
        if ids[i] == skip1 or ids[i] == skip2:
            continue
        if w[i] >= best and w[i] >= graze_min:
            break
        dx = sx[i] - tx
        dy = sy[i] - ty
        f = w[i] + np.sqrt(dx * dx + dy * dy)
        if f >= best and f >= graze_min:
            continue
        c = visible_code(sx[i], sy[i], tx, ty, edges, ring_of, nrings)
        if c == 0:
            if f < best:
                best = f
                best_pos = i
        elif c == 2:
            if f < graze_min:
                graze_min = f
    return best, best_pos, graze_min


@njit(cache=True)
def dmin_batch(pts, sx, sy, w, ids, edges, ring_of, nrings, skip1, skip2):
    n = pts.shape[0]
    best = np.empty(n, dtype=np.float64)
    pos = np.empty(n, dtype=np.int64)
    graze = np.empty(n, dtype=np.float64)
    for k in range(n):
        b, p, g = dmin_scan(pts[k, 0], pts[k, 1], sx, sy, w, ids,
                            edges, ring_of, nrings, skip1, skip2)
        best[k] = b
        pos[k] = p
        graze[k] = g
    return best, pos, graze


@njit(cache=True)
def dmin_candidates(tx, ty, sx, sy, w, ids, skip1, skip2, fmax):
    """Positions of sites with w_i + |site_i - t| <= fmax (visibility unchecked)."""
    out = np.empty(sx.shape[0], dtype=np.int64)
    cnt = 0
    for i in range(sx.shape[0]):
        if ids[i] == skip1 or ids[i] == skip2:
            continue
        if w[i] > fmax:
            break
        dx = sx[i] - tx
        dy = sy[i] - ty
        f = w[i] + np.sqrt(dx * dx + dy * dy)
        if f <= fmax:
            out[cnt] = i
            cnt += 1
    return out[:cnt]


@njit(cache=True)
def ray_scan(ox, oy, dx, dy, edges, t_lo):
    """First hit of ray o + t*d (t > t_lo) against edges.

    Returns (t, edge_index, code); code 2 when the winner is ambiguous
    (endpoint hit, near-parallel overlap, or a tie within tolerance).
    """
    tbest = np.inf
    ibest = -1
    second = np.inf
    flagged = False
    scale = abs(ox) + abs(oy) + 1.0
    for i in range(edges.shape[0]):
        ax = edges[i, 0]
        ay = edges[i, 1]
        bx = edges[i, 2]
        by = edges[i, 3]
        ex = bx - ax
        ey = by - ay
        den = dx * ey - dy * ex
        wx = ax - ox
        wy = ay - oy
        if den == 0.0:
            # parallel; overlap only if collinear
            if _orient(ox, oy, ox + dx, oy + dy, ax, ay) == 0:
                ta = (wx * dx + wy * dy) / (dx * dx + dy * dy)
                tb = ((bx - ox) * dx + (by - oy) * dy) / (dx * dx + dy * dy)
                if max(ta, tb) > t_lo:
                    t = max(t_lo, min(ta, tb))
                    if t < tbest:
                        second = tbest
                        tbest = t
                        ibest = i
                        flagged = True
                    elif t < second:
                        second = t
            continue
        t = (wx * ey - wy * ex) / den
        u = (wx * dy - wy * dx) / den
        if t <= t_lo:
            continue
        if u < 0.0 or u > 1.0:
            # near-endpoint miss risk
            eu = 1e-12
            if -eu <= u <= 1.0 + eu and t < tbest + 1e-9 * scale:
                flagged = True
            continue
        if t < tbest:
            second = tbest
            tbest = t
            ibest = i
            if u < 1e-12 or u > 1.0 - 1e-12:
                flagged = True
        elif t < second:
            second = t
    code = 0
    if ibest >= 0:
        if flagged or second - tbest <= 1e-9 * (abs(tbest) + scale):
            code = 2
    elif flagged:
        code = 2
    return tbest, ibest, code


@njit(cache=True)
def seg_hit_params(px, py, qx, qy, edges):
    """All contact parameters of segment pq (param in [0,1]) with edges.

    Returns (t_params, edge_idx, codes) where codes flag non-transversal or
    uncertain contacts (2) vs clean proper crossings (1).
    """
    m = edges.shape[0]
    ts = np.empty(2 * m, dtype=np.float64)
    ei = np.empty(2 * m, dtype=np.int64)
    cs = np.empty(2 * m, dtype=np.int8)
    cnt = 0
    dx = qx - px
    dy = qy - py
    for i in range(m):
        ax = edges[i, 0]
        ay = edges[i, 1]
        bx = edges[i, 2]
        by = edges[i, 3]
        c = _edge_contact(px, py, qx, qy, ax, ay, bx, by)
        if c == 0:
            continue
        ex = bx - ax
        ey = by - ay
        den = dx * ey - dy * ex
        if den != 0.0:
            t = ((ax - px) * ey - (ay - py) * ex) / den
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            ts[cnt] = t
            ei[cnt] = i
            cs[cnt] = c
            cnt += 1
        else:
            # collinear overlap: record both endpoint projections
            den2 = dx * dx + dy * dy
            for (cx, cy) in ((ax, ay), (bx, by)):
                t = ((cx - px) * dx + (cy - py) * dy) / den2
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                ts[cnt] = t
                ei[cnt] = i
                cs[cnt] = 2
                cnt += 1
    return ts[:cnt], ei[:cnt], cs[:cnt]


@njit(cache=True)
def warmup():
    e = np.array([[0.0, 0.0, 1.0, 0.0], [1.0, 0.0, 1.0, 1.0],
                  [1.0, 1.0, 0.0, 1.0], [0.0, 1.0, 0.0, 0.0]])
    r = np.zeros(4, dtype=np.int64)
    s = 0.0
    s += seg_code_scan(0.2, 0.2, 0.8, 0.8, e)
    s += point_free_code(0.5, 0.5, e, r, 1)
    s += visible_code(0.2, 0.2, 0.8, 0.8, e, r, 1)
    sx = np.array([0.5])
    sy = np.array([0.5])
    w = np.array([0.0])
    ids = np.array([0], dtype=np.int64)
    b, p, g = dmin_scan(0.2, 0.2, sx, sy, w, ids, e, r, 1, -1, -1)
    t, i2, c = ray_scan(0.5, 0.5, 1.0, 0.0, e, 0.0)
    a1, a2, a3 = seg_hit_params(0.2, -0.5, 0.2, 1.5, e)
    pts = np.array([[0.3, 0.3]])
    point_free_batch(pts, e, r, 1)
    visible_batch(pts, 0.6, 0.6, e, r, 1)
    dmin_batch(pts, sx, sy, w, ids, e, r, 1, -1, -1)
    dmin_candidates(0.2, 0.2, sx, sy, w, ids, -1, -1, 10.0)
    return s + b + t + a1.shape[0]
