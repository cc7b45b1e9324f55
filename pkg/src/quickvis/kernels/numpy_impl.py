"""Pure-numpy fallback for the scan kernels (same semantics as numba_impl)."""

import numpy as np

from .common import ORIENT_ERR

NAME = "numpy"


def orient_filtered(ax, ay, bx, by, cx, cy):
    detl = (bx - ax) * (cy - ay)
    detr = (by - ay) * (cx - ax)
    det = detl - detr
    err = ORIENT_ERR * (abs(detl) + abs(detr))
    if det > err:
        return 1
    if det < -err:
        return -1
    return 0


def _orient_arr(ax, ay, bx, by, cx, cy):
    detl = (bx - ax) * (cy - ay)
    detr = (by - ay) * (cx - ax)
    det = detl - detr
    err = ORIENT_ERR * (np.abs(detl) + np.abs(detr))
    return np.where(det > err, 1, np.where(det < -err, -1, 0))


def _edge_contact_arr(px, py, qx, qy, edges):
    """Vector of contact codes of segment pq against every edge."""
    ax, ay, bx, by = edges[:, 0], edges[:, 1], edges[:, 2], edges[:, 3]
    out = np.zeros(edges.shape[0], dtype=np.int8)
    bbox = ~((np.maximum(ax, bx) < min(px, qx)) | (np.minimum(ax, bx) > max(px, qx))
             | (np.maximum(ay, by) < min(py, qy)) | (np.minimum(ay, by) > max(py, qy)))
    o1 = _orient_arr(px, py, qx, qy, ax, ay)
    o2 = _orient_arr(px, py, qx, qy, bx, by)
    o3 = _orient_arr(ax, ay, bx, by, px, py)
    o4 = _orient_arr(ax, ay, bx, by, qx, qy)
    sep = (o1 * o2 > 0) | (o3 * o4 > 0)
    alive = bbox & ~sep
    proper = alive & (o1 != 0) & (o2 != 0) & (o3 != 0) & (o4 != 0)
    out[proper] = 1
    touchy = alive & ~proper
    if np.any(touchy):
        dx = qx - px
        dy = qy - py
        den = dx * dx + dy * dy
        graze = touchy & (o1 == 0) & (o2 == 0)
        for oz, vx, vy in ((o1, ax, ay), (o2, bx, by)):
            m = touchy & (oz == 0) & ~graze
            if np.any(m):
                shared = ((vx == px) & (vy == py)) | ((vx == qx) & (vy == qy))
                s = (vx - px) * dx + (vy - py) * dy
                inside = (s > 0) & (s < den) & (o3 * o4 <= 0)
                graze |= m & ~shared & inside
        out[graze & (out == 0)] = 2
    return out


def seg_code_scan(px, py, qx, qy, edges):
    c = _edge_contact_arr(px, py, qx, qy, edges)
    if np.any(c == 1):
        return 1
    if np.any(c == 2):
        return 2
    return 0


def point_free_code(tx, ty, edges, ring_of, nrings):
    x1, y1, x2, y2 = edges[:, 0], edges[:, 1], edges[:, 2], edges[:, 3]
    cross = (y1 > ty) != (y2 > ty)
    horiz = (y1 == ty) & (y2 == ty)
    if np.any(horiz & (np.minimum(x1, x2) <= tx) & (tx <= np.maximum(x1, x2))):
        return 2
    touch = ~horiz & ~cross & ((y1 == ty) | (y2 == ty))
    if np.any(touch):
        vx = np.where(y1 == ty, x1, x2)
        if np.any(touch & (vx >= tx)):
            return 2
    parity = np.zeros(nrings, dtype=np.int64)
    if np.any(cross):
        xi = np.where(cross, x1 + (ty - y1) * (x2 - x1) / np.where(cross, y2 - y1, 1.0), 0.0)
        err = 4e-15 * (np.abs(x1) + np.abs(x2) + abs(tx) + 1.0)
        if np.any(cross & (np.abs(xi - tx) <= err)):
            return 2
        hit = cross & (xi > tx)
        np.add.at(parity, ring_of[hit], 1)
    if parity[0] % 2 != 1:
        return 1
    if np.any(parity[1:] % 2 == 1):
        return 1
    return 0


def point_free_batch(pts, edges, ring_of, nrings):
    return np.array([point_free_code(p[0], p[1], edges, ring_of, nrings) for p in pts],
                    dtype=np.int8)


def visible_code(px, py, qx, qy, edges, ring_of, nrings):
    c = seg_code_scan(px, py, qx, qy, edges)
    if c != 0:
        return c
    pc = point_free_code(0.5 * (px + qx), 0.5 * (py + qy), edges, ring_of, nrings)
    if pc == 1:
        return 1
    if pc == 2:
        return 2
    return 0


def visible_batch(pts, tx, ty, edges, ring_of, nrings):
    return np.array([visible_code(p[0], p[1], tx, ty, edges, ring_of, nrings) for p in pts],
                    dtype=np.int8)


def dmin_scan(tx, ty, sx, sy, w, ids, edges, ring_of, nrings, skip1, skip2):
    best = np.inf
    best_pos = -1
    graze_min = np.inf
    dx = sx - tx
    dy = sy - ty
    f = w + np.sqrt(dx * dx + dy * dy)
    for i in range(sx.shape[0]):
        if ids[i] == skip1 or ids[i] == skip2:
            continue
        if w[i] >= best and w[i] >= graze_min:
            break
        if f[i] >= best and f[i] >= graze_min:
            continue
        c = visible_code(sx[i], sy[i], tx, ty, edges, ring_of, nrings)
        if c == 0:
            if f[i] < best:
                best = f[i]
                best_pos = i
        elif c == 2:
            if f[i] < graze_min:
                graze_min = f[i]
    return best, best_pos, graze_min


def dmin_batch(pts, sx, sy, w, ids, edges, ring_of, nrings, skip1, skip2):
    n = pts.shape[0]
    best = np.empty(n)
    pos = np.empty(n, dtype=np.int64)
    graze = np.empty(n)
    for k in range(n):
        best[k], pos[k], graze[k] = dmin_scan(pts[k, 0], pts[k, 1], sx, sy, w, ids,
                                              edges, ring_of, nrings, skip1, skip2)
    return best, pos, graze


def dmin_candidates(tx, ty, sx, sy, w, ids, skip1, skip2, fmax):
    dx = sx - tx
    dy = sy - ty
    f = w + np.sqrt(dx * dx + dy * dy)
    keep = (f <= fmax) & (ids != skip1) & (ids != skip2)
    return np.nonzero(keep)[0].astype(np.int64)


def ray_scan(ox, oy, dx, dy, edges, t_lo):
    tbest = np.inf
    ibest = -1
    second = np.inf
    flagged = False
    scale = abs(ox) + abs(oy) + 1.0
    for i in range(edges.shape[0]):
        ax, ay, bx, by = edges[i]
        ex = bx - ax
        ey = by - ay
        den = dx * ey - dy * ex
        wx = ax - ox
        wy = ay - oy
        if den == 0.0:
            if orient_filtered(ox, oy, ox + dx, oy + dy, ax, ay) == 0:
                dd = dx * dx + dy * dy
                ta = (wx * dx + wy * dy) / dd
                tb = ((bx - ox) * dx + (by - oy) * dy) / dd
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


def seg_hit_params(px, py, qx, qy, edges):
    codes = _edge_contact_arr(px, py, qx, qy, edges)
    ts = []
    ei = []
    cs = []
    dx = qx - px
    dy = qy - py
    for i in np.nonzero(codes)[0]:
        ax, ay, bx, by = edges[i]
        ex = bx - ax
        ey = by - ay
        den = dx * ey - dy * ex
        if den != 0.0:
            t = ((ax - px) * ey - (ay - py) * ex) / den
            ts.append(min(1.0, max(0.0, t)))
            ei.append(i)
            cs.append(codes[i])
        else:
            den2 = dx * dx + dy * dy
            for cxy in ((ax, ay), (bx, by)):
                t = ((cxy[0] - px) * dx + (cxy[1] - py) * dy) / den2
                ts.append(min(1.0, max(0.0, t)))
                ei.append(i)
                cs.append(2)
    return (np.array(ts, dtype=np.float64), np.array(ei, dtype=np.int64),
            np.array(cs, dtype=np.int8))


def warmup():
    return 0.0
