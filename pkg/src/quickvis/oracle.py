"""Exact brute-force references, independent of the fast structures.

- visibility polygon / windows: O(n^2) angular sweep with naive closest-edge
  scans per angular interval;
- shortest-path-to-segment: per-SPM-cell closed-form minimization of
  w(root) + |root - x| over the lower envelope along the segment;
- quickest visibility: exhaustive window enumeration.

The shortest path map itself is validated separately against a Dijkstra
oracle, which keeps this module's use of spm.dmin non-circular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geom, kernels
from .errors import OutsideDomain


@dataclass
class OracleReport:
    value: float
    argmin: tuple
    method: str
    table: list = field(default_factory=list)   # (label, value, point)

    def as_json(self):
        return {
            "value": self.value,
            "argmin": [self.argmin[0], self.argmin[1]] if self.argmin else None,
            "method": self.method,
            "table": [{"label": l, "value": v, "point": [p[0], p[1]]}
                      for l, v, p in self.table],
        }


@dataclass
class OracleWindow:
    u: tuple            # defining reflex vertex
    qu: tuple           # far endpoint q(u) on the boundary
    u_vid: int          # vertex id


def _ray_hit(dom, q, ang, t_hi=None):
    """Nearest boundary hit of the ray from q at angle ang (naive scan)."""
    d = (math.cos(ang), math.sin(ang))
    t, idx, code = kernels.ray_scan(q[0], q[1], d[0], d[1], dom.edges, 1e-12)
    if idx < 0:
        return None, -1
    return (q[0] + t * d[0], q[1] + t * d[1]), int(idx)


def oracle_visibility_polygon(dom, q):
    """(polygon_points, windows, K) of Vis(q), by rotational sweep."""
    qf = (float(q[0]), float(q[1]))
    if not dom.contains(q):
        raise OutsideDomain(f"query {qf} outside free space")
    angles = set()
    for v in range(dom.n):
        p = dom.vxy[v]
        if (p[0], p[1]) == qf:
            continue
        if dom.visible(q, tuple(dom.vertices[v])):
            angles.add(math.atan2(p[1] - qf[1], p[0] - qf[0]) % (2 * math.pi))
    if not angles:
        angles = {0.0}
    evs = sorted(angles)
    poly = []
    windows = []
    m = len(evs)
    eps_a = 1e-9
    scale = dom.scale
    for k in range(m):
        a1 = evs[k]
        a2 = evs[(k + 1) % m]
        if k == m - 1:
            a2 += 2 * math.pi
        # hits flanking the event angle a1
        lo, _ = _ray_hit(dom, qf, a1 - eps_a)
        hi, _ = _ray_hit(dom, qf, a1 + eps_a)
        if lo is None or hi is None:
            continue
        jump = geom.dist(lo, hi)
        if jump > 1e-6 * scale:
            # radial window edge through the vertex at angle a1
            near, far = (lo, hi) if geom.dist(qf, lo) < geom.dist(qf, hi) else (hi, lo)
            uvid = _vertex_near(dom, near)
            if uvid >= 0 and _is_window_vertex(dom, qf, uvid):
                u = tuple(map(float, dom.vxy[uvid]))
                far_exact = _window_far(dom, qf, u)
                windows.append(OracleWindow(u=u, qu=far_exact or far, u_vid=uvid))
            poly.append(lo)
            poly.append(hi)
        else:
            poly.append(hi)
        # interval interior lies on a single edge; record the exit point
        mid_hit, _ = _ray_hit(dom, qf, 0.5 * (a1 + a2))
        if mid_hit is not None:
            poly.append(mid_hit)
    # compact near-duplicates
    out = []
    for p in poly:
        if not out or geom.dist(out[-1], p) > 1e-9 * scale:
            out.append(p)
    if len(out) > 1 and geom.dist(out[0], out[-1]) <= 1e-9 * scale:
        out.pop()
    windows.sort(key=lambda w: -((math.atan2(w.u[1] - qf[1], w.u[0] - qf[0])) % (2 * math.pi)))
    return out, windows, len(out)


def _window_far(dom, q, u):
    """First boundary point hit by the ray from u away from q (exact direction)."""
    d = (u[0] - q[0], u[1] - q[1])
    t, idx, code = kernels.ray_scan(u[0], u[1], d[0], d[1], dom.edges,
                                    1e-12 * dom.scale)
    if idx < 0:
        return None
    far = (u[0] + t * d[0], u[1] + t * d[1])
    return dom.snap_inside(far) or far


def _vertex_near(dom, p, tol_fac=1e-6):
    d = np.hypot(dom.vxy[:, 0] - p[0], dom.vxy[:, 1] - p[1])
    i = int(np.argmin(d))
    return i if d[i] <= tol_fac * dom.scale else -1


def _is_window_vertex(dom, q, vid):
    v = tuple(dom.vertices[vid])
    a = tuple(dom.vertices[dom.vprev[vid]])
    b = tuple(dom.vertices[dom.vnext[vid]])
    o1 = geom.orient(q, v, a)
    o2 = geom.orient(q, v, b)
    return o1 * o2 > 0


def oracle_seg_dist(dom, spm, a, b, samples=33):
    """Exact min of d(s, x) over x in segment ab, via the per-cell envelope."""
    af = (float(a[0]), float(a[1]))
    bf = (float(b[0]), float(b[1]))
    if af == bf:
        v, site = spm.dmin(af)
        return OracleReport(value=v, argmin=af, method="point",
                            table=[("point", v, af)])
    ts = np.linspace(0.0, 1.0, samples)
    pts = np.array([(af[0] + t * (bf[0] - af[0]), af[1] + t * (bf[1] - af[1]))
                    for t in ts])
    best, pos, graze = kernels.dmin_batch(pts, spm.rsx, spm.rsy, spm.rw, spm.rids,
                                          dom.edges, dom.ring_of, dom.nrings, -1, -1)
    env = np.empty(samples)
    for i in range(samples):
        if graze[i] <= best[i] or pos[i] < 0:
            pp = dom.snap_inside(tuple(pts[i]))
            if pp is None:
                env[i] = best[i] if pos[i] >= 0 else math.inf
            else:
                env[i], _ = spm.dmin(pp)
        else:
            env[i] = best[i]
    seg_len = geom.dist(af, bf)
    delta = seg_len / (samples - 1)
    # 1-Lipschitz along the segment: any root beating the envelope somewhere
    # must come within 2*delta of it at a sample
    survivors = []
    for i in range(len(spm.rids)):
        f = spm.rw[i] + np.sqrt((pts[:, 0] - spm.rsx[i]) ** 2
                                + (pts[:, 1] - spm.rsy[i]) ** 2)
        if (f - env <= 2 * delta + 1e-9).any():
            survivors.append(i)
    cuts = {0.0, 1.0}
    D = (bf[0] - af[0], bf[1] - af[1])
    dd = D[0] * D[0] + D[1] * D[1]
    for ii in range(len(survivors)):
        i = survivors[ii]
        ri = (spm.rsx[i], spm.rsy[i])
        wi = spm.rw[i]
        for jj in range(ii + 1, len(survivors)):
            j = survivors[jj]
            rj = (spm.rsx[j], spm.rsy[j])
            wj = spm.rw[j]
            for t in _equal_f_params(af, D, ri, wi, rj, wj):
                if 0 < t < 1:
                    cuts.add(t)
        # visibility events of root i against every vertex:
        # segment point x with (x - ri) parallel to (vp - ri)
        for v in range(dom.n):
            vp = dom.vxy[v]
            if (vp[0], vp[1]) == (ri[0], ri[1]):
                continue
            den = D[0] * (vp[1] - ri[1]) - D[1] * (vp[0] - ri[0])
            if den == 0:
                continue
            num = (vp[0] - ri[0]) * (af[1] - ri[1]) - (vp[1] - ri[1]) * (af[0] - ri[0])
            t = num / den
            if 0 < t < 1:
                cuts.add(float(t))
    cut_list = sorted(cuts)
    best_val = math.inf
    best_pt = af
    table = []
    for t0, t1 in zip(cut_list, cut_list[1:]):
        if t1 - t0 < 1e-12:
            continue
        tm = 0.5 * (t0 + t1)
        pm = (af[0] + tm * D[0], af[1] + tm * D[1])
        pm = dom.snap_inside(pm)
        if pm is None:
            continue
        val, site = spm.dmin(pm)
        r = spm.spt.xy[site]
        w = float(spm.spt.w[site])
        tstar = tm if dd == 0 else max(t0, min(t1, ((r[0] - af[0]) * D[0] + (r[1] - af[1]) * D[1]) / dd))
        pstar = (af[0] + tstar * D[0], af[1] + tstar * D[1])
        v = w + math.hypot(pstar[0] - r[0], pstar[1] - r[1])
        table.append((f"cell{site}@[{t0:.4f},{t1:.4f}]", v, pstar))
        if v < best_val - 1e-15 or (abs(v - best_val) <= 1e-12 * (1 + best_val)
                                    and pstar < best_pt):
            best_val = v
            best_pt = pstar
    return OracleReport(value=best_val, argmin=best_pt, method="per-cell-envelope",
                        table=table)


def _equal_f_params(A, D, r1, w1, r2, w2):
    """t with w1+|A+tD-r1| == w2+|A+tD-r2| (filtered quadratic roots)."""
    c = w2 - w1
    ax, ay = A[0] - r1[0], A[1] - r1[1]
    bx, by = A[0] - r2[0], A[1] - r2[1]
    # |x(t)|^2 - |y(t)|^2 is linear in t: L0 + L1 t ; |y(t)|^2 = q0+q1 t+q2 t^2
    L0 = ax * ax + ay * ay - bx * bx - by * by - c * c
    L1 = 2 * (D[0] * (ax - bx) + D[1] * (ay - by))
    q0 = bx * bx + by * by
    q1 = 2 * (bx * D[0] + by * D[1])
    q2 = D[0] * D[0] + D[1] * D[1]
    # (L0 + L1 t)^2 = 4 c^2 (q0 + q1 t + q2 t^2)
    A2 = L1 * L1 - 4 * c * c * q2
    B2 = 2 * L0 * L1 - 4 * c * c * q1
    C2 = L0 * L0 - 4 * c * c * q0
    out = []
    roots = []
    if A2 == 0:
        if B2 != 0:
            roots = [-C2 / B2]
    else:
        disc = B2 * B2 - 4 * A2 * C2
        if disc >= 0:
            sq = math.sqrt(disc)
            roots = [(-B2 + sq) / (2 * A2), (-B2 - sq) / (2 * A2)]
    for t in roots:
        x = (A[0] + t * D[0], A[1] + t * D[1])
        f1 = w1 + math.hypot(x[0] - r1[0], x[1] - r1[1])
        f2 = w2 + math.hypot(x[0] - r2[0], x[1] - r2[1])
        if abs(f1 - f2) <= 1e-7 * (1 + abs(f1)):
            out.append(t)
    return out


def oracle_qvq(dom, spm, q):
    """Exact quickest-visibility answer by enumerating all windows of q."""
    qf = (float(q[0]), float(q[1]))
    if not dom.contains(q):
        raise OutsideDomain(f"query {qf} outside free space")
    if dom.visible(dom.source, q):
        return OracleReport(value=0.0, argmin=dom.sxy, method="s-visible",
                            table=[("s-visible", 0.0, dom.sxy)])
    poly, windows, K = oracle_visibility_polygon(dom, q)
    best = OracleReport(value=math.inf, argmin=None, method="window-enumeration")
    table = []
    for w in windows:
        rep = oracle_seg_dist(dom, spm, w.u, w.qu)
        table.append((f"window-v{w.u_vid}", rep.value, rep.argmin))
        if rep.value < best.value - 1e-15 or (
                abs(rep.value - best.value) <= 1e-12 * (1 + best.value)
                and best.argmin is not None and tuple(rep.argmin) < tuple(best.argmin)):
            best = OracleReport(value=rep.value, argmin=rep.argmin,
                                method="window-enumeration")
    best.table = table
    if best.argmin is None:
        raise OutsideDomain(f"no window found for invisible query {qf}")
    return best
