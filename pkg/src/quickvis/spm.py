"""Shortest path tree and shortest path map (naive exact construction).

The map is evaluated through the weighted-root formula (cell of t = root r
minimizing d(s,r) + |rt| among roots visible from t), and its skeleton
(hyperbolic bisector arcs, extension rays, triple points, bisector-obstacle
crossings) is traced explicitly per root pair by clipping each candidate
bisector to the free space and scanning where it attains the distance
envelope. Everything downstream is validated against independent oracles.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import geom, kernels
from .errors import DegenerateInput, OutsideDomain, UnreachableVertex
from .geom import BisectorArc


class LcaIndex:
    """Constant-time LCA over a parent-array forest (Euler tour + sparse table)."""

    def __init__(self, parent):
        n = len(parent)
        self.parent = list(parent)
        kids = [[] for _ in range(n)]
        roots = []
        for v, p in enumerate(parent):
            if p < 0:
                roots.append(v)
            else:
                kids[p].append(v)
        self.depth = [0] * n
        euler = []
        elev = []
        self.first = [-1] * n
        for r in roots:
            stack = [(r, 0, iter(kids[r]))]
            self.first[r] = len(euler)
            euler.append(r)
            elev.append(0)
            while stack:
                v, d, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    stack.pop()
                    if stack:
                        euler.append(stack[-1][0])
                        elev.append(stack[-1][1])
                    continue
                self.depth[nxt] = d + 1
                self.first[nxt] = len(euler)
                euler.append(nxt)
                elev.append(d + 1)
                stack.append((nxt, d + 1, iter(kids[nxt])))
        m = len(euler)
        K = max(1, m.bit_length())
        sp = [list(range(m))]
        lev = elev
        self._euler = euler
        for k in range(1, K):
            prev = sp[-1]
            half = 1 << (k - 1)
            cur = []
            for i in range(m - (1 << k) + 1):
                a, b = prev[i], prev[i + half]
                cur.append(a if lev[a] <= lev[b] else b)
            sp.append(cur)
        self._sp = sp
        self._lev = lev

    def query(self, u, v):
        a, b = self.first[u], self.first[v]
        if a > b:
            a, b = b, a
        k = (b - a + 1).bit_length() - 1
        i1 = self._sp[k][a]
        i2 = self._sp[k][b - (1 << k) + 1]
        best = i1 if self._lev[i1] <= self._lev[i2] else i2
        return self._euler[best]

    def is_ancestor(self, u, v):
        """u is an ancestor of v (inclusive)."""
        return self.query(u, v) == u


class ShortestPathTree:
    """Geodesic tree over sites (site 0 = source, site v+1 = obstacle vertex v)."""

    def __init__(self, dom):
        self.dom = dom
        n = dom.n
        self.nsites = n + 1
        pts = [dom.sxy] + [tuple(p) for p in dom.vxy]
        self.xy = np.array(pts, dtype=np.float64)
        self.exact = [dom.source] + list(dom.vertices)
        # visibility graph over sites
        vis = np.zeros((self.nsites, self.nsites), dtype=bool)
        exact_pts = self.exact
        for i in range(self.nsites):
            for j in range(i + 1, self.nsites):
                if dom.visible(exact_pts[i], exact_pts[j]):
                    vis[i, j] = vis[j, i] = True
        self.vis = vis
        w = np.full(self.nsites, np.inf)
        w[0] = 0.0
        seen = np.zeros(self.nsites, dtype=bool)
        heap = [(0.0, 0)]
        d_all = np.sqrt(((self.xy[:, None, :] - self.xy[None, :, :]) ** 2).sum(-1))
        while heap:
            dv, v = heapq.heappop(heap)
            if seen[v]:
                continue
            seen[v] = True
            for u in np.nonzero(vis[v])[0]:
                nd = dv + d_all[v, u]
                if nd < w[u]:
                    w[u] = nd
                    heapq.heappush(heap, (nd, int(u)))
        if not seen.all():
            missing = int(np.nonzero(~seen)[0][0])
            raise UnreachableVertex(f"vertex {missing - 1} unreachable from source")
        self.w = w
        self.d_all = d_all
        # deterministic parents: lowest site id among ties
        tol = 1e-9 * (1 + float(w.max()))
        parent = np.full(self.nsites, -1, dtype=np.int64)
        self.parent_ties = []
        for v in range(1, self.nsites):
            cands = [u for u in np.nonzero(vis[:, v])[0] if w[u] + d_all[u, v] <= w[v] + tol]
            if not cands:
                raise UnreachableVertex(f"vertex {v - 1} has no visible predecessor")
            if len(cands) > 1:
                self.parent_ties.append(v)
            parent[v] = min(cands)
        self.parent = parent
        self.children = [[] for _ in range(self.nsites)]
        for v in range(1, self.nsites):
            self.children[parent[v]].append(v)
        # angular child order (ccw) for planar-tree traversals
        for p in range(self.nsites):
            px, py = self.xy[p]
            self.children[p].sort(
                key=lambda c: math.atan2(self.xy[c][1] - py, self.xy[c][0] - px))
        self.depth = np.zeros(self.nsites, dtype=np.int64)
        order = [0]
        for v in order:
            for c in self.children[v]:
                self.depth[c] = self.depth[v] + 1
                order.append(c)
        self.lca = LcaIndex(self.parent)

    def path_sites(self, site):
        out = []
        v = site
        while v >= 0:
            out.append(v)
            v = int(self.parent[v])
        return out[::-1]


def build_spt(dom):
    return ShortestPathTree(dom)


# ---------------------------------------------------------------------------
# Skeleton tracing


@dataclass
class ArcPiece:
    arc: BisectorArc
    site_a: int
    site_b: int
    genuine: bool
    end0: tuple = None  # ('edge', edge_id, at_vertex|None) | ('triple', idx) | ('joint', idx) | ('open',)
    end1: tuple = None

    def endpoints(self):
        return self.arc.clip_points()


@dataclass
class Crossing:
    point: tuple
    edge_id: int
    at_vertex: int          # vertex id or -1
    sites: tuple            # (site_a, site_b) of the two incident cells
    piece: int              # index into pieces
    end: int                # which end of the piece (0/1)


@dataclass
class Junction:
    point: tuple
    kind: str               # 'triple' | 'joint'
    sites: tuple            # incident cell sites (3 for triple)
    ends: list = field(default_factory=list)  # [(piece_idx, end)]


class ShortestPathMap:
    def __init__(self, dom, spt, eps_bis=None, audit=False):
        self.dom = dom
        self.spt = spt
        self.eps = eps_bis if eps_bis is not None else geom.EPS_BIS
        self.audit = audit
        self.reports = []
        n = dom.n
        root_sites = [0] + [v + 1 for v in range(n) if dom.reflex[v]]
        self.root_sites = root_sites
        order = sorted(root_sites, key=lambda s: (spt.w[s], s))
        self.rids = np.array(order, dtype=np.int64)
        self.rsx = spt.xy[self.rids, 0].copy()
        self.rsy = spt.xy[self.rids, 1].copy()
        self.rw = spt.w[self.rids].copy()
        self.pieces: list[ArcPiece] = []
        self.crossings: list[Crossing] = []
        self.junctions: list[Junction] = []
        self.supercurves = []
        self._trace()
        self._assemble_supercurves()

    # -- point queries -------------------------------------------------------

    def _tie_tol(self, v):
        return 1e-9 * (1.0 + abs(v))

    def dmin(self, t, skip=(-1, -1)):
        """(value, site) of the best visible root, deterministic tie-break."""
        dom = self.dom
        tx, ty = float(t[0]), float(t[1])
        best, pos, graze = kernels.dmin_scan(
            tx, ty, self.rsx, self.rsy, self.rw, self.rids,
            dom.edges, dom.ring_of, dom.nrings, skip[0], skip[1])
        tol = self._tie_tol(best if pos >= 0 else 0.0)
        if pos >= 0 and graze > best + tol:
            # check for ties among clear winners
            cand = kernels.dmin_candidates(tx, ty, self.rsx, self.rsy, self.rw,
                                           self.rids, skip[0], skip[1], best + tol)
            if len(cand) == 1:
                return best, int(self.rids[pos])
        fmax = (best if pos >= 0 else (graze if math.isfinite(graze) else dom.scale))
        fmax += self._tie_tol(fmax)
        fcap = float(self.rw[-1]) + 8.0 * dom.scale
        entries = []
        while True:
            cand = kernels.dmin_candidates(tx, ty, self.rsx, self.rsy, self.rw,
                                           self.rids, skip[0], skip[1], fmax)
            entries = []
            for i in cand:
                site = int(self.rids[i])
                f = float(self.rw[i] + math.hypot(self.rsx[i] - tx, self.rsy[i] - ty))
                code = kernels.visible_code(self.rsx[i], self.rsy[i], tx, ty,
                                            dom.edges, dom.ring_of, dom.nrings)
                if code == 2:
                    ok = dom.visible(self.spt.exact[site], t)
                else:
                    ok = code == 0
                if ok:
                    entries.append((f, site))
            if entries or fmax > fcap:
                break
            fmax = fmax * 2.0 + dom.scale
        if not entries:
            raise OutsideDomain(f"no visible root from {t}")
        fbest = min(f for f, _ in entries)
        tol = self._tie_tol(fbest)
        site = min(s for f, s in entries if f <= fbest + tol)
        fsel = min(f for f, s in entries if s == site)
        return fsel, site

    def locate(self, t):
        """(cell_id, root_site) of the SPM cell containing t."""
        if not self.dom.contains(t):
            raise OutsideDomain(f"point {tuple(map(float, t))} outside free space")
        val, site = self.dmin(t)
        return site, site

    def dist(self, t):
        if not self.dom.contains(t):
            raise OutsideDomain(f"point {tuple(map(float, t))} outside free space")
        return self.dmin(t)[0]

    def dist_and_root(self, t):
        if not self.dom.contains(t):
            raise OutsideDomain(f"point {tuple(map(float, t))} outside free space")
        return self.dmin(t)

    def extract_path(self, t):
        """Polyline s .. t (list of float points)."""
        val, site = self.dist_and_root(t)
        pts = [tuple(self.spt.xy[s]) for s in self.spt.path_sites(site)]
        tf = (float(t[0]), float(t[1]))
        if pts[-1] != tf:
            pts.append(tf)
        return pts

    def path_via(self, site, t=None):
        pts = [tuple(self.spt.xy[s]) for s in self.spt.path_sites(site)]
        if t is not None:
            tf = (float(t[0]), float(t[1]))
            if pts[-1] != tf:
                pts.append(tf)
        return pts

    # -- tracing ---------------------------------------------------------------

    def _trace(self):
        dom = self.dom
        spt = self.spt
        scale = dom.scale
        roots = self.root_sites
        pairs = []
        for ii in range(len(roots)):
            for jj in range(ii + 1, len(roots)):
                a, b = roots[ii], roots[jj]
                if spt.parent[b] == a or spt.parent[a] == b:
                    pairs.append((a, b, False))
                else:
                    L = float(spt.d_all[a, b])
                    if abs(spt.w[b] - spt.w[a]) < L * (1 - 1e-12):
                        pairs.append((a, b, True))
        ends_by_cluster = {}
        probe_reject = len(roots) > 40
        for a, b, genuine in pairs:
            arc = self._pair_arc(a, b, genuine)
            if arc is None:
                continue
            urange = self._bbox_clip(arc)
            if urange is None:
                continue
            if probe_reject and not self._probe_pair(arc, a, b, urange):
                continue
            self._trace_arc(arc, a, b, genuine, urange)

    def _pair_arc(self, a, b, genuine):
        spt = self.spt
        pa = tuple(spt.xy[a])
        pb = tuple(spt.xy[b])
        if genuine:
            return BisectorArc(pa, float(spt.w[a]), pb, float(spt.w[b]))
        # extension ray from the child away from the parent
        if spt.parent[b] == a:
            par, chi = a, b
        else:
            par, chi = b, a
        ppar = tuple(spt.xy[par])
        pchi = tuple(spt.xy[chi])
        L = float(spt.d_all[par, chi])
        arc = BisectorArc(ppar, float(spt.w[par]), pchi, float(spt.w[par]) + L, kind=geom.RAY)
        arc.u0 = 0.0
        arc.u1 = 4.0 * self.dom.scale
        return arc

    def _bbox_clip(self, arc):
        x0, y0, x1, y1 = self.dom.bbox
        m = 1e-9 * self.dom.scale
        x0 -= m
        y0 -= m
        x1 += m
        y1 += m
        if arc.kind == geom.RAY:
            lo, hi = 0.0, arc.u1
        else:
            us = []
            for p, q in (((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)),
                         ((x1, y1), (x0, y1)), ((x0, y1), (x0, y0))):
                for u in arc.line_params(p, q):
                    pt = arc.point_at(u)
                    if x0 - m <= pt[0] <= x1 + m and y0 - m <= pt[1] <= y1 + m:
                        us.append(u)
            if len(us) < 2:
                p0 = arc.point_at(0.0)
                if not (x0 <= p0[0] <= x1 and y0 <= p0[1] <= y1):
                    return None
                us = us + [-3.0, 3.0]
            lo, hi = min(us), max(us)
        if hi - lo < 1e-15:
            return None
        arc.u0, arc.u1 = lo, hi
        return lo, hi

    def _psi_batch(self, arc, a, b, us):
        """Envelope slack f_ab - d(s,.) (excluding a,b) at arc params us."""
        dom = self.dom
        pts = np.array([arc.point_at(u) for u in us], dtype=np.float64)
        best, pos, graze = kernels.dmin_batch(pts, self.rsx, self.rsy, self.rw,
                                              self.rids, dom.edges, dom.ring_of,
                                              dom.nrings, a, b)
        fa = self.spt.w[a] + np.sqrt((pts[:, 0] - self.spt.xy[a][0]) ** 2
                                     + (pts[:, 1] - self.spt.xy[a][1]) ** 2)
        out = np.empty(len(us))
        for i in range(len(us)):
            bi = best[i]
            if graze[i] <= bi + self._tie_tol(bi if math.isfinite(bi) else 0.0):
                hint = bi if math.isfinite(bi) else graze[i] + 1.0
                v, _ = self._dmin_excl_slow(tuple(pts[i]), a, b, hint)
                if math.isfinite(v):
                    bi = v
            out[i] = fa[i] - bi
        return out, pts

    def _dmin_excl_slow(self, t, a, b, hint):
        dom = self.dom
        fmax = hint + self._tie_tol(hint)
        for _ in range(4):
            cand = kernels.dmin_candidates(float(t[0]), float(t[1]), self.rsx, self.rsy,
                                           self.rw, self.rids, a, b, fmax)
            best = math.inf
            site = -1
            for i in cand:
                s = int(self.rids[i])
                f = float(self.rw[i] + math.hypot(self.rsx[i] - t[0], self.rsy[i] - t[1]))
                if f >= best:
                    continue
                if dom.visible((self.rsx[i], self.rsy[i]), t):
                    best = f
                    site = s
            if site >= 0:
                return best, site
            if len(cand) == len(self.rids) - sum(1 for x in (a, b) if x >= 0):
                break
            fmax = fmax * 2 + dom.scale
        return math.inf, -1

    def _active_at(self, arc, a, b, u, eps_fac=1e-8):
        dom = self.dom
        pt = arc.point_at(u)
        code = kernels.point_free_code(pt[0], pt[1], dom.edges, dom.ring_of, dom.nrings)
        if code == 1:
            return False
        if code == 2 and not dom.contains(pt):
            return False
        for site in self._foci_to_check(arc, a, b):
            sp = tuple(self.spt.xy[site])
            c = kernels.visible_code(sp[0], sp[1], pt[0], pt[1], dom.edges,
                                     dom.ring_of, dom.nrings)
            if c == 1:
                return False
            if c == 2 and not dom.visible(sp, pt):
                return False
        psi, _ = self._psi_batch(arc, a, b, [u])
        fa = float(self.spt.w[a]) + geom.dist(pt, self.spt.xy[a])
        return psi[0] <= eps_fac * (1.0 + fa)

    def _probe_pair(self, arc, a, b, urange, n=33):
        lo, hi = urange
        us = np.linspace(lo, hi, n)
        pts = np.array([arc.point_at(u) for u in us])
        codes = kernels.point_free_batch(pts, self.dom.edges, self.dom.ring_of,
                                         self.dom.nrings)
        keep = [u for u, c in zip(us, codes) if c != 1]
        if not keep:
            return False
        psi, _ = self._psi_batch(arc, a, b, keep)
        fa = self.spt.w[a]
        return bool((psi <= 1e-6 * self.dom.scale).any())

    def _trace_arc(self, arc, a, b, genuine, urange):
        dom = self.dom
        spt = self.spt
        lo, hi = urange
        events = [(lo, ("open",)), (hi, ("open",))]
        # obstacle-edge crossings
        for e in range(len(dom.edges)):
            p = tuple(dom.edges[e, 0:2])
            q = tuple(dom.edges[e, 2:4])
            for u, t in arc.seg_intersections(p, q):
                if lo - 1e-12 <= u <= hi + 1e-12:
                    events.append((u, ("edge", e)))
        # visibility change lines through vertices
        for site in (a, b):
            sp = tuple(spt.xy[site])
            for v in range(dom.n):
                vp = tuple(dom.vxy[v])
                if v + 1 == site:
                    continue
                if vp == sp:
                    continue
                for u in arc.line_params(sp, vp):
                    if not (lo - 1e-12 <= u <= hi + 1e-12):
                        continue
                    pt = arc.point_at(u)
                    # vertex strictly between the focus and the arc point
                    d1 = (pt[0] - vp[0]) * (vp[0] - sp[0]) + (pt[1] - vp[1]) * (vp[1] - sp[1])
                    if d1 > 0:
                        events.append((u, ("vis", site, v)))
        events.sort(key=lambda t: t[0])
        # merged event params
        merged = []
        for u, tag in events:
            if merged and u - merged[-1][0] < 1e-12 * (1 + abs(u)):
                merged[-1][1].append(tag)
            else:
                merged.append((u, [tag]))
        # candidate intervals: free space + both roots visible at midpoint
        runs = []
        for k in range(len(merged) - 1):
            ua, ub = merged[k][0], merged[k + 1][0]
            if ub - ua < 1e-13 * (1 + abs(ua)):
                continue
            um = 0.5 * (ua + ub)
            if not self._candidate_at(arc, a, b, um):
                continue
            runs.append((ua, ub, merged[k][1], merged[k + 1][1]))
        for ua, ub, tag0, tag1 in runs:
            self._scan_run(arc, a, b, genuine, ua, ub, tag0, tag1)

    def _foci_to_check(self, arc, a, b):
        # on an extension ray the parent is visible exactly through the child
        # (grazing); only the child's visibility is meaningful numerically
        if arc.kind == geom.RAY:
            return (b,) if self.spt.w[b] > self.spt.w[a] else (a,)
        return (a, b)

    def _candidate_at(self, arc, a, b, u):
        dom = self.dom
        pt = arc.point_at(u)
        code = kernels.point_free_code(pt[0], pt[1], dom.edges, dom.ring_of, dom.nrings)
        if code == 1:
            return False
        if code == 2 and not dom.contains(pt):
            return False
        for site in self._foci_to_check(arc, a, b):
            sp = tuple(self.spt.xy[site])
            c = kernels.visible_code(sp[0], sp[1], pt[0], pt[1], dom.edges,
                                     dom.ring_of, dom.nrings)
            if c == 1:
                return False
            if c == 2 and not dom.visible(sp, pt):
                return False
        return True

    def _scan_run(self, arc, a, b, genuine, ua, ub, tag0, tag1):
        inset = 1e-9 * (ub - ua)
        n = 33
        # denser sampling for long runs
        chord = geom.dist(arc.point_at(ua), arc.point_at(ub))
        if chord > self.dom.scale / 8:
            n = 65
        us = np.linspace(ua + inset, ub - inset, n)
        psi, pts = self._psi_batch(arc, a, b, us)
        fa = self.spt.w[a] + np.sqrt((pts[:, 0] - self.spt.xy[a][0]) ** 2
                                     + (pts[:, 1] - self.spt.xy[a][1]) ** 2)
        act = psi <= 1e-8 * (1.0 + fa)
        if not act.any():
            return
        # maximal active sample runs -> refined sub-arcs
        i = 0
        while i < n:
            if not act[i]:
                i += 1
                continue
            j = i
            while j + 1 < n and act[j + 1]:
                j += 1
            u_start = us[i]
            u_end = us[j]
            if i == 0:
                start_info = ("boundary", tag0)
            else:
                u_start = self._bisect_boundary(arc, a, b, us[i], us[i - 1])
                start_info = ("switch",)
            if j == n - 1:
                end_info = ("boundary", tag1)
            else:
                u_end = self._bisect_boundary(arc, a, b, us[j], us[j + 1])
                end_info = ("switch",)
            if u_end - u_start > 1e-13 * (1 + abs(u_start)):
                gap = us[1] - us[0] if n > 1 else (ub - ua)
                self._emit_piece(arc, a, b, genuine, u_start, u_end,
                                 start_info, end_info, gap)
            i = j + 1

    def _bisect_boundary(self, arc, a, b, u_in, u_out):
        for _ in range(60):
            um = 0.5 * (u_in + u_out)
            if um == u_in or um == u_out:
                break
            if self._active_at(arc, a, b, um):
                u_in = um
            else:
                u_out = um
        return u_in

    def _emit_piece(self, arc, a, b, genuine, u0, u1, info0, info1, gap):
        chord = geom.dist(arc.point_at(u0), arc.point_at(u1))
        if chord < 1e-6 * self.dom.scale:
            # tolerance-level sliver (typically an exactly-tied vertex); drop
            self.reports.append(
                f"dropped sliver piece near {arc.point_at(u0)} sites ({a},{b})")
            return
        sub = BisectorArc(arc.focus_a, arc.weight_a, arc.focus_b, arc.weight_b,
                          kind=arc.kind, u0=u0, u1=u1)
        piece = ArcPiece(arc=sub, site_a=a, site_b=b, genuine=genuine)
        idx = len(self.pieces)
        self.pieces.append(piece)
        piece.end0 = self._classify_end(piece, idx, 0, info0, u0, u1, gap)
        piece.end1 = self._classify_end(piece, idx, 1, info1, u0, u1, gap)

    def _classify_end(self, piece, idx, end, info, u0, u1, gap):
        dom = self.dom
        arc = piece.arc
        u = u0 if end == 0 else u1
        pt = arc.point_at(u)
        if info[0] == "boundary":
            tags = info[1]
            edge_tags = [t for t in tags if t[0] == "edge"]
            if edge_tags:
                e = edge_tags[0][1]
                # project onto the host edge so boundary subdivisions stay
                # exactly collinear with the obstacle edge
                ex1, ey1, ex2, ey2 = dom.edges[e]
                ddx, ddy = ex2 - ex1, ey2 - ey1
                dd = ddx * ddx + ddy * ddy
                if dd > 0:
                    tt = max(0.0, min(1.0, ((pt[0] - ex1) * ddx + (pt[1] - ey1) * ddy) / dd))
                    pt = (ex1 + tt * ddx, ey1 + tt * ddy)
                at_v = -1
                for vid in (dom.edge_verts[e][0], dom.edge_verts[e][1]):
                    if geom.dist(pt, dom.vxy[vid]) <= 1e-9 * dom.scale:
                        at_v = vid
                        pt = tuple(dom.vxy[vid])
                        break
                if at_v < 0:
                    for vid in (dom.edge_verts[e][0], dom.edge_verts[e][1]):
                        if geom.dist(pt, dom.vxy[vid]) <= 1e-5 * dom.scale:
                            self.reports.append(
                                f"near-degenerate: crossing within 1e-5 scale of vertex {vid}")
                if piece.genuine:
                    if at_v >= 0 and (at_v + 1) in (piece.site_a, piece.site_b):
                        raise DegenerateInput(
                            f"obstacle vertex {at_v} has two shortest paths "
                            f"(bisector of its own cell ends on it)")
                    self.crossings.append(Crossing(point=pt, edge_id=e, at_vertex=at_v,
                                                   sites=(piece.site_a, piece.site_b),
                                                   piece=idx, end=end))
                    if at_v >= 0:
                        self.reports.append(
                            f"bisector endpoint at obstacle vertex {at_v} {pt}")
                    return ("edge", e, at_v)
                return ("edge", e, at_v)
            if any(t[0] == "vis" for t in tags):
                # active run ends at a visibility event: treat as a switch
                return self._switch_end(piece, idx, end, u, pt, u0, u1, gap)
            if arc.kind == geom.RAY and abs(u) <= 1e-9 * self.dom.scale:
                return ("origin",)
            self.reports.append(f"arc piece ends at open boundary {pt}")
            return ("open",)
        return self._switch_end(piece, idx, end, u, pt, u0, u1, gap)

    def _switch_end(self, piece, idx, end, u, pt, u0, u1, gap):
        # probe slightly beyond the boundary (inactive side) for the taking-over root
        arc = piece.arc
        a, b = piece.site_a, piece.site_b
        span = max(u1 - u0, 1e-9)
        step = 1e-6 * span
        u_probe = u + step if end == 1 else u - step
        p_probe = arc.point_at(u_probe)
        val, site = self._dmin_excl_slow(p_probe, a, b,
                                         self.spt.w[a] + geom.dist(p_probe, self.spt.xy[a]) + 1e-6)
        if site < 0:
            val, site = self._dmin_excl_slow(pt, a, b,
                                             self.spt.w[a] + geom.dist(pt, self.spt.xy[a]) + 1e-6)
        if site >= 0:
            u = self._refine_switch(arc, a, site, u, end, 2.0 * gap, u0, u1)
            pt = arc.point_at(u)
            if end == 1:
                piece.arc.u1 = u
            else:
                piece.arc.u0 = u
        if not piece.genuine:
            # extension rays are render-only; they carry no V/D structure
            return ("stop", (float(pt[0]), float(pt[1])))
        jidx = self._cluster(pt, (a, b, site))
        self.junctions[jidx].ends.append((idx, end))
        return (self.junctions[jidx].kind, jidx)

    def _refine_switch(self, arc, a, x, u, end, window, u_lo, u_hi):
        """Solve f_x(t(u)) == f_arc(t(u)) near the coarse boundary u (secant,
        verified; falls back to the coarse value on failure)."""
        spt = self.spt
        xp = spt.xy[x]
        wa = float(spt.w[a])
        wx = float(spt.w[x])
        ap = spt.xy[a]

        def g(uu):
            p = arc.point_at(uu)
            return (wx + math.hypot(p[0] - xp[0], p[1] - xp[1])
                    - wa - math.hypot(p[0] - ap[0], p[1] - ap[1]))

        h = max(1e-9, 1e-6 * max(abs(u), 1.0))
        speed = geom.dist(arc.point_at(u + h), arc.point_at(u - h)) / (2 * h)
        if speed <= 0 or not math.isfinite(speed):
            return u
        u_clamp = 0.05 * self.dom.scale / speed
        # the refined end must stay on the active side of the piece
        if end == 1:
            lo_ok, hi_ok = u_lo + 1e-12, u + u_clamp
        else:
            lo_ok, hi_ok = u - u_clamp, u_hi - 1e-12
        if arc.kind == geom.RAY:
            lo_ok = max(lo_ok, 0.0)
        u0s, u1s = u - window / 16 - 1e-12, u
        g0, g1 = g(u0s), g(u1s)
        for _ in range(80):
            if g1 == g0:
                break
            u2 = u1s - g1 * (u1s - u0s) / (g1 - g0)
            if not (lo_ok - window <= u2 <= hi_ok + window):
                break
            u0s, g0, u1s = u1s, g1, u2
            g1 = g(u1s)
            if abs(u1s - u0s) <= 1e-15 * (1.0 + abs(u1s)):
                break
        pt = arc.point_at(u1s)
        fa = wa + geom.dist(pt, ap)
        if not (abs(g(u1s)) <= 1e-9 * (1.0 + fa) and lo_ok <= u1s <= hi_ok):
            return u
        # the refined junction must still lie on the distance envelope
        try:
            val, _ = self.dmin(pt)
        except OutsideDomain:
            return u
        if abs(val - fa) > 1e-6 * (1.0 + fa):
            return u
        return u1s

    def _joint_or_triple(self, sites, pt):
        """A junction is a smooth joint iff two of its cells' geodesics
        coincide at pt: a parent/child site pair with pt on the child's
        extension ray; otherwise it is a genuine triple point (in V)."""
        spt = self.spt
        ss = [s for s in sites if s is not None and s >= 0]
        for par in ss:
            for chi in ss:
                if chi == par or spt.parent[chi] != par:
                    continue
                cp = spt.xy[chi]
                pp = spt.xy[par]
                vx, vy = pt[0] - cp[0], pt[1] - cp[1]
                wx, wy = cp[0] - pp[0], cp[1] - pp[1]
                cr = vx * wy - vy * wx
                dt = vx * wx + vy * wy
                nrm = math.hypot(vx, vy) * math.hypot(wx, wy)
                if nrm == 0:
                    continue
                if abs(cr) <= 1e-6 * nrm and dt > 0:
                    return "joint"
        return "triple"

    def _cluster(self, pt, sites):
        tol = 1e-6 * self.dom.scale
        sset = tuple(sorted({s for s in sites if s is not None and s >= 0}))
        for i, j in enumerate(self.junctions):
            if geom.dist(j.point, pt) <= tol:
                if set(sset) - set(j.sites):
                    j.sites = tuple(sorted(set(j.sites) | set(sset)))
                    j.kind = self._joint_or_triple(j.sites, j.point)
                return i
        kind = self._joint_or_triple(sset, pt)
        self.junctions.append(Junction(point=pt, kind=kind, sites=sset))
        return len(self.junctions) - 1

    # -- supercurve assembly --------------------------------------------------

    def _assemble_supercurves(self):
        # joints weld genuine pieces into maximal chains; chain ends are
        # crossings or triple points
        genuine_idx = [i for i, p in enumerate(self.pieces) if p.genuine]
        joint_ends = {}
        for i in genuine_idx:
            p = self.pieces[i]
            for e, info in ((0, p.end0), (1, p.end1)):
                if info[0] == "joint":
                    joint_ends.setdefault(info[1], []).append((i, e))
        for jidx, ends in joint_ends.items():
            if len(ends) != 2:
                self.reports.append(
                    f"joint {self.junctions[jidx].point} has {len(ends)} genuine ends")

        def end_info(i, e):
            p = self.pieces[i]
            return p.end1 if e == 1 else p.end0

        used = set()
        self.supercurves = []
        for i in genuine_idx:
            if i in used:
                continue
            used.add(i)
            chain = [(i, False)]  # (piece, flipped); tail=end0/head=end1 unflipped
            while True:  # extend at head
                ci, cf = chain[-1]
                info = end_info(ci, 0 if cf else 1)
                if info[0] != "joint":
                    break
                mates = [m for m in joint_ends.get(info[1], []) if m[0] not in used]
                if len(mates) != 1:
                    break
                ni, ne = mates[0]
                used.add(ni)
                chain.append((ni, ne == 1))
            while True:  # extend at tail
                ci, cf = chain[0]
                info = end_info(ci, 1 if cf else 0)
                if info[0] != "joint":
                    break
                mates = [m for m in joint_ends.get(info[1], []) if m[0] not in used]
                if len(mates) != 1:
                    break
                ni, ne = mates[0]
                used.add(ni)
                chain.insert(0, (ni, ne == 0))
            fi, ff = chain[0]
            li, lf = chain[-1]
            n0 = end_info(fi, 1 if ff else 0)
            n1 = end_info(li, 0 if lf else 1)
            self.supercurves.append({"chain": chain, "node0": n0, "node1": n1})

    # -- diagnostics ----------------------------------------------------------

    def skeleton_summary(self):
        triples = [j for j in self.junctions if j.kind == "triple"]
        return {
            "pieces": len(self.pieces),
            "genuine_pieces": sum(1 for p in self.pieces if p.genuine),
            "crossings": len(self.crossings),
            "triples": len(triples),
            "supercurves": len(self.supercurves),
            "reports": list(self.reports),
        }


def build_spm(dom, spt=None, eps_bis=None, audit=False):
    if spt is None:
        spt = build_spt(dom)
    return ShortestPathMap(dom, spt, eps_bis=eps_bis, audit=audit)


def sample_cells(spm, rays=180):
    """Sampled star-shaped cell boundaries per root (for dumps and rendering).

    Each cell is swept by rays from its root: the radius where the locate
    winner changes (or the boundary is hit) bounds the cell in that direction.
    """
    dom = spm.dom
    out = []
    for site in spm.root_sites:
        origin = tuple(spm.spt.xy[site])
        pts = []
        for k in range(rays):
            ang = 2 * math.pi * (k + 0.5) / rays
            d = (math.cos(ang), math.sin(ang))
            t_edge, idx, code = kernels.ray_scan(origin[0], origin[1], d[0], d[1],
                                                 dom.edges, 1e-12 * dom.scale)
            if idx < 0:
                continue
            probe = (origin[0] + 1e-7 * dom.scale * d[0],
                     origin[1] + 1e-7 * dom.scale * d[1])
            try:
                if spm.dmin(probe)[1] != site:
                    continue
            except OutsideDomain:
                continue
            lo, hi = 1e-7 * dom.scale, t_edge * (1 - 1e-12)
            ok_hi = False
            try:
                ok_hi = spm.dmin((origin[0] + hi * d[0], origin[1] + hi * d[1]))[1] == site
            except OutsideDomain:
                pass
            if ok_hi:
                pts.append((origin[0] + hi * d[0], origin[1] + hi * d[1]))
                continue
            for _ in range(50):
                mid = 0.5 * (lo + hi)
                p = (origin[0] + mid * d[0], origin[1] + mid * d[1])
                try:
                    good = spm.dmin(p)[1] == site
                except OutsideDomain:
                    good = False
                if good:
                    lo = mid
                else:
                    hi = mid
            pts.append((origin[0] + lo * d[0], origin[1] + lo * d[1]))
        if pts:
            out.append({"root_site": site,
                        "root": [origin[0], origin[1]],
                        "boundary": [[p[0], p[1]] for p in pts]})
    return out


def spm_dump(spm, samples_per_arc=24):
    """Debug JSON: cells (sampled), bisector super-curves, crossings, triples."""
    curves = []
    for sc in spm.supercurves:
        pts = []
        for (pi, flip) in sc["chain"]:
            ss = spm.pieces[pi].arc.sample(samples_per_arc)
            pts.extend(ss[::-1] if flip else ss)
        curves.append([[p[0], p[1]] for p in pts])
    return {
        "cells": sample_cells(spm),
        "supercurves": curves,
        "crossings": [[float(c.point[0]), float(c.point[1])] for c in spm.crossings],
        "triples": [[float(j.point[0]), float(j.point[1])]
                    for j in spm.junctions if j.kind == "triple" and j.ends],
        "extensions": [[[p[0], p[1]] for p in piece.arc.sample(2)]
                       for piece in spm.pieces if not piece.genuine],
    }
