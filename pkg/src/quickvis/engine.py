"""Engine bundle: builds every structure once, answers all query kinds."""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

from . import geom, qvq
from .decomp import Decomposition, build_anchor_set
from .domain import load_domain
from .errors import DegenerateInput, NoCommonPoint, OutsideDomain
from .spindex import RegionRangeIndex, SpSegIndex, _seg_intersect_pt
from .spm import build_spm, build_spt
from .qvq import CycleOrder, QvqAnswer, SideRun, Window, compute_windows


@dataclass
class EngineConfig:
    eps_bis: float = None
    gp_mode: str = "auto"        # 'auto' | 'perturb' | 'error'
    audit: bool = False

    def __post_init__(self):
        if self.eps_bis is None:
            self.eps_bis = geom.EPS_BIS


class Engine:
    def __init__(self, dom, config=None):
        self.config = config or EngineConfig()
        self.dom = dom
        self.reports = []
        self.timings = {}
        t0 = time.perf_counter()
        self.spt = build_spt(dom)
        self.timings["spt"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        self.spm = build_spm(dom, self.spt, eps_bis=self.config.eps_bis,
                             audit=self.config.audit)
        self.timings["spm"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        self.decomp = Decomposition(self.spm, audit=self.config.audit)
        self.timings["decomp"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        self.sp_index = SpSegIndex(self.decomp)
        self.range_index = RegionRangeIndex(self.decomp)
        self.cycle = CycleOrder(self.spt)
        self.timings["indexes"] = time.perf_counter() - t0
        self.corridor = None     # built lazily by the corridor module
        self.query_count = 0

    def report(self, msg):
        self.reports.append(msg)

    # -- structure summaries ---------------------------------------------------

    def build_report(self):
        rep = {
            "n": self.dom.n,
            "h": self.dom.h,
            "anchors": self.decomp.anchors.hstar,
            "d_cells": len(self.decomp.cells),
            "regions": len(self.decomp.regions),
            "spm": self.spm.skeleton_summary(),
            "timings": {k: round(v, 6) for k, v in self.timings.items()},
        }
        if self.corridor is not None:
            rep["bays"] = len(self.corridor.bays)
            rep["canals"] = len(self.corridor.canals)
        return rep

    # -- segment query -----------------------------------------------------------

    def segment_query(self, a, b):
        return self.decomp.segment_query(a, b)

    # -- region processing (Lemma-15 style) ---------------------------------------

    def region_process(self, region_idx, qpt, far, stats):
        stats["region_calls"] = stats.get("region_calls", 0) + 1
        decomp = self.decomp
        if not decomp.regions:
            cell = decomp.locate_cell(qpt) or decomp.locate_cell(far)
            if cell is None:
                return None
            return self._cell_candidates(cell, qpt, far)
        R = decomp.regions[region_idx]
        tau = (qpt, far)
        stats["sp_queries"] = stats.get("sp_queries", 0) + 2
        a = self.sp_index.anchor_query(R.i, *tau)
        b = self.sp_index.anchor_query(R.j, *tau)
        c = None
        if R.alpha[0] == "curve":
            sc = self.spm.supercurves[R.alpha[1]]
            for (pi, flip) in sc["chain"]:
                arc = self.spm.pieces[pi].arc
                hits = arc.seg_intersections(*tau)
                if hits:
                    c = arc.point_at(hits[0][0])
                    break
        tol = 1e-9 * self.dom.scale
        if a is not None and b is not None and geom.dist(a, b) <= tol:
            # tau crosses the tail: the crossing point is the region optimum
            ap = self.dom.snap_inside(a)
            if ap is not None:
                val, site = self.spm.dmin(ap)
                return (val, ap, self.spm.path_via(site, ap))
        pts = [p for p in (a, b, c) if p is not None]
        best = None
        if not pts:
            mid = (0.5 * (qpt[0] + far[0]), 0.5 * (qpt[1] + far[1]))
            cell = decomp.locate_cell(mid)
            if cell is None:
                return None
            return self._cell_candidates(cell, qpt, far)
        for p in pts:
            for cell in self._cells_at(p, region_idx):
                cand = self._cell_candidates(cell, qpt, far)
                if cand is not None and (best is None or cand[0] < best[0]):
                    best = cand
        return best

    def _cells_at(self, p, region_idx):
        out = []
        fallback = []
        for cell in self.decomp.cells:
            if cell.geo.contains(p):
                if region_idx in cell.regions.values():
                    out.append(cell)
                else:
                    fallback.append(cell)
            if len(out) == 2:
                break
        return out or fallback[:1]

    def _cell_candidates(self, cell, a, b):
        """Min over the <=2 sub-segments of cell ∩ ab (Lemma 1(5) per piece)."""
        subs = self._clip_to_cell(cell, a, b)
        best = None
        for (t0, t1) in subs:
            p0 = geom.seg_point_at(a, b, t0)
            p1 = geom.seg_point_at(a, b, t1)
            try:
                cand = self.decomp.seg_dist_in_cell(cell, p0, p1)
            except Exception:
                continue
            if best is None or cand[0] < best[0]:
                best = cand
        return best

    def _clip_to_cell(self, cell, a, b):
        cuts = {0.0, 1.0}
        g = self.decomp.graph
        for (eid, fwd) in cell.boundary_edges:
            n0, n1, _, _, payload = g.edges[eid]
            p = g.points[n0]
            q = g.points[n1]
            hit = _seg_seg_param_pair(a, b, p, q)
            if hit is not None:
                cuts.add(min(1.0, max(0.0, hit)))
        cut_list = sorted(cuts)
        out = []
        for t0, t1 in zip(cut_list, cut_list[1:]):
            if t1 - t0 < 1e-12:
                continue
            tm = 0.5 * (t0 + t1)
            mid = geom.seg_point_at(a, b, tm)
            if cell.geo.contains(mid):
                if out and abs(out[-1][1] - t0) < 1e-12:
                    out[-1] = (out[-1][0], t1)
                else:
                    out.append((t0, t1))
        return out

    # -- quickest visibility -------------------------------------------------------

    def quickest_visibility_query(self, q, windows_override=None, audit=None,
                                  provenance_tag=""):
        audit = self.config.audit if audit is None else audit
        dom = self.dom
        if not dom.contains(q):
            raise OutsideDomain(f"query {tuple(map(float, q))} outside free space")
        qf = (float(q[0]), float(q[1]))
        self.query_count += 1
        val, root = self.spm.dmin(q)
        stats = {"k": 0, "sp_queries": 0, "range_queries": 0, "region_calls": 0}
        if root == 0:
            return QvqAnswer(point=dom.sxy, length=0.0, path=[dom.sxy],
                             provenance="s-visible", stats=stats)
        if windows_override is None:
            windows, root_idx, u0_site = compute_windows(self, q)
        else:
            windows, root_idx, u0_site = windows_override
        stats["k"] = max(len(windows) - 1, 0)
        cands = []
        w0 = windows[root_idx] if root_idx >= 0 else None
        if w0 is not None:
            ln, pt, path, st = self.decomp.segment_query(w0.u, w0.far)
            cands.append((ln, pt, path, "root-window"))
        # endpoint set Q = {q} + far endpoints of the non-root windows
        dq, site_q = self.spm.dmin(q)
        cands.append((dq, qf, self.spm.path_via(site_q, q), "endpoint-set-Q"))
        others = [w for kk, w in enumerate(windows) if kk != root_idx]
        for w in others:
            dv, sv = self.spm.dmin(w.far)
            cands.append((dv, w.far, self.spm.path_via(sv, w.far), "endpoint-set-Q"))
        if others:
            zq = self.decomp.region_of_point(q) if self.decomp.regions else 0
            for side in ("left", "right"):
                run = SideRun(self, q, windows, root_idx, side, audit=audit)
                surv = run.stack_prune()
                run.bundle_prune(surv)
                zcache = {}

                def z_of_win(wi, run=run, zcache=zcache):
                    if wi not in zcache:
                        far = run.windows[wi].far
                        zcache[wi] = (self.decomp.region_of_point(far)
                                      if self.decomp.regions else 0)
                    return zcache[wi]

                best = run.closest_scan(zq, z_of_win)
                for key in ("sp_queries", "range_queries", "region_calls"):
                    stats[key] += run.stats.get(key, 0)
                if best is not None and best[1] is not None:
                    cands.append((best[0], best[1], best[2], f"{side}-scan"))
                run_tag = run
                if audit:
                    self._audit_run(run)
        best = min(c[0] for c in cands)
        tol = 1e-12 * (1 + best)
        winner = min((c for c in cands if c[0] <= best + tol),
                     key=lambda c: (tuple(c[1]), c[3]))
        pt = (float(winner[1][0]), float(winner[1][1]))
        return QvqAnswer(point=pt, length=float(winner[0]),
                         path=[(float(x), float(y)) for x, y in (winner[2] or [pt])],
                         provenance=winner[3] + provenance_tag, stats=stats)

    def _audit_run(self, run):
        # every order index entered/left the bundle sequence at most once
        assert run.B.inserted >= run.B.removed - set(), "bundle accounting broken"

    # -- star of segments (common-point queries) ------------------------------------

    def concurrent_segments_query(self, segments, audit=None):
        audit = self.config.audit if audit is None else audit
        segs = [((float(a[0]), float(a[1])), (float(b[0]), float(b[1])))
                for a, b in segments]
        if not segs:
            raise NoCommonPoint("no segments given")
        if len(segs) == 1:
            ln, pt, path, st = self.decomp.segment_query(*segs[0])
            return QvqAnswer(point=pt, length=ln, path=path,
                             provenance="segment-query", stats={"k": 1})
        p = self._common_point(segs)
        halves = []
        tol = 1e-9 * self.dom.scale
        for a, b in segs:
            for e in (a, b):
                if geom.dist(p, e) > tol:
                    halves.append(e)
        if not self.dom.contains(p):
            raise OutsideDomain("common point outside free space")
        stats = {"k": len(halves), "sp_queries": 0, "range_queries": 0,
                 "region_calls": 0}
        dq, site_q = self.spm.dmin(p)
        cands = [(dq, p, self.spm.path_via(site_q, p), "common-point")]
        windows = [Window(u_vid=-1, u=p, far=e,
                          angle=math.atan2(e[1] - p[1], e[0] - p[0]) % (2 * math.pi))
                   for e in halves]
        for w in windows:
            dv, sv = self.spm.dmin(w.far)
            cands.append((dv, w.far, self.spm.path_via(sv, w.far), "endpoint"))
        base_angle = math.atan2(p[1] - self.spt.xy[site_q][1],
                                p[0] - self.spt.xy[site_q][0]) % (2 * math.pi)
        zq = self.decomp.region_of_point(p) if self.decomp.regions else 0
        for side in ("left", "right"):
            run = SideRun(self, p, windows, -1, side, audit=audit,
                          base_angle=base_angle)
            surv = run.stack_prune()
            run.bundle_prune(surv)
            zc = {}

            def z_of_win(wi, run=run, zc=zc):
                if wi not in zc:
                    far = run.windows[wi].far
                    zc[wi] = (self.decomp.region_of_point(far)
                              if self.decomp.regions else 0)
                return zc[wi]

            best = run.closest_scan(zq, z_of_win)
            for key in ("sp_queries", "range_queries", "region_calls"):
                stats[key] += run.stats.get(key, 0)
            if best is not None and best[1] is not None:
                cands.append((best[0], best[1], best[2], f"{side}-scan"))
        best_v = min(c[0] for c in cands)
        tol = 1e-12 * (1 + best_v)
        winner = min((c for c in cands if c[0] <= best_v + tol),
                     key=lambda c: (tuple(c[1]), c[3]))
        return QvqAnswer(point=(float(winner[1][0]), float(winner[1][1])),
                         length=float(winner[0]),
                         path=[(float(x), float(y)) for x, y in (winner[2] or [])],
                         provenance=winner[3], stats=stats)

    def _common_point(self, segs):
        tol = 1e-9 * self.dom.scale
        (a0, b0) = segs[0]
        candidates = []
        for (a1, b1) in segs[1:]:
            pt = _seg_intersect_pt(a0, b0, a1, b1)
            if pt is not None:
                candidates.append(pt)
                break
        else:
            candidates = [a0, b0]
        for p in candidates + [a0, b0]:
            ok = True
            for (a, b) in segs:
                if not qvq._on_segment_tol(a, b, p, tol):
                    ok = False
                    break
            if ok:
                return (float(p[0]), float(p[1]))
        raise NoCommonPoint("segments do not share a common point")


def _seg_seg_param_pair(a, b, p, q):
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    px, py = float(p[0]), float(p[1])
    qx, qy = float(q[0]), float(q[1])
    r1x, r1y = bx - ax, by - ay
    r2x, r2y = qx - px, qy - py
    den = r1x * r2y - r1y * r2x
    if den == 0:
        return None
    t = ((px - ax) * r2y - (py - ay) * r2x) / den
    u = ((px - ax) * r1y - (py - ay) * r1x) / den
    if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= u <= 1 + 1e-12:
        return t
    return None


def build_engine(dom, config=None):
    """Build with the configured general-position policy."""
    config = config or EngineConfig()
    if config.gp_mode in ("auto", "error"):
        return Engine(dom, config)
    # 'perturb': deterministically nudge hole vertices until the build passes
    import random
    from fractions import Fraction
    from .domain import validate_domain
    last = None
    for attempt in range(8):
        try:
            return Engine(dom, config)
        except DegenerateInput as e:
            last = e
            rng = random.Random(1000 + attempt)
            mag = Fraction(1, 10 ** 7)
            holes = [[(x + mag * rng.randint(-9, 9), y + mag * rng.randint(-9, 9))
                      for (x, y) in h] for h in dom.holes]
            dom = validate_domain(dom.outer, holes, dom.source)
    raise last
