"""Anchor set V, tree T_V, decomposition D, regions R, and segment queries.

V collects two copies of every bisector-obstacle crossing and three of every
triple point, ordered counterclockwise along the boundary of the cut domain
P' (free space cut along the bisector network). D is the straight-edge
subdivision of the domain by the union of geodesics to V; its cells carry at
most two super-roots with per-cell geodesic tables, answering
shortest-path-to-segment queries by a pedestrian walk across cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geom, kernels
from .errors import DegenerateInput, OutsideDomain, SegmentNotInCell
from .planar import PlanarGraph, corner_probe, face_area


@dataclass
class AnchorCopy:
    point: tuple
    cell: int            # SPM root site owning this copy
    kind: str            # 'crossing' | 'triple'
    node: tuple          # walk-graph node key


@dataclass
class AnchorSet:
    copies: list
    alphas: list         # per i: ('curve', sc_idx) or ('obstacle', [(edge, p0, p1), ...])

    @property
    def hstar(self):
        return len(self.copies)


def canonical_order(root, children_of, point_of, parent_dir=None, first_child=None):
    """Post-order of a planar tree; children ccw starting after the parent
    direction (at the root: starting from first_child if given)."""
    out = []

    def ang(frm, to):
        return math.atan2(point_of(to)[1] - point_of(frm)[1],
                          point_of(to)[0] - point_of(frm)[0])

    def rec(node, pdir):
        kids = list(children_of(node))
        if kids:
            kk = sorted(kids, key=lambda c: (ang(node, c) - pdir) % (2 * math.pi))
            for c in kk:
                rec(c, (ang(node, c) + math.pi) % (2 * math.pi))
        out.append(node)

    kids = list(children_of(root))
    if kids:
        if first_child is not None and first_child in kids:
            base = ang(root, first_child) - 1e-12
        else:
            base = 0.0 if parent_dir is None else parent_dir
        kk = sorted(kids, key=lambda c: (ang(root, c) - base) % (2 * math.pi))
        for c in kk:
            rec(c, (ang(root, c) + math.pi) % (2 * math.pi))
    out.append(root)
    return out


class AnchorTree:
    """T_V: the union of geodesics from s to all anchor copies."""

    def __init__(self, spm, anchors):
        self.spm = spm
        self.anchors = anchors
        spt = spm.spt
        self.site_edges = set()      # (parent_site, child_site) marked T_V edges
        marked_sites = set()
        for copy in anchors.copies:
            v = copy.cell
            while v > 0 and v not in marked_sites:
                marked_sites.add(v)
                p = int(spt.parent[v])
                self.site_edges.add((p, v))
                v = p
        marked_sites.add(0)
        self.sites = marked_sites
        # children: site -> [site children] + leaf copies attached at roots
        self.site_children = {s: [] for s in marked_sites}
        for p, c in self.site_edges:
            self.site_children[p].append(c)
        self.leaves_at = {}
        for i, copy in enumerate(anchors.copies):
            self.leaves_at.setdefault(copy.cell, []).append(i)
        # postorder index of every node ('site', v) / ('leaf', i), planar order
        self._build_order()

    def node_point(self, node):
        if node[0] == "site":
            return tuple(self.spm.spt.xy[node[1]])
        return self.anchors.copies[node[1]].point

    def _children(self, node):
        if node[0] != "site":
            return []
        v = node[1]
        out = [("site", c) for c in self.site_children.get(v, [])]
        out += [("leaf", i) for i in self.leaves_at.get(v, [])]
        return out

    def _build_order(self):
        root = ("site", 0)
        if not self._children(root):
            self.postorder = [root]
            self.leaf_order = []
            self.post_index = {root: 0}
            return
        order = canonical_order(root, self._children, self.node_point)
        # rotate so the base leaf (leftmost leaf of the first subtree) is first;
        # canonical_order already yields it first among leaves by construction
        self.postorder = order
        self.post_index = {n: k for k, n in enumerate(order)}
        self.leaf_order = [n[1] for n in order if n[0] == "leaf"]

    def path_nodes(self, copy_idx):
        copy = self.anchors.copies[copy_idx]
        sites = self.spm.spt.path_sites(copy.cell)
        return [("site", v) for v in sites] + [("leaf", copy_idx)]

    def edge_leaf_range(self):
        """For every T_V edge (as node pair), the contiguous leaf-index range
        [lo, hi] (positions in the ccw leaf order) whose root paths use it."""
        pos = {leaf: k for k, leaf in enumerate(self.leaf_order)}
        rng = {}

        def rec(node):
            lo, hi = math.inf, -math.inf
            if node[0] == "leaf":
                lo = hi = pos[node[1]]
            for c in self._children(node):
                clo, chi = rec(c)
                rng[(node, c)] = (clo, chi)
                lo = min(lo, clo)
                hi = max(hi, chi)
            return lo, hi

        rec(("site", 0))
        return rng


# ---------------------------------------------------------------------------


class FaceGeo:
    """Geodesic machinery inside one D cell (simple polygon, slits allowed)."""

    def __init__(self, dom, walk_pts, walk_nodes):
        self.dom = dom
        self.pts = [tuple(map(float, p)) for p in walk_pts]
        self.nodes = list(walk_nodes)
        m = len(self.pts)
        self.edges = np.array([[*self.pts[i], *self.pts[(i + 1) % m]]
                               for i in range(m)], dtype=np.float64)
        self.m = m
        self._vis_cache = {}
        self._tables = {}

    def interior_sample(self):
        for i in range(self.m):
            a = self.pts[i]
            b = self.pts[(i + 1) % self.m]
            mid = (0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]))
            nx, ny = -(b[1] - a[1]), b[0] - a[0]
            ln = math.hypot(nx, ny)
            if ln == 0:
                continue
            for eps in (1e-4, 1e-6, 1e-8):
                p = (mid[0] + eps * self.dom.scale * nx / ln,
                     mid[1] + eps * self.dom.scale * ny / ln)
                if self.contains(p, boundary_tol=0.0):
                    return p
        return None

    def contains(self, p, boundary_tol=None):
        """Even-odd parity against the boundary walk (closed region)."""
        tol = 1e-9 * self.dom.scale if boundary_tol is None else boundary_tol
        if tol > 0 and self.dist_to_boundary(p) <= tol:
            return True
        x, y = float(p[0]), float(p[1])
        for rot in (0.0, 0.37, 1.17, 2.03):
            dx, dy = math.cos(0.5772156649 + rot), math.sin(0.5772156649 + rot)
            cnt = 0
            ok = True
            for (x1, y1, x2, y2) in self.edges:
                ex, ey = x2 - x1, y2 - y1
                den = dx * ey - dy * ex
                if den == 0:
                    continue
                t = ((x1 - x) * ey - (y1 - y) * ex) / den
                u = ((x1 - x) * dy - (y1 - y) * dx) / den
                if -1e-12 < u < 1e-12 or 1 - 1e-12 < u < 1 + 1e-12:
                    ok = False
                    break
                if t > 0 and 0 < u < 1:
                    cnt += 1
            if ok:
                return cnt % 2 == 1
        return cnt % 2 == 1  # pragma: no cover

    def dist_to_boundary(self, p):
        x, y = float(p[0]), float(p[1])
        best = math.inf
        for (x1, y1, x2, y2) in self.edges:
            dx, dy = x2 - x1, y2 - y1
            dd = dx * dx + dy * dy
            t = 0.0 if dd == 0 else max(0.0, min(1.0, ((x - x1) * dx + (y - y1) * dy) / dd))
            best = min(best, math.hypot(x - (x1 + t * dx), y - (y1 + t * dy)))
        return best

    def seg_inside(self, p, q):
        """Closed segment pq stays inside the closed cell."""
        pf = (float(p[0]), float(p[1]))
        qf = (float(q[0]), float(q[1]))
        if pf == qf:
            return self.contains(p)
        code = kernels.seg_code_scan(pf[0], pf[1], qf[0], qf[1], self.edges)
        if code == 1:
            # crossings within tolerance of an endpoint are boundary-hugging
            ts, ei, cs = kernels.seg_hit_params(pf[0], pf[1], qf[0], qf[1], self.edges)
            seglen = math.hypot(qf[0] - pf[0], qf[1] - pf[1])
            tol_t = 2e-9 * self.dom.scale / max(seglen, 1e-300)
            for t, c in zip(ts, cs):
                if c == 1 and tol_t < t < 1.0 - tol_t:
                    return False
            code = 2
        if code == 0:
            return self.contains(((p[0] + q[0]) / 2, (p[1] + q[1]) / 2))
        # grazing: subdivide at all contacts and parity-check midpoints
        ts, ei, cs = kernels.seg_hit_params(float(p[0]), float(p[1]),
                                            float(q[0]), float(q[1]), self.edges)
        cuts = sorted(set([0.0, 1.0] + [float(t) for t in ts]))
        for t0, t1 in zip(cuts, cuts[1:]):
            tm = 0.5 * (t0 + t1)
            mid = (p[0] + tm * (q[0] - p[0]), p[1] + tm * (q[1] - p[1]))
            if not self.contains(mid):
                return False
        return True

    def table(self, root_node):
        """Geodesic distances + funnel parents from a boundary walk position."""
        if root_node in self._tables:
            return self._tables[root_node]
        src_positions = [i for i, nd in enumerate(self.nodes) if nd == root_node]
        if not src_positions:
            raise DegenerateInput(f"super-root {root_node} not on cell boundary")
        m = self.m
        INF = math.inf
        dist = [INF] * m
        par = [-1] * m
        import heapq
        h = []
        for sp in src_positions:
            dist[sp] = 0.0
            heapq.heappush(h, (0.0, sp))
        while h:
            d, v = heapq.heappop(h)
            if d > dist[v] + 1e-15:
                continue
            pv = self.pts[v]
            for u in range(m):
                if dist[u] <= d:
                    continue
                pu = self.pts[u]
                if pu == pv:
                    nd = d
                else:
                    if not self._vis(v, u):
                        continue
                    nd = d + math.hypot(pu[0] - pv[0], pu[1] - pv[1])
                if nd < dist[u] - 1e-15:
                    dist[u] = nd
                    par[u] = v
                    heapq.heappush(h, (nd, u))
        self._tables[root_node] = (dist, par)
        return dist, par

    def _vis(self, i, j):
        key = (i, j) if i < j else (j, i)
        v = self._vis_cache.get(key)
        if v is None:
            v = self.seg_inside(self.pts[i], self.pts[j])
            self._vis_cache[key] = v
        return v

    def point_dist(self, root_node, t):
        """(dist, via_position) geodesic from the root to point t inside the cell."""
        dist, par = self.table(root_node)
        best = math.inf
        via = -1
        tf = (float(t[0]), float(t[1]))
        for v in range(self.m):
            if not math.isfinite(dist[v]):
                continue
            d = dist[v] + math.hypot(self.pts[v][0] - tf[0], self.pts[v][1] - tf[1])
            if d < best - 1e-15:
                if self.seg_inside(self.pts[v], tf):
                    best = d
                    via = v
        return best, via

    def path_to(self, root_node, via, t):
        dist, par = self.table(root_node)
        out = [(float(t[0]), float(t[1]))]
        v = via
        while v >= 0:
            if not out or out[-1] != self.pts[v]:
                out.append(self.pts[v])
            v = par[v]
        return out[::-1]

    def seg_dist(self, root_node, a, b):
        """(dist, point, via) min geodesic from the root to segment ab."""
        dist, par = self.table(root_node)
        af = (float(a[0]), float(a[1]))
        bf = (float(b[0]), float(b[1]))
        best, via, arg = math.inf, -1, af
        for endpoint in (af, bf):
            d, v = self.point_dist(root_node, endpoint)
            if d < best:
                best, via, arg = d, v, endpoint
        dx, dy = bf[0] - af[0], bf[1] - af[1]
        dd = dx * dx + dy * dy
        if dd > 0:
            for v in range(self.m):
                if not math.isfinite(dist[v]):
                    continue
                pv = self.pts[v]
                t = ((pv[0] - af[0]) * dx + (pv[1] - af[1]) * dy) / dd
                if t <= 0 or t >= 1:
                    continue
                foot = (af[0] + t * dx, af[1] + t * dy)
                d = dist[v] + math.hypot(pv[0] - foot[0], pv[1] - foot[1])
                if d < best - 1e-15 and self.seg_inside(pv, foot):
                    best, via, arg = d, v, foot
        return best, arg, via


@dataclass
class DCell:
    face_id: int
    walk_nodes: list
    walk_pts: list
    boundary_edges: list        # (edge_id_in_graph, forward)
    geo: FaceGeo
    super_roots: list = field(default_factory=list)   # site ids
    merged: bool = False
    supercurve: int = -1        # index into spm.supercurves when merged
    side_samples: dict = field(default_factory=dict)  # site -> sample point
    regions: dict = field(default_factory=dict)       # site (super-root key) -> region idx


class Decomposition:
    """D plus the region set R and the pedestrian segment query."""

    def __init__(self, spm, anchors=None, audit=False):
        self.spm = spm
        self.dom = spm.dom
        self.audit = audit
        self.anchors = anchors if anchors is not None else build_anchor_set(spm)
        self._align_anchor_order()
        self.tree = AnchorTree(spm, self.anchors)
        if self.tree.leaf_order != list(range(len(self.anchors.copies))):
            raise DegenerateInput(
                f"canonical leaf order {self.tree.leaf_order} is not the ccw walk order")
        self._build_graph()
        self._build_cells()
        self._build_regions()
        self._assign_super_roots()
        self.stats = {"segment_queries": 0, "cells_visited": 0, "subsegments": 0,
                      "max_cells_one_query": 0}


    def _align_anchor_order(self):
        """Rotate the walk-ordered copies so the planar-tree canonical leaf
        order (base-leaf post-order) is exactly 0..h*-1."""
        anchors = self.anchors
        h = len(anchors.copies)
        if h == 0:
            return
        lo = AnchorTree(self.spm, anchors).leaf_order
        off = lo[0]
        want = [(off + k) % h for k in range(h)]
        if lo != want:
            rev = [(off - k) % h for k in range(h)]
            if lo == rev:
                raise DegenerateInput("tree leaf order reversed vs boundary walk")
            raise DegenerateInput(
                f"leaf order {lo} is not a rotation of the boundary walk")
        anchors.copies = [anchors.copies[(off + k) % h] for k in range(h)]
        anchors.alphas = [anchors.alphas[(off + k) % h] for k in range(h)]

    # -- arrangement ---------------------------------------------------------

    def _build_graph(self):
        spm = self.spm
        dom = self.dom
        g = PlanarGraph()
        for v in range(dom.n):
            g.add_node(("v", v), tuple(dom.vxy[v]))
        g.add_node(("s",), dom.sxy)
        cross_node = {}
        for ci, c in enumerate(spm.crossings):
            if c.at_vertex >= 0:
                cross_node[ci] = ("v", c.at_vertex)
            else:
                cross_node[ci] = ("x", ci)
                g.add_node(("x", ci), c.point)
        for ji, j in enumerate(spm.junctions):
            if j.kind == "triple" and j.ends:
                g.add_node(("t", ji), j.point)
        self.cross_node = cross_node
        # ring edges split at non-vertex crossings
        by_edge = {}
        for ci, c in enumerate(spm.crossings):
            if c.at_vertex < 0:
                by_edge.setdefault(c.edge_id, []).append(ci)
        self.ring_subedges = []
        for e, (va, vb) in enumerate(dom.edge_verts):
            pa = tuple(dom.vxy[va])
            pb = tuple(dom.vxy[vb])
            stops = [("v", va)]
            mids = by_edge.get(e, [])
            mids.sort(key=lambda ci: geom.lerp_param(pa, pb, spm.crossings[ci].point))
            stops += [("x", ci) for ci in mids]
            stops.append(("v", vb))
            d = (pb[0] - pa[0], pb[1] - pa[1])
            for k in range(len(stops) - 1):
                n0, n1 = stops[k], stops[k + 1]
                eid = g.add_edge(n0, n1, d, (-d[0], -d[1]),
                                 payload=("ring", e))
                self.ring_subedges.append(eid)
        # marked SPT edges (skip those lying along ring edges)
        ring_pairs = {(min(a, b), max(a, b)) for a, b in dom.edge_verts}
        self.tv_graph_edges = {}
        for (p, c) in self.tree.site_edges:
            n0 = ("s",) if p == 0 else ("v", p - 1)
            n1 = ("v", c - 1)
            if p > 0 and (min(p - 1, c - 1), max(p - 1, c - 1)) in ring_pairs:
                self.tv_graph_edges[(("site", p), ("site", c))] = None
                continue
            pa = g.points[n0]
            pb = g.points[n1]
            d = (pb[0] - pa[0], pb[1] - pa[1])
            eid = g.add_edge(n0, n1, d, (-d[0], -d[1]), payload=("tv", ("site", p), ("site", c)))
            self.tv_graph_edges[(("site", p), ("site", c))] = eid
        # leaf edges root -> anchor copy point (deduped per geometric target)
        seen_leaf = {}
        for i, copy in enumerate(self.anchors.copies):
            root = copy.cell
            n0 = ("s",) if root == 0 else ("v", root - 1)
            n1 = copy.node if copy.node[0] != "x" else copy.node
            key = (n0, n1)
            if key in seen_leaf:
                self.tv_graph_edges[(("site", root), ("leaf", i))] = seen_leaf[key]
                continue
            if n1 == n0:
                self.tv_graph_edges[(("site", root), ("leaf", i))] = None
                continue
            pa = g.points[n0]
            pb = g.points[n1]
            if self._on_boundary_collinear(root, copy):
                self.tv_graph_edges[(("site", root), ("leaf", i))] = None
                seen_leaf[key] = None
                continue
            d = (pb[0] - pa[0], pb[1] - pa[1])
            eid = g.add_edge(n0, n1, d, (-d[0], -d[1]),
                             payload=("tv", ("site", root), ("leaf", i)))
            self.tv_graph_edges[(("site", root), ("leaf", i))] = eid
            seen_leaf[key] = eid
        self.graph = g

    def _on_boundary_collinear(self, root, copy):
        """Leaf edge coincides with a piece of obstacle boundary."""
        if copy.kind != "crossing":
            return False
        ci = copy.node[1] if copy.node[0] == "x" else None
        dom = self.dom
        rp = dom.vxy[root - 1] if root > 0 else dom.sxy
        # collinear with the host edge and root on its supporting line
        if copy.node[0] == "v":
            vid = copy.node[1]
            for e in (dom.vertex_edge_out.get(vid), dom.vertex_edge_in.get(vid)):
                if e is None:
                    continue
                a = dom.edges[e, 0:2]
                b = dom.edges[e, 2:4]
                if abs((b[0] - a[0]) * (rp[1] - a[1]) - (b[1] - a[1]) * (rp[0] - a[0])) \
                        <= 1e-9 * dom.scale ** 2:
                    return True
            return False
        c = self.spm.crossings[ci]
        e = c.edge_id
        a = dom.edges[e, 0:2]
        b = dom.edges[e, 2:4]
        return abs((b[0] - a[0]) * (rp[1] - a[1]) - (b[1] - a[1]) * (rp[0] - a[0])) \
            <= 1e-9 * dom.scale ** 2

    # -- cells ----------------------------------------------------------------

    def _build_cells(self):
        g = self.graph
        faces = g.faces()
        self.faces_raw = faces
        self.half_edge_face = {}
        cells = []
        for fid, face in enumerate(faces):
            for he in face:
                self.half_edge_face[he] = fid
        keep = []
        for fid, face in enumerate(faces):
            nodes = g.face_nodes(face)
            pts = [g.points[n] for n in nodes]
            if face_area(pts) <= 0:
                keep.append(None)
                continue
            geo = FaceGeo(self.dom, pts, nodes)
            sample = geo.interior_sample()
            if sample is None or not self.dom.contains(sample):
                keep.append(None)
                continue
            cell = DCell(face_id=fid, walk_nodes=nodes, walk_pts=geo.pts,
                         boundary_edges=list(face), geo=geo)
            cell.sample = sample
            keep.append(cell)
        self.face_cells = keep
        self.cells = [c for c in keep if c is not None]
        # map supercurves into their containing (merged) cells
        for k, sc in enumerate(self.spm.supercurves):
            pi, flip = sc["chain"][len(sc["chain"]) // 2]
            arc = self.spm.pieces[pi].arc
            mid = arc.point_at(0.5 * (arc.u0 + arc.u1))
            cell = self.locate_cell(mid)
            if cell is None:
                raise DegenerateInput(f"supercurve {k} midpoint not in any cell")
            cell.merged = True
            cell.supercurve = k

    def locate_cell(self, p, skip_boundary=False):
        for cell in self.cells:
            if cell.geo.contains(p, boundary_tol=0.0):
                return cell
        # boundary fallback: accept boundary tolerance, lowest face id
        for cell in self.cells:
            if cell.geo.contains(p):
                return cell
        return None

    # -- regions ---------------------------------------------------------------

    def _build_regions(self):
        copies = self.anchors.copies
        h = len(copies)
        self.regions = []
        if h == 0:
            return
        for i in range(h):
            j = (i + 1) % h
            pi_sites = self.spm.spt.path_sites(copies[i].cell)
            pj_sites = self.spm.spt.path_sites(copies[j].cell)
            common = 0
            while (common < len(pi_sites) and common < len(pj_sites)
                   and pi_sites[common] == pj_sites[common]):
                common += 1
            tail_sites = pi_sites[:common]
            left = pi_sites[common - 1:]
            right = pj_sites[common - 1:]
            self.regions.append(Region(self, i, j, tail_sites, left, right,
                                       self.anchors.alphas[i]))

    def region_of_point(self, t, hint=None):
        """Index of the region whose cell contains t (lowest index on ties)."""
        if not self.regions:
            return 0
        order = range(len(self.regions))
        for i in order:
            if self.regions[i].cell_contains(t):
                return i
        # boundary tolerance pass
        for i in order:
            if self.regions[i].cell_contains(t, tol=1e-9 * self.dom.scale):
                return i
        raise OutsideDomain(f"point {t} not in any region cell")

    # -- super-roots -----------------------------------------------------------

    def _assign_super_roots(self):
        spm = self.spm
        for cell in self.cells:
            samples = [cell.sample]
            if cell.merged:
                samples = self._merged_samples(cell)
            for sample in samples:
                root = self._super_root_for(cell, sample)
                if root not in cell.super_roots:
                    cell.super_roots.append(root)
                cell.side_samples[root] = sample
            if len(cell.super_roots) > 2:
                raise DegenerateInput(
                    f"cell {cell.face_id} got {len(cell.super_roots)} super-roots")
            for root in cell.super_roots:
                if self.regions:
                    cell.regions[root] = self.region_of_point(cell.side_samples[root])
                else:
                    cell.regions[root] = 0

    def _merged_samples(self, cell):
        sc = self.spm.supercurves[cell.supercurve]
        pi, flip = sc["chain"][len(sc["chain"]) // 2]
        piece = self.spm.pieces[pi]
        arc = piece.arc
        um = 0.5 * (arc.u0 + arc.u1)
        pm = arc.point_at(um)
        tg = arc.tangent_at(um)
        nrm = (-tg[1], tg[0])
        out = []
        for sgn in (1.0, -1.0):
            for eps in (1e-4, 1e-5, 1e-6, 1e-7):
                p = (pm[0] + sgn * eps * self.dom.scale * nrm[0],
                     pm[1] + sgn * eps * self.dom.scale * nrm[1])
                if cell.geo.contains(p, boundary_tol=0.0) and self.dom.contains(p):
                    out.append(p)
                    break
        if len(out) != 2:
            raise DegenerateInput(
                f"cannot sample both sides of supercurve {cell.supercurve}")
        return out

    def _super_root_for(self, cell, sample):
        val, site = self.spm.dmin(sample)
        sites = self.spm.spt.path_sites(site)
        node_set = set(cell.walk_nodes)
        for v in sites:
            nd = ("s",) if v == 0 else ("v", v - 1)
            if nd in node_set:
                return v
        # geometric fallback: first path vertex inside the cell closure
        for v in sites:
            p = tuple(self.spm.spt.xy[v])
            if cell.geo.contains(p):
                return v
        raise DegenerateInput(f"no super-root found for cell {cell.face_id}")

    # -- queries ----------------------------------------------------------------

    def seg_dist_in_cell(self, cell, a, b, want_path=True):
        """Lemma-style per-cell query: min over the cell's super-roots."""
        spm = self.spm
        best = (math.inf, None, None)
        for root in cell.super_roots:
            node = ("s",) if root == 0 else ("v", root - 1)
            d, pt, via = cell.geo.seg_dist(node, a, b)
            total = float(spm.spt.w[root]) + d
            if total < best[0]:
                path = None
                if want_path:
                    inner = cell.geo.path_to(node, via, pt) if via >= 0 else [pt]
                    path = spm.path_via(root)[:-1] + inner
                best = (total, pt, path)
        if best[1] is None:
            raise SegmentNotInCell("segment has no geodesic inside cell")
        return best

    def point_dist_in_cell(self, cell, t):
        spm = self.spm
        best = (math.inf, None, None)
        for root in cell.super_roots:
            node = ("s",) if root == 0 else ("v", root - 1)
            d, via = cell.geo.point_dist(node, t)
            total = float(spm.spt.w[root]) + d
            if total < best[0]:
                best = (total, root, via)
        return best

    def segment_query(self, a, b):
        """Pedestrian walk along ab across D cells (Theorem-1 style).

        Returns (length, point, witness_path, stats)."""
        dom = self.dom
        af = dom.snap_inside(a)
        bf = dom.snap_inside(b)
        if af is None or bf is None:
            raise OutsideDomain("segment endpoint outside free space")
        if not dom.visible(af, bf):
            raise OutsideDomain("segment leaves the free space")
        stats = {"cells": [], "subsegments": 0, "per_cell": {}}
        best = (math.inf, None, None)
        cell = self._start_cell(af, bf)
        if cell is None:
            raise OutsideDomain(f"cannot locate {af}")
        t0 = 0.0
        guard = 0
        length = geom.dist(af, bf)
        while True:
            guard += 1
            if guard > 8 * max(len(self.cells), 4) + 16:
                raise DegenerateInput("pedestrian walk did not terminate")
            t1, nxt = self._exit_param(cell, af, bf, t0)
            p0 = geom.seg_point_at(af, bf, t0)
            p1 = geom.seg_point_at(af, bf, t1)
            cand = self.seg_dist_in_cell(cell, p0, p1)
            if cand[0] < best[0]:
                best = cand
            fid = cell.face_id
            stats["cells"].append(fid)
            stats["per_cell"][fid] = stats["per_cell"].get(fid, 0) + 1
            stats["subsegments"] += 1
            if t1 >= 1.0 - 1e-12:
                break
            if nxt is None:
                # crossing lands on a vertex: restart just beyond, deterministic
                eps = 1e-9
                probe_t = min(1.0, t1 + eps)
                p = geom.seg_point_at(af, bf, probe_t)
                nxt = self.locate_cell(p)
                while nxt is cell and probe_t < 1.0:
                    probe_t = min(1.0, probe_t + 1e-6)
                    p = geom.seg_point_at(af, bf, probe_t)
                    nxt = self.locate_cell(p)
                if nxt is None:
                    raise DegenerateInput("walk lost the segment at a vertex")
            cell = nxt
            t0 = t1
        if self.audit:
            for fid, cnt in stats["per_cell"].items():
                assert cnt <= 2, f"cell {fid} holds {cnt} > 2 maximal subsegments"
        self.stats["segment_queries"] += 1
        self.stats["cells_visited"] += len(set(stats["cells"]))
        self.stats["subsegments"] += stats["subsegments"]
        self.stats["max_cells_one_query"] = max(self.stats["max_cells_one_query"],
                                                len(set(stats["cells"])))
        return best[0], best[1], best[2], stats

    def _start_cell(self, af, bf):
        """The cell containing the first piece of segment af->bf (the start
        point may be a shared boundary corner of several cells)."""
        strict = [c for c in self.cells if c.geo.contains(af, boundary_tol=0.0)]
        loose = strict or [c for c in self.cells if c.geo.contains(af)]
        if af == bf:
            return loose[0] if loose else None
        seen = set()
        cands = []
        for c in strict + loose:
            if id(c) not in seen:
                seen.add(id(c))
                cands.append(c)
        for c in cands:
            t1, _ = self._exit_param(c, af, bf, 0.0)
            mid = geom.seg_point_at(af, bf, 0.5 * min(t1, 1.0))
            if c.geo.contains(mid):
                return c
        # probe just past the start point
        for frac in (1e-9, 1e-7, 1e-5, 1e-3):
            p = geom.seg_point_at(af, bf, frac)
            c = self.locate_cell(p)
            if c is not None:
                return c
        return loose[0] if loose else None

    def _exit_param(self, cell, a, b, t0):
        """First boundary crossing after t0 into a different face."""
        g = self.graph
        best_t = math.inf
        best_he = None
        vertex_hit = False
        eps = 1e-12
        for (eid, fwd) in cell.boundary_edges:
            twin = (eid, not fwd)
            if self.half_edge_face.get(twin) == cell.face_id:
                continue  # slit edge: same cell on both sides
            n0, n1, d0, d1, payload = g.edges[eid]
            if payload[0] == "ring":
                continue  # obstacle edges cannot be crossed
            p = g.points[n0]
            q = g.points[n1]
            hit = _seg_seg_param(a, b, p, q)
            if hit is None:
                continue
            t, u = hit
            if t <= t0 + eps or t > 1.0 + eps:
                continue
            if t < best_t:
                best_t = t
                if u < 1e-9 or u > 1 - 1e-9:
                    vertex_hit = True
                    best_he = None
                else:
                    vertex_hit = False
                    best_he = (eid, not fwd)
        if not math.isfinite(best_t):
            return 1.0, None
        if vertex_hit or best_he is None:
            return min(best_t, 1.0), None
        nxt_face = self.half_edge_face.get(best_he)
        nxt = self.face_cells[nxt_face] if nxt_face is not None else None
        return min(best_t, 1.0), nxt


class Region:
    """R_i between consecutive anchors v_i, v_{i+1} (ccw), with tail."""

    def __init__(self, decomp, i, j, tail_sites, left_sites, right_sites, alpha):
        self.decomp = decomp
        self.index = i
        self.i = i
        self.j = j
        self.tail_sites = tail_sites
        self.left_sites = left_sites      # from tail end to v_i's root
        self.right_sites = right_sites
        self.alpha = alpha
        spm = decomp.spm
        copies = decomp.anchors.copies
        self.vi_point = copies[i].point
        self.vj_point = copies[j].point
        pts = [tuple(spm.spt.xy[v]) for v in left_sites] + [self.vi_point]
        self.left_pts = pts
        pts = [tuple(spm.spt.xy[v]) for v in right_sites] + [self.vj_point]
        self.right_pts = pts
        self.tail_pts = [tuple(spm.spt.xy[v]) for v in tail_sites]
        # boundary loop pieces for parity tests
        segs = []
        for p, q in zip(self.left_pts, self.left_pts[1:]):
            segs.append((p, q))
        arcs = []
        if alpha[0] == "curve":
            sc = spm.supercurves[alpha[1]]
            for (pi, flip) in sc["chain"]:
                arcs.append(spm.pieces[pi].arc)
        else:
            for (_e, p, q) in alpha[1]:
                segs.append((p, q))
        for p, q in zip(self.right_pts[::-1], self.right_pts[::-1][1:]):
            segs.append((p, q))
        self.loop_segs = np.array([[p[0], p[1], q[0], q[1]] for p, q in segs],
                                  dtype=np.float64).reshape(-1, 4)
        self.loop_arcs = arcs

    def cell_contains(self, t, tol=0.0):
        x, y = float(t[0]), float(t[1])
        if tol > 0:
            for (x1, y1, x2, y2) in self.loop_segs:
                dx, dy = x2 - x1, y2 - y1
                dd = dx * dx + dy * dy
                tt = 0.0 if dd == 0 else max(0.0, min(1.0, ((x - x1) * dx + (y - y1) * dy) / dd))
                if math.hypot(x - (x1 + tt * dx), y - (y1 + tt * dy)) <= tol:
                    return True
            for arc in self.loop_arcs:
                for u, tseg in arc.seg_intersections((x - tol, y), (x + tol, y)):
                    return True
        for rot in (0.0, 0.41, 1.07, 1.93, 2.71):
            dx, dy = math.cos(0.5772156649 + rot), math.sin(0.5772156649 + rot)
            cnt = 0
            ok = True
            for (x1, y1, x2, y2) in self.loop_segs:
                ex, ey = x2 - x1, y2 - y1
                den = dx * ey - dy * ex
                if den == 0:
                    continue
                tt = ((x1 - x) * ey - (y1 - y) * ex) / den
                u = ((x1 - x) * dy - (y1 - y) * dx) / den
                if -1e-11 < u < 1e-11 or 1 - 1e-11 < u < 1 + 1e-11:
                    if tt > 0:
                        ok = False
                        break
                if tt > 1e-12 and 0 < u < 1:
                    cnt += 1
            if not ok:
                continue
            arc_ok = True
            for arc in self.loop_arcs:
                hits = arc.ray_intersections((x, y), (dx, dy))
                for u, tr in hits:
                    if tr > 1e-12:
                        if tr < 1e-9:
                            arc_ok = False
                            break
                        cnt += 1
                if not arc_ok:
                    break
            if not arc_ok:
                continue
            return cnt % 2 == 1
        return False

    def boundary_path_points(self, side):
        return self.left_pts if side == "left" else self.right_pts


def _seg_seg_param(a, b, p, q):
    """(t, u) params of intersection of ab with pq, or None (floats)."""
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
        return t, u
    return None


# ---------------------------------------------------------------------------
# Anchor set from the boundary walk of P' (free space cut along bisectors)


def build_anchor_set(spm):
    dom = spm.dom
    g = PlanarGraph()
    for v in range(dom.n):
        g.add_node(("v", v), tuple(dom.vxy[v]))
    cross_node = {}
    for ci, c in enumerate(spm.crossings):
        if c.at_vertex >= 0:
            cross_node[ci] = ("v", c.at_vertex)
        else:
            cross_node[ci] = ("x", ci)
            g.add_node(("x", ci), c.point)
    for ji, j in enumerate(spm.junctions):
        if j.kind == "triple" and j.ends:
            g.add_node(("t", ji), j.point)
    by_edge = {}
    for ci, c in enumerate(spm.crossings):
        if c.at_vertex < 0:
            by_edge.setdefault(c.edge_id, []).append(ci)
    edge_payload = {}
    for e, (va, vb) in enumerate(dom.edge_verts):
        pa = tuple(dom.vxy[va])
        pb = tuple(dom.vxy[vb])
        mids = by_edge.get(e, [])
        mids.sort(key=lambda ci: geom.lerp_param(pa, pb, spm.crossings[ci].point))
        stops = [("v", va)] + [("x", ci) for ci in mids] + [("v", vb)]
        pts = [pa] + [spm.crossings[ci].point for ci in mids] + [pb]
        d = (pb[0] - pa[0], pb[1] - pa[1])
        for k in range(len(stops) - 1):
            eid = g.add_edge(stops[k], stops[k + 1], d, (-d[0], -d[1]),
                             payload=("ring", e, pts[k], pts[k + 1]))
    # supercurve edges
    cross_of_pieceend = {}
    for ci, c in enumerate(spm.crossings):
        cross_of_pieceend[(c.piece, c.end)] = ci

    def node_of_endinfo(piece_idx, end, info):
        if info[0] == "edge":
            ci = cross_of_pieceend.get((piece_idx, end))
            if ci is None:
                raise DegenerateInput("crossing record missing for piece end")
            return cross_node[ci]
        if info[0] == "triple":
            return ("t", info[1])
        raise DegenerateInput(f"supercurve endpoint of kind {info[0]}")

    for k, sc in enumerate(spm.supercurves):
        fi, ff = sc["chain"][0]
        li, lf = sc["chain"][-1]
        p0 = spm.pieces[fi]
        p1 = spm.pieces[li]
        e0 = 1 if ff else 0
        e1 = 0 if lf else 1
        n0 = node_of_endinfo(fi, e0, sc["node0"])
        n1 = node_of_endinfo(li, e1, sc["node1"])
        u0 = p0.arc.u1 if ff else p0.arc.u0
        u1 = p1.arc.u0 if lf else p1.arc.u1
        t0 = p0.arc.tangent_at(u0)
        t1 = p1.arc.tangent_at(u1)
        d0 = (-t0[0], -t0[1]) if ff else t0           # outgoing from n0 into curve
        d1 = t1 if lf else (-t1[0], -t1[1])           # outgoing from n1 into curve
        g.add_edge(n0, n1, d0, d1, payload=("curve", k))

    faces = g.faces()
    free_face = None
    for face in faces:
        poly = _face_polyline(g, spm, face)
        if _point_in_polyline(dom.sxy, poly):
            free_face = face
            break
    if free_face is None:
        raise DegenerateInput("could not identify the free-space face")
    # corners at crossing/triple nodes are the V copies, in ccw walk order
    corners = g.face_corner_dirs(free_face)
    copies = []
    corner_positions = []
    for k, (node, din, dout) in enumerate(corners):
        if node[0] == "v":
            vid = node[1]
            if not any(cn == node for cn in cross_node.values()):
                continue
        elif node[0] not in ("x", "t"):
            continue
        pt = g.points[node]
        cell = _corner_cell(spm, pt, din, dout, node)
        kind = "triple" if node[0] == "t" else "crossing"
        copies.append(AnchorCopy(point=pt, cell=cell, kind=kind, node=node))
        corner_positions.append(k)
    # alpha chains between consecutive copies
    alphas = []
    m = len(free_face)
    for idx in range(len(corner_positions)):
        k0 = corner_positions[idx]
        k1 = corner_positions[(idx + 1) % len(corner_positions)]
        span = []
        k = k0
        while True:
            he = free_face[k % m]
            span.append(he)
            k += 1
            if (k % m) == (k1 % m):
                break
            if len(span) > m:
                raise DegenerateInput("alpha walk wrapped")
        payloads = [g.edges[e][4] for e, fwd in span]
        kinds = {p[0] for p in payloads}
        if kinds == {"curve"}:
            if len(payloads) != 1:
                raise DegenerateInput("alpha spans multiple supercurves")
            alphas.append(("curve", payloads[0][1]))
        elif kinds == {"ring"}:
            segs = []
            for (e, fwd), p in zip(span, payloads):
                a, b = (p[2], p[3]) if fwd else (p[3], p[2])
                segs.append((p[1], a, b))
            alphas.append(("obstacle", [(e, a, b) for (e, a, b) in segs]))
        else:
            raise DegenerateInput(f"alpha mixes ring and curve pieces: {kinds}")
    return AnchorSet(copies=copies, alphas=alphas)


def _face_polyline(g, spm, face):
    out = []
    for (eid, fwd) in face:
        n0, n1, d0, d1, payload = g.edges[eid]
        a = g.points[n0 if fwd else n1]
        if payload[0] == "curve":
            sc = spm.supercurves[payload[1]]
            pts = []
            for (pi, flip) in sc["chain"]:
                arc = spm.pieces[pi].arc
                ss = arc.sample(16)
                pts.extend(ss[::-1] if flip else ss)
            if geom.dist(pts[0], a) > geom.dist(pts[-1], a):
                pts = pts[::-1]
            out.extend(pts[:-1])
        else:
            out.append(a)
    return out


def _point_in_polyline(p, poly):
    x, y = float(p[0]), float(p[1])
    cnt = 0
    m = len(poly)
    for i in range(m):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % m]
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xi > x:
                cnt += 1
    return cnt % 2 == 1


def _corner_cell(spm, pt, din, dout, node):
    for eps_f in (1e-5, 1e-6, 1e-4, 1e-7, 1e-3):
        probe = corner_probe(pt, din, dout, eps_f * spm.dom.scale)
        try:
            if not spm.dom.contains(probe):
                continue
            val, site = spm.dmin(probe)
            return site
        except OutsideDomain:
            continue
    raise DegenerateInput(f"cannot classify corner cell at {pt} ({node})")


def build_decomposition(spm, anchors=None, audit=False):
    return Decomposition(spm, anchors=anchors, audit=audit)
