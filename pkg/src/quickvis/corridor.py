"""Extended corridor structure and the O(h)-candidate window set S(q).

The triangulation dual (with the source inserted as a puncture vertex) is
reduced to its 3-regular core; corridors between junction triangles carry
hourglasses whose convex sides, together with the junction triangles, form
the ocean M. Pockets behind hourglass sides are bays (one gate) or canals
(two gates incident to the funnel apices, containing the corridor path).
Windows classify against this structure into ocean / inner-bay /
inner-canal / outer-bay / outer-canal, and the candidate set keeps at most
the lemma-level handful per category.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import geom, kernels
from .domain import triangulate
from .errors import DegenerateInput
from .qvq import Window


@dataclass
class Corridor:
    triangles: list
    end_diagonals: list          # two (junction_tri, diagonal) pairs
    polygon: list                # ccw boundary vertex ids (triangulation points)
    sides: list                  # two lists of vertex ids (may be single points)
    hourglass: dict = None


@dataclass
class Pocket:
    kind: str                    # 'bay' | 'canal'
    polygon: list                # ccw point list (floats)
    gates: list                  # [(g0, g1) float points]
    gate_vids: list              # corresponding vertex ids
    apices: list = field(default_factory=list)   # corridor path endpoints (canal)
    corridor_path: list = field(default_factory=list)


class CorridorStructure:
    def __init__(self, engine):
        self.engine = engine
        self.dom = engine.dom
        dom = self.dom
        self.tri = triangulate(dom, include_source=True)
        self.s_id = len(self.tri.points) - 1
        self._reduce_dual()
        self._build_corridors()
        self._build_pockets()
        self._build_chains()

    # -- dual reduction ---------------------------------------------------------

    def _reduce_dual(self):
        tri = self.tri
        adj = tri.dual_adjacency()
        deg = {t: len(ns) for t, ns in adj.items()}
        alive = set(adj)
        # strip trees
        queue = [t for t in alive if deg[t] <= 1]
        while queue:
            t = queue.pop()
            if t not in alive:
                continue
            if deg[t] > 1:
                continue
            alive.discard(t)
            for (u, key) in adj[t]:
                if u in alive:
                    deg[u] -= 1
                    if deg[u] <= 1:
                        queue.append(u)
        junctions = {t for t in alive if deg[t] >= 3}
        if not junctions and alive:
            junctions = {min(alive)}  # bare cycle: pick one arbitrarily
        self.alive = alive
        self.junctions = junctions

    def _build_corridors(self):
        tri = self.tri
        adj = tri.dual_adjacency()
        seen = set()
        self.corridors = []
        comp_of = {}
        for t in self.alive:
            if t in self.junctions or t in seen:
                continue
            comp = [t]
            seen.add(t)
            stack = [t]
            ends = []
            while stack:
                u = stack.pop()
                for (v, key) in adj[u]:
                    if v not in self.alive:
                        continue
                    if v in self.junctions:
                        ends.append((v, key))
                    elif v not in seen:
                        seen.add(v)
                        comp.append(v)
                        stack.append(v)
            if len(ends) != 2:
                raise DegenerateInput(
                    f"corridor with {len(ends)} junction contacts")
            self.corridors.append(self._corridor_from(comp, ends))
        # junction-junction shared diagonals form empty corridors; ignored.

    def _corridor_from(self, comp, ends):
        tri = self.tri
        comp_set = set(comp)
        edge_use = {}
        tri_of = {}
        for t in comp:
            a, b, c = tri.triangles[t]
            for u, v in ((a, b), (b, c), (c, a)):
                key = (min(u, v), max(u, v))
                edge_use[key] = edge_use.get(key, 0) + 1
                tri_of[(u, v)] = t

        def boundary(u, v):
            return edge_use[(min(u, v), max(u, v))] == 1

        def third(t, u, v):
            a, b, c = tri.triangles[t]
            for (x, y, z) in ((a, b, c), (b, c, a), (c, a, b)):
                if (x, y) == (u, v):
                    return z
            raise DegenerateInput("triangle edge lookup failed")

        def successor(u, v):
            t = tri_of[(u, v)]
            while True:
                x = third(t, u, v)
                if boundary(v, x):
                    return (v, x)
                t = tri_of[(x, v)]
                u = x

        start = next((u, v) for (u, v) in tri_of if boundary(u, v))
        walk = [start]
        cur = successor(*start)
        guard = 0
        while cur != start:
            walk.append(cur)
            cur = successor(*cur)
            guard += 1
            if guard > 3 * len(comp) + 8:
                raise DegenerateInput("corridor boundary walk failed")
        poly = [e[0] for e in walk]   # walk order; vertices may repeat
        m = len(poly)
        diag_pairs = [tuple(sorted(ends[0][1])), tuple(sorted(ends[1][1]))]
        dpos = [k for k, (u, v) in enumerate(walk)
                if (min(u, v), max(u, v)) in diag_pairs]
        if len(dpos) != 2:
            raise DegenerateInput(f"corridor has {len(dpos)} end diagonals on walk")
        k1, k2 = dpos
        side1 = [(k1 + 1 + i) % m for i in range((k2 - k1 - 1) % m + 1)]
        side2 = [(k2 + 1 + i) % m for i in range((k1 - k2 - 1) % m + 1)]
        return Corridor(triangles=comp, end_diagonals=[ends[0], ends[1]],
                        polygon=poly, sides=[side1, side2])

    # -- hourglasses and pockets ---------------------------------------------------

    def _geodesic_in_polygon(self, poly_pts, a_idx, b_idx):
        """Geodesic between two boundary vertices of a simple polygon
        (indices into poly_pts); returns the list of polygon-vertex indices."""
        pts = poly_pts
        m = len(pts)
        import heapq
        edges = [(pts[i], pts[(i + 1) % m]) for i in range(m)]
        import numpy as np
        earr = np.array([[p[0], p[1], q[0], q[1]] for p, q in edges])

        def inside(i, j):
            p, q = pts[i], pts[j]
            if p == q:
                return True
            code = kernels.seg_code_scan(p[0], p[1], q[0], q[1], earr)
            if code == 1:
                return False
            mid = ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2)
            ok = _point_in_poly(mid, pts)
            if code == 0:
                return ok
            # grazing: subdivide
            ts, ei, cs = kernels.seg_hit_params(p[0], p[1], q[0], q[1], earr)
            cuts = sorted(set([0.0, 1.0] + [float(t) for t in ts]))
            for t0, t1 in zip(cuts, cuts[1:]):
                tm = 0.5 * (t0 + t1)
                mm = (p[0] + tm * (q[0] - p[0]), p[1] + tm * (q[1] - p[1]))
                if not _point_in_poly(mm, pts, tol=1e-9 * self.dom.scale):
                    return False
            return True

        dist = [math.inf] * m
        par = [-1] * m
        dist[a_idx] = 0.0
        h = [(0.0, a_idx)]
        while h:
            d, v = heapq.heappop(h)
            if d > dist[v] + 1e-15:
                continue
            if v == b_idx:
                break
            for u in range(m):
                if dist[u] <= d:
                    continue
                if not inside(v, u):
                    continue
                nd = d + geom.dist(pts[v], pts[u])
                if nd < dist[u] - 1e-15:
                    dist[u] = nd
                    par[u] = v
                    heapq.heappush(h, (nd, u))
        out = []
        v = b_idx
        while v >= 0:
            out.append(v)
            v = par[v]
        return out[::-1]

    def _build_pockets(self):
        tri = self.tri
        pts = tri.points
        dom = self.dom
        ring_pairs = {(min(a, b), max(a, b)) for a, b in dom.edge_verts}
        self.bays = []
        self.canals = []
        self.ocean_sides = []     # convex chains (vertex id lists) on dM
        for cor in self.corridors:
            poly_ids = cor.polygon
            poly_pts = [pts[i] for i in poly_ids]
            chains = []           # geodesic side chains as position lists
            for side in cor.sides:
                if not side:
                    chains.append([])
                    continue
                gp = self._geodesic_in_polygon(poly_pts, side[0], side[-1])
                chains.append(gp)
            gA, gB = chains
            idsA = [poly_ids[k] for k in gA]
            idsB = [poly_ids[k] for k in gB]
            shared = [v for v in idsA if v in idsB]
            if not shared:
                cor.hourglass = {"open": True, "sides": [idsA, idsB]}
                self._pockets_from_chain(cor, gA, ring_pairs)
                self._pockets_from_chain(cor, gB, ring_pairs)
                self.ocean_sides.append(idsA)
                self.ocean_sides.append(idsB)
            else:
                ia = [k for k, v in enumerate(idsA) if v in shared]
                path_ids = idsA[ia[0]:ia[-1] + 1]
                x, y = path_ids[0], path_ids[-1]
                cor.hourglass = {"open": False, "sides": [idsA, idsB],
                                 "path": path_ids, "apices": (x, y)}
                self._closed_pockets(cor, gA, gB, path_ids, ring_pairs)
                for f in (idsA[:ia[0] + 1], idsA[ia[-1]:],
                          idsB[:idsB.index(x) + 1] if x in idsB else [],
                          idsB[idsB.index(y):] if y in idsB else []):
                    if f:
                        self.ocean_sides.append(f)

    def _pockets_from_chain(self, cor, chain_pos, ring_pairs):
        pts = self.tri.points
        poly = cor.polygon
        for kp, kq in zip(chain_pos, chain_pos[1:]):
            u, v = poly[kp], poly[kq]
            key = (min(u, v), max(u, v))
            if key in ring_pairs or self.s_id in (u, v):
                continue
            if u == v or pts[u] == pts[v]:
                continue  # pinch: zero-width gate, no pocket visibility
            piece = self._pocket_piece(cor, kp, kq)
            if piece is None:
                continue
            self.bays.append(Pocket(kind="bay",
                                    polygon=[pts[poly[k]] for k in piece],
                                    gates=[(pts[u], pts[v])],
                                    gate_vids=[(u, v)]))

    def _closed_pockets(self, cor, gA, gB, path_ids, ring_pairs):
        pts = self.tri.points
        poly = cor.polygon
        x, y = path_ids[0], path_ids[-1]
        side_sets = [set(poly[k] for k in s) for s in cor.sides]
        canal_gates = []
        for chain in (gA, gB):
            for kp, kq in zip(chain, chain[1:]):
                u, v = poly[kp], poly[kq]
                key = (min(u, v), max(u, v))
                if key in ring_pairs or self.s_id in (u, v):
                    continue
                if u == v or pts[u] == pts[v]:
                    continue
                if u in path_ids and v in path_ids:
                    continue
                same_side = any(u in ss and v in ss for ss in side_sets)
                if not same_side:
                    # endpoints on opposite corridor sides: a canal gate,
                    # incident to a funnel apex
                    canal_gates.append((kp, kq))
                else:
                    piece = self._pocket_piece(cor, kp, kq)
                    if piece is not None:
                        self.bays.append(Pocket(
                            kind="bay",
                            polygon=[pts[poly[k]] for k in piece],
                            gates=[(pts[u], pts[v])],
                            gate_vids=[(u, v)]))
        if len(canal_gates) != 2:
            for (kp, kq) in canal_gates:
                piece = self._pocket_piece(cor, kp, kq)
                if piece is not None:
                    u, v = poly[kp], poly[kq]
                    self.bays.append(Pocket(
                        kind="bay", polygon=[pts[poly[k]] for k in piece],
                        gates=[(pts[u], pts[v])], gate_vids=[(u, v)]))
            return
        (k1p, k1q), (k2p, k2q) = canal_gates
        piece = self._canal_piece(cor, canal_gates)
        if piece is None:
            return
        g1 = (poly[k1p], poly[k1q])
        g2 = (poly[k2p], poly[k2q])
        self.canals.append(Pocket(kind="canal",
                                  polygon=[pts[poly[k]] for k in piece],
                                  gates=[(pts[g1[0]], pts[g1[1]]),
                                         (pts[g2[0]], pts[g2[1]])],
                                  gate_vids=[g1, g2],
                                  apices=[pts[x], pts[y]],
                                  corridor_path=[pts[i] for i in path_ids]))

    def _pocket_piece(self, cor, kp, kq):
        """Walk positions of the pocket cut off by the chord between walk
        positions kp, kq (the side avoiding the end diagonals)."""
        poly = cor.polygon
        m = len(poly)
        dverts = set()
        for (_t, d) in cor.end_diagonals:
            dverts.update(d)
        pieces = []
        for (i, j) in ((kp, kq), (kq, kp)):
            piece = [i]
            k = i
            while k != j:
                k = (k + 1) % m
                piece.append(k)
            interior = {poly[k] for k in piece[1:-1]}
            if not (interior & dverts):
                pieces.append(piece)
        if not pieces:
            return None
        # a pocket never contains the source (it lies on the ocean boundary)
        pts = self.tri.points
        s = pts[self.s_id]
        pieces = [p for p in pieces
                  if not _point_in_poly(s, [pts[poly[k]] for k in p])]
        if not pieces:
            return None
        return min(pieces, key=len)

    def _canal_piece(self, cor, canal_gates):
        poly = cor.polygon
        m = len(poly)
        (k1p, k1q), (k2p, k2q) = canal_gates
        gate_ids = {poly[k] for k in (k1p, k1q, k2p, k2q)}
        dverts = set()
        for (_t, d) in cor.end_diagonals:
            dverts.update(d)
        best = None
        for (a, b) in ((k1p, k1q), (k1q, k1p)):
            for (c, d) in ((k2p, k2q), (k2q, k2p)):
                piece1 = [b]
                k = b
                guard = 0
                while k != c and guard <= m:
                    k = (k + 1) % m
                    piece1.append(k)
                    guard += 1
                if guard > m:
                    continue
                piece2 = [d]
                k = d
                guard = 0
                while k != a and guard <= m:
                    k = (k + 1) % m
                    piece2.append(k)
                    guard += 1
                if guard > m:
                    continue
                loop = piece1 + piece2
                if ({poly[k] for k in loop} - gate_ids) & dverts:
                    continue
                pts = self.tri.points
                if _point_in_poly(pts[self.s_id], [pts[poly[k]] for k in loop]):
                    continue
                if len({poly[k] for k in loop}) >= 3:
                    if best is None or len(loop) < len(best):
                        best = loop
        return best

    @staticmethod
    def _walk(poly, i, j):
        m = len(poly)
        out = [poly[i]]
        k = i
        while k != j:
            k = (k + 1) % m
            out.append(poly[k])
        return out

    # -- ocean membership and chains -------------------------------------------------

    def _build_chains(self):
        # convex chain membership + neighbors per vertex, for tangency tests
        self.chain_of_vertex = {}
        self.chain_neighbors = {}
        for cid, chain in enumerate(self.ocean_sides):
            for k, vid in enumerate(chain):
                self.chain_of_vertex.setdefault(vid, cid)
                prev = chain[k - 1] if k > 0 else None
                nxt = chain[k + 1] if k + 1 < len(chain) else None
                self.chain_neighbors.setdefault(vid, []).append((cid, prev, nxt))
        self._pocket_arrays = []
        for p in self.bays + self.canals:
            import numpy as np
            pts = p.polygon
            m = len(pts)
            arr = np.array([[pts[i][0], pts[i][1], pts[(i + 1) % m][0],
                             pts[(i + 1) % m][1]] for i in range(m)])
            self._pocket_arrays.append((p, arr))

    def pocket_of(self, t, tol=0.0):
        """The bay/canal strictly containing t, or None (t then lies in M)."""
        tf = (float(t[0]), float(t[1]))
        for (p, arr) in self._pocket_arrays:
            if _point_in_poly(tf, p.polygon, tol=tol):
                on_gate = False
                for (g0, g1) in p.gates:
                    if _dist_seg(g0, g1, tf) <= 1e-9 * self.dom.scale:
                        on_gate = True
                        break
                if not on_gate:
                    return p
        return None

    def in_ocean(self, t):
        return self.pocket_of(t) is None

    # -- window classification (the five categories) -----------------------------------

    def classify_window(self, q, w):
        """Category of window w for query q: ocean / inner-bay / inner-canal /
        outer-bay / outer-canal (with the defining datum)."""
        qf = (float(q[0]), float(q[1]))
        u = w.u
        pts = self.tri.points
        # ocean: u on a convex chain of dM with the window outer-tangent there
        for (cid, prev, nxt) in self.chain_neighbors.get(w.u_vid, ()):
            signs = []
            for nb in (prev, nxt):
                if nb is None:
                    continue
                signs.append(geom.orient(qf, u, pts[nb]))
            if signs and (all(s >= 0 for s in signs) or all(s <= 0 for s in signs)):
                return ("ocean", cid)
        if not self._qu_meets_ocean(qf, u):
            pocket = self.pocket_of(qf) or self.pocket_of(
                (0.5 * (qf[0] + u[0]), 0.5 * (qf[1] + u[1])),
                tol=1e-9 * self.dom.scale)
            if pocket is not None:
                return ("outer-bay" if pocket.kind == "bay" else "outer-canal",
                        pocket)
        # inner: the window lies in the pocket entered just past u
        d = (w.far[0] - u[0], w.far[1] - u[1])
        ln = math.hypot(d[0], d[1])
        for eps in (1e-7, 1e-5, 1e-3):
            if ln == 0:
                break
            probe = (u[0] + eps * self.dom.scale * d[0] / ln,
                     u[1] + eps * self.dom.scale * d[1] / ln)
            pocket = self.pocket_of(probe)
            if pocket is not None:
                return ("inner-bay" if pocket.kind == "bay" else "inner-canal",
                        pocket)
        mid = (0.5 * (u[0] + w.far[0]), 0.5 * (u[1] + w.far[1]))
        pocket = self.pocket_of(mid) or self.pocket_of(mid, tol=1e-9 * self.dom.scale)
        if pocket is not None:
            return ("inner-bay" if pocket.kind == "bay" else "inner-canal", pocket)
        # unresolved: keep as an (uncapped) ocean window, never drop
        return ("ocean", -1)

    def _qu_meets_ocean(self, qf, u):
        """Open segment qu minus {u} intersects the ocean."""
        if self.in_ocean(qf):
            return True
        pocket = self.pocket_of(qf)
        if pocket is None:
            return True
        # q is in a pocket: qu meets M iff it crosses a gate of that pocket
        for (g0, g1) in pocket.gates:
            hit = _seg_hit(qf, u, g0, g1)
            if hit is not None and geom.dist(hit, u) > 1e-9 * self.dom.scale:
                return True
        return False

    # -- candidate window set S(q) --------------------------------------------------

    def candidate_windows(self, q, windows, root_idx):
        """Filter the window set to S(q) plus the root window; returns
        (kept_windows, new_root_idx, audit_counts)."""
        qf = (float(q[0]), float(q[1]))
        keep = []
        counts = {"ocean": {}, "inner-canal": {}, "outer-bay": 0,
                  "outer-canal": 0, "inner-bay-dropped": 0}
        q_pocket = self.pocket_of(qf)
        allowed_outer = {}
        if q_pocket is not None:
            us = []
            for (g0, g1) in q_pocket.gates:
                us.extend(self._gate_anchor_vertices(q_pocket, qf, g0, g1))
            allowed_outer = {tuple(u) for u in us}
        for k, w in enumerate(windows):
            cat, datum = self.classify_window(q, w)
            is_root = k == root_idx
            if cat == "ocean":
                keep.append((k, w, cat))
                counts["ocean"][datum] = counts["ocean"].get(datum, 0) + 1
            elif cat == "inner-bay":
                counts["inner-bay-dropped"] += 1
                if is_root:
                    keep.append((k, w, cat))
            elif cat == "inner-canal":
                apices = datum.apices
                near = any(geom.dist(w.u, ap) <= 1e-9 * self.dom.scale
                           for ap in apices)
                if near or is_root:
                    keep.append((k, w, cat))
                    if near:
                        key = id(datum)
                        counts["inner-canal"][key] = counts["inner-canal"].get(key, 0) + 1
            else:  # outer-bay / outer-canal
                ok = tuple(w.u) in allowed_outer
                if ok or is_root:
                    keep.append((k, w, cat))
                    if ok:
                        counts[cat] += 1
        new_windows = [w for (_k, w, _c) in keep]
        new_root = next((i for i, (k, w, c) in enumerate(keep) if k == root_idx), -1)
        if new_root < 0 and root_idx >= 0:
            new_windows.append(windows[root_idx])
            new_root = len(new_windows) - 1
        return new_windows, new_root, counts

    def _gate_anchor_vertices(self, pocket, qf, g0, g1):
        """u1, u2: first vertices on the in-pocket geodesics from q to the
        gate endpoints."""
        pts = [qf] + list(pocket.polygon)
        m0 = len(pts)
        out = []
        for target in (g0, g1):
            try:
                t_idx = next(i for i, p in enumerate(pts)
                             if geom.dist(p, target) <= 1e-9 * self.dom.scale)
            except StopIteration:
                continue
            path = _geodesic_pts(pts, 0, t_idx, self.dom.scale)
            if len(path) >= 2:
                out.append(pts[path[1]])
        return out


def _point_in_poly(p, poly, tol=0.0):
    x, y = float(p[0]), float(p[1])
    m = len(poly)
    if tol > 0:
        for i in range(m):
            if _dist_seg(poly[i], poly[(i + 1) % m], (x, y)) <= tol:
                return True
    inside = False
    for i in range(m):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % m]
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xi > x:
                inside = not inside
    return inside


def _dist_seg(a, b, p):
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    px, py = float(p[0]), float(p[1])
    dx, dy = bx - ax, by - ay
    dd = dx * dx + dy * dy
    t = 0.0 if dd == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / dd))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _seg_hit(a, b, c, d):
    from .spindex import _seg_intersect_pt
    return _seg_intersect_pt(a, b, c, d)


def _geodesic_pts(pts, a_idx, b_idx, scale):
    """Geodesic between two points of a point-augmented simple polygon
    (index 0 is interior; the rest form the ring)."""
    import heapq
    import numpy as np
    ring = pts[1:]
    m = len(ring)
    earr = np.array([[ring[i][0], ring[i][1], ring[(i + 1) % m][0],
                      ring[(i + 1) % m][1]] for i in range(m)])

    def inside(i, j):
        p, q = pts[i], pts[j]
        if p == q:
            return True
        code = kernels.seg_code_scan(p[0], p[1], q[0], q[1], earr)
        if code == 1:
            return False
        cuts = [0.0, 1.0]
        if code == 2:
            ts, ei, cs = kernels.seg_hit_params(p[0], p[1], q[0], q[1], earr)
            cuts = sorted(set(cuts + [float(t) for t in ts]))
        for t0, t1 in zip(cuts, cuts[1:]):
            tm = 0.5 * (t0 + t1)
            mm = (p[0] + tm * (q[0] - p[0]), p[1] + tm * (q[1] - p[1]))
            if not _point_in_poly(mm, ring, tol=1e-9 * scale):
                return False
        return True

    n = len(pts)
    dist = [math.inf] * n
    par = [-1] * n
    dist[a_idx] = 0.0
    h = [(0.0, a_idx)]
    while h:
        d, v = heapq.heappop(h)
        if d > dist[v] + 1e-15:
            continue
        if v == b_idx:
            break
        for u in range(n):
            if dist[u] <= d or not inside(v, u):
                continue
            nd = d + geom.dist(pts[v], pts[u])
            if nd < dist[u] - 1e-15:
                dist[u] = nd
                par[u] = v
                heapq.heappush(h, (nd, u))
    out = []
    v = b_idx
    while v >= 0:
        out.append(v)
        v = par[v]
    return out[::-1]


def build_corridor_structure(engine):
    cs = CorridorStructure(engine)
    engine.corridor = cs
    return cs


def quickest_visibility_query_fast(engine, q, audit=None):
    """Theorem-3 style query: the same pruning pipeline on S(q)."""
    from .qvq import compute_windows
    if engine.corridor is None:
        build_corridor_structure(engine)
    dom = engine.dom
    if not dom.contains(q):
        from .errors import OutsideDomain
        raise OutsideDomain(f"query {tuple(map(float, q))} outside free space")
    val, root = engine.spm.dmin(q)
    if root == 0:
        from .qvq import QvqAnswer
        return QvqAnswer(point=dom.sxy, length=0.0, path=[dom.sxy],
                         provenance="s-visible", stats={"k": 0})
    windows, root_idx, u0_site = compute_windows(engine, q)
    kept, new_root, counts = engine.corridor.candidate_windows(q, windows, root_idx)
    ans = engine.quickest_visibility_query(
        q, windows_override=(kept, new_root, u0_site), audit=audit,
        provenance_tag="+fast")
    ans.stats["candidates"] = len(kept)
    ans.stats["caps"] = counts
    return ans
