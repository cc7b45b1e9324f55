"""Polygonal-domain model: validation, file I/O, visibility, triangulation.

Domain file format (UTF-8 JSON):
    {"outer": [[x,y],...], "holes": [[[x,y],...],...], "source": [x,y]}
Coordinates may be numbers, decimal strings, or "p/q" strings; all are parsed
exactly into rationals. The writer emits the shortest exact decimal when the
denominator is 10-smooth, else "p/q".
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from . import geom, kernels
from .errors import ParseError, ValidationError


def _parse_coord(v, where):
    try:
        if isinstance(v, str):
            if "/" in v:
                return Fraction(v)
            return Fraction(v)
        if isinstance(v, (int, Fraction)):
            return Fraction(v)
        if isinstance(v, float):
            return Fraction(v)
    except (ValueError, ZeroDivisionError):
        pass
    raise ParseError(f"bad coordinate {v!r} in {where}")


def _coord_str(c):
    c = Fraction(c)
    den = c.denominator
    while den % 2 == 0:
        den //= 2
    while den % 5 == 0:
        den //= 5
    if den != 1:
        return f"{c.numerator}/{c.denominator}"
    if c.denominator == 1:
        return str(c.numerator)
    s = repr(float(c))
    if Fraction(s) == c:
        return s
    # exact decimal expansion for a 10-smooth denominator
    sign = "-" if c < 0 else ""
    c = abs(c)
    exp = 0
    d = c.denominator
    while d > 1:
        d //= 2 if d % 2 == 0 else 5
        exp += 1
    digits = str((c * 10 ** exp).numerator).rjust(exp + 1, "0")
    return sign + f"{digits[:-exp]}.{digits[-exp:]}"


def _ring_area2(ring):
    s = Fraction(0)
    for i, a in enumerate(ring):
        b = ring[(i + 1) % len(ring)]
        s += Fraction(a[0]) * Fraction(b[1]) - Fraction(a[1]) * Fraction(b[0])
    return s


def _ring_simple(ring):
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        if (Fraction(a[0]), Fraction(a[1])) == (Fraction(b[0]), Fraction(b[1])):
            return False, i
        for j in range(i + 1, n):
            c, d = ring[j], ring[(j + 1) % n]
            kind, data = geom.segment_intersect(a, b, c, d)
            if kind == "none":
                continue
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            if kind == "point" and adjacent:
                continue
            return False, j
    return True, -1


class PolygonalDomain:
    """Outer ring (ccw) + hole rings (cw) + source point, with float mirrors."""

    def __init__(self, outer, holes, source, normalize=True):
        outer = [(Fraction(x), Fraction(y)) for x, y in outer]
        holes = [[(Fraction(x), Fraction(y)) for x, y in h] for h in holes]
        if normalize:
            if _ring_area2(outer) < 0:
                outer = outer[::-1]
            holes = [h[::-1] if _ring_area2(h) > 0 else h for h in holes]
        self.outer = outer
        self.holes = holes
        self.source = (Fraction(source[0]), Fraction(source[1]))
        self.rings = [outer] + holes
        self._build_arrays()

    def _build_arrays(self):
        verts = []
        self.ring_vertex_ids = []
        for ring in self.rings:
            ids = []
            for p in ring:
                ids.append(len(verts))
                verts.append(p)
            self.ring_vertex_ids.append(ids)
        self.vertices = verts
        self.n = len(verts)
        self.h = len(self.holes) + 1
        self.vxy = np.array([[float(x), float(y)] for x, y in verts], dtype=np.float64)
        edges = []
        ring_of = []
        self.edge_verts = []  # (vid_a, vid_b) per edge, walk order
        for r, ids in enumerate(self.ring_vertex_ids):
            for k, va in enumerate(ids):
                vb = ids[(k + 1) % len(ids)]
                ax, ay = self.vxy[va]
                bx, by = self.vxy[vb]
                edges.append((ax, ay, bx, by))
                ring_of.append(r)
                self.edge_verts.append((va, vb))
        self.edges = np.array(edges, dtype=np.float64)
        self.ring_of = np.array(ring_of, dtype=np.int64)
        self.nrings = len(self.rings)
        self.sxy = (float(self.source[0]), float(self.source[1]))
        xs = self.vxy[:, 0]
        ys = self.vxy[:, 1]
        self.bbox = (xs.min(), ys.min(), xs.max(), ys.max())
        self.scale = max(self.bbox[2] - self.bbox[0], self.bbox[3] - self.bbox[1], 1.0)
        # vertex neighbors along rings and free-space reflex flags
        self.vprev = np.zeros(self.n, dtype=np.int64)
        self.vnext = np.zeros(self.n, dtype=np.int64)
        for ids in self.ring_vertex_ids:
            m = len(ids)
            for k, v in enumerate(ids):
                self.vprev[v] = ids[(k - 1) % m]
                self.vnext[v] = ids[(k + 1) % m]
        self.reflex = np.zeros(self.n, dtype=bool)
        for v in range(self.n):
            a = self.vertices[self.vprev[v]]
            b = self.vertices[v]
            c = self.vertices[self.vnext[v]]
            self.reflex[v] = geom.orient(a, b, c) < 0
        self.vertex_edge_out = {}  # vid -> edge index of edge (v, next)
        self.vertex_edge_in = {}
        for e, (va, vb) in enumerate(self.edge_verts):
            self.vertex_edge_out[va] = e
            self.vertex_edge_in[vb] = e

    # -- queries ------------------------------------------------------------

    def contains(self, p, closed=True):
        """Point in free space (closed by default)."""
        code = kernels.point_free_code(float(p[0]), float(p[1]), self.edges,
                                       self.ring_of, self.nrings)
        if code == 0:
            return True
        if code == 1:
            return False
        side = self._point_side_exact(p)
        return side in ("in", "on") if closed else side == "in"

    def strictly_inside(self, p):
        code = kernels.point_free_code(float(p[0]), float(p[1]), self.edges,
                                       self.ring_of, self.nrings)
        if code == 0:
            return True
        if code == 1:
            return False
        return self._point_side_exact(p) == "in"

    def _point_side_exact(self, p):
        """'in' | 'on' | 'out' against the closed free space, exact."""
        on = False
        for r, ring in enumerate(self.rings):
            res = _point_in_ring_exact(p, ring)
            if res == "on":
                on = True
                continue
            inside = res == "in"
            if r == 0 and not inside:
                return "out"
            if r > 0 and inside:
                return "out"
        return "on" if on else "in"

    def nearest_boundary(self, p):
        """(distance, edge_id, point) of the closest boundary point."""
        x, y = float(p[0]), float(p[1])
        best = (np.inf, -1, (x, y))
        for e in range(len(self.edges)):
            x1, y1, x2, y2 = self.edges[e]
            dx, dy = x2 - x1, y2 - y1
            dd = dx * dx + dy * dy
            t = 0.0 if dd == 0 else max(0.0, min(1.0, ((x - x1) * dx + (y - y1) * dy) / dd))
            px, py = x1 + t * dx, y1 + t * dy
            d = ((x - px) ** 2 + (y - py) ** 2) ** 0.5
            if d < best[0]:
                best = (d, e, (px, py))
        return best

    def snap_inside(self, p, max_off=None):
        """p if inside; else the nearest boundary point nudged into the free
        space (boundary-hugging floats land a few ulps outside). None when p
        is genuinely outside."""
        if self.contains(p):
            return (float(p[0]), float(p[1]))
        max_off = max_off if max_off is not None else 1e-6 * self.scale
        d, e, bp = self.nearest_boundary(p)
        if d > max_off:
            return None
        x1, y1, x2, y2 = self.edges[e]
        ln = ((x2 - x1) ** 2 + (y2 - y1) ** 2) ** 0.5
        nx, ny = -(y2 - y1) / ln, (x2 - x1) / ln   # free space on the left
        for eps in (1e-12, 1e-11, 1e-10, 1e-9):
            cand = (bp[0] + eps * self.scale * nx, bp[1] + eps * self.scale * ny)
            if self.strictly_inside(cand):
                return cand
        return bp if self.contains(bp) else None

    def visible(self, p, q):
        """True iff closed segment pq lies in the closed free space."""
        code = kernels.visible_code(float(p[0]), float(p[1]), float(q[0]), float(q[1]),
                                    self.edges, self.ring_of, self.nrings)
        if code == 0:
            return True
        if code == 1:
            return False
        return self._visible_exact(p, q)

    def _visible_exact(self, p, q):
        pE = (Fraction(p[0]), Fraction(p[1]))
        qE = (Fraction(q[0]), Fraction(q[1]))
        if pE == qE:
            return self._point_side_exact(pE) != "out"
        cuts = {Fraction(0), Fraction(1)}
        for ring in self.rings:
            for i, a in enumerate(ring):
                b = ring[(i + 1) % len(ring)]
                kind, data = geom.segment_intersect(pE, qE, a, b)
                if kind == "point":
                    cuts.add(_exact_param(pE, qE, data))
                elif kind == "overlap":
                    cuts.add(_exact_param(pE, qE, data[0]))
                    cuts.add(_exact_param(pE, qE, data[1]))
        ts = sorted(t for t in cuts if 0 <= t <= 1)
        for t0, t1 in zip(ts, ts[1:]):
            tm = (t0 + t1) / 2
            mid = (pE[0] + tm * (qE[0] - pE[0]), pE[1] + tm * (qE[1] - pE[1]))
            if self._point_side_exact(mid) == "out":
                return False
        return self._point_side_exact(pE) != "out" and self._point_side_exact(qE) != "out"

    def visibility_graph(self, extras=()):
        """Adjacency over vertices + source + extras; O(n^2) pair tests."""
        pts = [tuple(v) for v in self.vertices] + [self.source] + [tuple(e) for e in extras]
        n = len(pts)
        adj = np.zeros((n, n), dtype=bool)
        for i in range(n):
            for j in range(i + 1, n):
                if self.visible(pts[i], pts[j]):
                    adj[i, j] = adj[j, i] = True
        return pts, adj

    # -- I/O ------------------------------------------------------------------

    def to_json(self):
        return {
            "outer": [[_coord_str(x), _coord_str(y)] for x, y in self.outer],
            "holes": [[[_coord_str(x), _coord_str(y)] for x, y in h] for h in self.holes],
            "source": [_coord_str(self.source[0]), _coord_str(self.source[1])],
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, indent=1)
            f.write("\n")


def _exact_param(a, b, p):
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    if abs(dx) >= abs(dy):
        return (Fraction(p[0]) - a[0]) / dx
    return (Fraction(p[1]) - a[1]) / dy


def _point_in_ring_exact(p, ring):
    px, py = Fraction(p[0]), Fraction(p[1])
    inside = False
    n = len(ring)
    for i in range(n):
        ax, ay = ring[i]
        bx, by = ring[(i + 1) % n]
        if geom.on_segment((px, py), (ax, ay), (bx, by)):
            return "on"
        if (ay > py) != (by > py):
            # half-open rule; vertex-at-height cases resolve consistently
            xint = ax + (py - ay) * (bx - ax) / (by - ay)
            if xint > px:
                inside = not inside
    return "in" if inside else "out"


def load_domain(text):
    """Parse + validate a domain file; returns PolygonalDomain."""
    try:
        raw = json.loads(text, parse_float=Fraction, parse_int=Fraction)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(raw, dict) or "outer" not in raw or "source" not in raw:
        raise ParseError("domain file must be an object with 'outer' and 'source'")
    outer = [_pair(p, f"outer[{i}]") for i, p in enumerate(raw["outer"])]
    holes = [[_pair(p, f"holes[{j}][{i}]") for i, p in enumerate(h)]
             for j, h in enumerate(raw.get("holes", []))]
    source = _pair(raw["source"], "source")
    return validate_domain(outer, holes, source)


def _pair(p, where):
    if not isinstance(p, (list, tuple)) or len(p) != 2:
        raise ParseError(f"expected [x, y] at {where}")
    return (_parse_coord(p[0], where), _parse_coord(p[1], where))


def validate_domain(outer, holes, source):
    if len(outer) < 3:
        raise ValidationError("outer ring needs >= 3 vertices")
    for j, h in enumerate(holes):
        if len(h) < 3:
            raise ValidationError(f"hole {j} needs >= 3 vertices")
    ok, where = _ring_simple(outer)
    if not ok:
        raise ValidationError(f"outer ring self-intersects near vertex {where}")
    for j, h in enumerate(holes):
        ok, where = _ring_simple(h)
        if not ok:
            raise ValidationError(f"hole {j} self-intersects near vertex {where}")
    dom = PolygonalDomain(outer, holes, source)
    # holes strictly inside outer, pairwise disjoint
    for j, h in enumerate(dom.holes):
        for v in h:
            if _point_in_ring_exact(v, dom.outer) != "in":
                raise ValidationError(f"hole {j} vertex {v} not strictly inside outer ring")
        for i, a in enumerate(h):
            b = h[(i + 1) % len(h)]
            for k, c in enumerate(dom.outer):
                d = dom.outer[(k + 1) % len(dom.outer)]
                if geom.segment_intersect(a, b, c, d)[0] != "none":
                    raise ValidationError(f"hole {j} touches outer ring near vertex {i}")
    for j1 in range(len(dom.holes)):
        for j2 in range(j1 + 1, len(dom.holes)):
            h1, h2 = dom.holes[j1], dom.holes[j2]
            for i, a in enumerate(h1):
                b = h1[(i + 1) % len(h1)]
                for k, c in enumerate(h2):
                    d = h2[(k + 1) % len(h2)]
                    if geom.segment_intersect(a, b, c, d)[0] != "none":
                        raise ValidationError(f"holes {j1} and {j2} intersect")
            if _point_in_ring_exact(h2[0], h1) == "in" or _point_in_ring_exact(h1[0], h2) == "in":
                raise ValidationError(f"holes {j1} and {j2} are nested")
    side = dom._point_side_exact(dom.source)
    if side == "out":
        raise ValidationError(f"source {tuple(map(float, dom.source))} outside free space")
    if side == "on":
        raise ValidationError("source on the domain boundary is not supported")
    return dom


def save_domain(dom, path):
    dom.save(path)


# ---------------------------------------------------------------------------
# Triangulation (ear clipping with hole bridging; optional interior points)


class Triangulation:
    def __init__(self, points, triangles, n_ring_vertices, dom):
        self.points = points            # float coords, index space includes steiner pts
        self.triangles = triangles      # list of (i, j, k) ccw
        self.n_ring_vertices = n_ring_vertices
        self.dom = dom
        self.diagonals = {}
        edge_count = {}
        for t, (a, b, c) in enumerate(triangles):
            for u, v in ((a, b), (b, c), (c, a)):
                key = (min(u, v), max(u, v))
                edge_count.setdefault(key, []).append(t)
        self.edge_tris = edge_count
        self.boundary_edges = set()
        ring_edges = set()
        for va, vb in dom.edge_verts:
            ring_edges.add((min(va, vb), max(va, vb)))
        for key, tris in edge_count.items():
            if key in ring_edges:
                self.boundary_edges.add(key)
            else:
                self.diagonals[key] = tris

    def dual_adjacency(self):
        adj = {t: [] for t in range(len(self.triangles))}
        for key, tris in self.diagonals.items():
            if len(tris) == 2:
                a, b = tris
                adj[a].append((b, key))
                adj[b].append((a, key))
        return adj


def _ear_clip(ring_pts, ring_ids):
    """Ear clipping of a ccw simple (possibly bridge-doubled) ring."""
    idx = list(range(len(ring_pts)))
    tris = []
    guard = 0
    while len(idx) > 3 and guard < 4 * len(ring_pts) ** 2:
        guard += 1
        n = len(idx)
        clipped = False
        for k in range(n):
            i0, i1, i2 = idx[(k - 1) % n], idx[k], idx[(k + 1) % n]
            a, b, c = ring_pts[i0], ring_pts[i1], ring_pts[i2]
            if a == c:
                # spike from a doubled bridge: drop tip and one duplicate
                del idx[k]
                n2 = len(idx)
                k2 = idx.index(i2)
                if ring_pts[idx[(k2 - 1) % n2]] == ring_pts[idx[k2]]:
                    del idx[k2]
                clipped = True
                break
            o = geom.orient(a, b, c)
            if o <= 0:
                # collinear vertices stay; neighbors change as ears clip
                continue
            ok = True
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                p = ring_pts[j]
                if p in (a, b, c):
                    continue
                if (geom.orient(a, b, p) >= 0 and geom.orient(b, c, p) >= 0
                        and geom.orient(c, a, p) >= 0):
                    ok = False
                    break
            if not ok:
                continue
            tris.append((ring_ids[i0], ring_ids[i1], ring_ids[i2]))
            del idx[k]
            clipped = True
            break
        if not clipped:
            raise ValidationError("ear clipping stalled (degenerate ring)")
    if len(idx) == 3:
        a, b, c = (ring_pts[i] for i in idx)
        if geom.orient(a, b, c) > 0:
            tris.append(tuple(ring_ids[i] for i in idx))
    return tris


def triangulate(dom, include_source=False):
    """Triangulate the free space; optionally force the source as a vertex."""
    outer_ids = list(dom.ring_vertex_ids[0])
    merged_pts = [tuple(dom.vertices[i]) for i in outer_ids]
    merged_ids = list(outer_ids)
    remaining = sorted(range(len(dom.holes)),
                       key=lambda j: max(Fraction(x) for x, y in dom.holes[j]),
                       reverse=True)
    for j in remaining:
        ids = dom.ring_vertex_ids[j + 1]
        pts = [tuple(dom.vertices[i]) for i in ids]
        bridge = _find_bridge(dom, merged_pts, merged_ids, pts, ids)
        if bridge is None:
            raise ValidationError(f"cannot bridge hole {j} for triangulation")
        mi, hi = bridge
        # splice: ...,M, H, hole walk, H, M, ...
        hole_cycle_ids = ids[hi:] + ids[:hi]
        hole_cycle_pts = pts[hi:] + pts[:hi]
        merged_pts = (merged_pts[:mi + 1] + hole_cycle_pts + [hole_cycle_pts[0]]
                      + merged_pts[mi:])
        merged_ids = (merged_ids[:mi + 1] + hole_cycle_ids + [hole_cycle_ids[0]]
                      + merged_ids[mi:])
    tris = _ear_clip(merged_pts, merged_ids)
    points = [tuple(map(float, v)) for v in dom.vertices]
    n_ring = len(points)
    if include_source:
        s_id = len(points)
        points.append(dom.sxy)
        tris = _insert_point(dom, tris, dom.source, s_id)
    tri = Triangulation(points, tris, n_ring, dom)
    expected = dom.n + 2 * (dom.h - 1) - 2 + (2 if include_source else 0)
    if len(tris) != expected:
        raise ValidationError(f"triangulation count {len(tris)} != expected {expected}")
    return tri


def _find_bridge(dom, merged_pts, merged_ids, hole_pts, hole_ids):
    cand = []
    for hi, hp in enumerate(hole_pts):
        for mi, mp in enumerate(merged_pts):
            if hp == mp:
                continue
            cand.append((geom.dist(hp, mp), mi, hi))
    cand.sort()
    for _, mi, hi in cand:
        a = merged_pts[mi]
        b = hole_pts[hi]
        if _clear_bridge(dom, a, b):
            return mi, hi
    return None


def _clear_bridge(dom, a, b):
    """Open segment ab must avoid all ring edges except at its endpoints."""
    aE = (Fraction(a[0]), Fraction(a[1]))
    bE = (Fraction(b[0]), Fraction(b[1]))
    for ring in dom.rings:
        for i, c in enumerate(ring):
            d = ring[(i + 1) % len(ring)]
            kind, data = geom.segment_intersect(aE, bE, c, d)
            if kind == "none":
                continue
            if kind == "overlap":
                return False
            if data != aE and data != bE:
                return False
    mid = ((aE[0] + bE[0]) / 2, (aE[1] + bE[1]) / 2)
    return dom._point_side_exact(mid) == "in"


def _insert_point(dom, tris, p, p_id):
    pE = (Fraction(p[0]), Fraction(p[1]))
    for t, (a, b, c) in enumerate(tris):
        pa, pb, pc = dom.vertices[a], dom.vertices[b], dom.vertices[c]
        oa = geom.orient(pa, pb, pE)
        ob = geom.orient(pb, pc, pE)
        oc = geom.orient(pc, pa, pE)
        if oa > 0 and ob > 0 and oc > 0:
            out = tris[:t] + tris[t + 1:]
            out += [(a, b, p_id), (b, c, p_id), (c, a, p_id)]
            return out
        if oa >= 0 and ob >= 0 and oc >= 0:
            # on an edge: split the two incident triangles
            zero_edge = (a, b) if oa == 0 else ((b, c) if ob == 0 else (c, a))
            return _split_on_edge(tris, zero_edge, p_id)
    raise ValidationError("source not inside any triangle")


def _split_on_edge(tris, edge, p_id):
    u, v = edge
    out = []
    for (a, b, c) in tris:
        tri_edges = ((a, b, c), (b, c, a), (c, a, b))
        hit = None
        for (x, y, z) in tri_edges:
            if {x, y} == {u, v}:
                hit = (x, y, z)
                break
        if hit is None:
            out.append((a, b, c))
        else:
            x, y, z = hit
            out.append((x, p_id, z))
            out.append((p_id, y, z))
    return out
