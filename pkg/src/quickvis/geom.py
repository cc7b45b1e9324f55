"""Robust low-level geometry.

Coordinates are 2-tuples of int/Fraction/float. Predicates run a float filter
first (kernels.orient_filtered) and fall back to exact rational arithmetic;
floats lift to Fraction exactly, so the fallback is deterministic for any
input. Hyperbolic additively-weighted bisector arcs are float-only with the
tolerance EPS_BIS (env QUICKVIS_EPS).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import NoHit


def _env_eps():
    v = os.environ.get("QUICKVIS_EPS", "").strip()
    if v:
        try:
            return float(v)
        except ValueError:
            pass
    return 1e-9


EPS_BIS = _env_eps()


def fr(v):
    """Exact rational lift (floats convert exactly)."""
    if isinstance(v, Fraction):
        return v
    return Fraction(v)


def orient_exact(p, q, r):
    d = (fr(q[0]) - fr(p[0])) * (fr(r[1]) - fr(p[1])) - (fr(q[1]) - fr(p[1])) * (fr(r[0]) - fr(p[0]))
    return (d > 0) - (d < 0)


def orient(p, q, r):
    """Sign of the signed area of (p,q,r); exact for rational inputs."""
    s = kernels.orient_filtered(float(p[0]), float(p[1]), float(q[0]), float(q[1]),
                                float(r[0]), float(r[1]))
    if s != 0:
        return s
    return orient_exact(p, q, r)


def on_segment(p, a, b):
    """Exact: p lies on closed segment ab."""
    if orient_exact(a, b, p) != 0:
        return False
    px, py = fr(p[0]), fr(p[1])
    return (min(fr(a[0]), fr(b[0])) <= px <= max(fr(a[0]), fr(b[0]))
            and min(fr(a[1]), fr(b[1])) <= py <= max(fr(a[1]), fr(b[1])))


def segment_intersect(a, b, c, d):
    """Exact classification of segment ab vs segment cd.

    Returns ('none', None) | ('point', (x, y)) | ('overlap', ((x1,y1),(x2,y2)))
    with Fraction coordinates.
    """
    o1 = orient(a, b, c)
    o2 = orient(a, b, d)
    o3 = orient(c, d, a)
    o4 = orient(c, d, b)
    if o1 == 0 and o2 == 0 and o3 == 0 and o4 == 0:
        # collinear: 1-D interval overlap along the dominant axis
        ax, ay = fr(a[0]), fr(a[1])
        bx, by = fr(b[0]), fr(b[1])
        use_x = abs(bx - ax) >= abs(by - ay)
        if use_x and ax == bx:
            # both segments degenerate points
            if (ax, ay) == (fr(c[0]), fr(c[1])):
                return ("point", (ax, ay))
            return ("none", None)

        def key(p):
            return fr(p[0]) if use_x else fr(p[1])

        lo1, hi1 = sorted((a, b), key=key)
        lo2, hi2 = sorted((c, d), key=key)
        lo = max(lo1, lo2, key=key)
        hi = min(hi1, hi2, key=key)
        if key(lo) > key(hi):
            return ("none", None)
        plo = (fr(lo[0]), fr(lo[1]))
        phi = (fr(hi[0]), fr(hi[1]))
        if plo == phi:
            return ("point", plo)
        return ("overlap", (plo, phi))
    if o1 * o2 > 0 or o3 * o4 > 0:
        return ("none", None)
    # single-point intersection (proper or touching)
    ax, ay = fr(a[0]), fr(a[1])
    bx, by = fr(b[0]), fr(b[1])
    cx, cy = fr(c[0]), fr(c[1])
    dx, dy = fr(d[0]), fr(d[1])
    r1x, r1y = bx - ax, by - ay
    r2x, r2y = dx - cx, dy - cy
    den = r1x * r2y - r1y * r2x
    if den == 0:
        # touching at an endpoint with collinearity on one side
        for p in ((cx, cy), (dx, dy)):
            if on_segment(p, a, b):
                return ("point", p)
        for p in ((ax, ay), (bx, by)):
            if on_segment(p, c, d):
                return ("point", p)
        return ("none", None)
    t = ((cx - ax) * r2y - (cy - ay) * r2x) / den
    if not (0 <= t <= 1):
        return ("none", None)
    u = ((cx - ax) * r1y - (cy - ay) * r1x) / den
    if not (0 <= u <= 1):
        return ("none", None)
    return ("point", (ax + t * r1x, ay + t * r1y))


def seg_point_at(a, b, t):
    return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))


def dist(a, b):
    dx = float(b[0]) - float(a[0])
    dy = float(b[1]) - float(a[1])
    return math.sqrt(dx * dx + dy * dy)


def lerp_param(a, b, p):
    """Param of p along a->b using the dominant axis (floats)."""
    dx = float(b[0]) - float(a[0])
    dy = float(b[1]) - float(a[1])
    if abs(dx) >= abs(dy):
        return (float(p[0]) - float(a[0])) / dx if dx != 0 else 0.0
    return (float(p[1]) - float(a[1])) / dy


# ---------------------------------------------------------------------------
# Additively weighted bisector arcs

HYPERBOLA = "hyperbola"
LINE = "line"
RAY = "ray"


@dataclass
class BisectorArc:
    """Connected piece of {t : |t-a| + wa == |t-b| + wb}.

    kind 'hyperbola' for |wb-wa| < |ab|, 'line' for wa == wb, and 'ray' for the
    degenerate |wb-wa| == |ab| case (locus: ray from the heavier focus away
    from the lighter one; arises for shortest-path-tree parent/child pairs).
    """

    focus_a: tuple
    weight_a: float
    focus_b: tuple
    weight_b: float
    kind: str = field(default="")
    u0: float = -math.inf
    u1: float = math.inf

    def __post_init__(self):
        ax, ay = float(self.focus_a[0]), float(self.focus_a[1])
        bx, by = float(self.focus_b[0]), float(self.focus_b[1])
        self._a = (ax, ay)
        self._b = (bx, by)
        L = math.hypot(bx - ax, by - ay)
        if L == 0:
            raise ValueError("coincident foci")
        delta = float(self.weight_b) - float(self.weight_a)
        self._L = L
        self._delta = delta
        if not self.kind:
            if delta == 0.0:
                self.kind = LINE
            elif abs(delta) >= L:
                self.kind = RAY
            else:
                self.kind = HYPERBOLA
        self._mx = 0.5 * (ax + bx)
        self._my = 0.5 * (ay + by)
        self._ex = ((bx - ax) / L, (by - ay) / L)
        self._ey = (-self._ex[1], self._ex[0])
        c = 0.5 * L
        self._A = 0.5 * delta
        self._Bc = math.sqrt(max(c * c - self._A * self._A, 0.0))
        if self.kind == RAY:
            # from the far focus, away from the near one
            if delta > 0:
                o, f = self._b, self._a
            else:
                o, f = self._a, self._b
            d = ((o[0] - f[0]) / L, (o[1] - f[1]) / L)
            self._ro = o
            self._rd = d

    def point_at(self, u):
        if self.kind == RAY:
            return (self._ro[0] + u * self._rd[0], self._ro[1] + u * self._rd[1])
        if self.kind == LINE:
            return (self._mx + u * self._ey[0], self._my + u * self._ey[1])
        x = self._A * math.cosh(u)
        y = self._Bc * math.sinh(u)
        return (self._mx + x * self._ex[0] + y * self._ey[0],
                self._my + x * self._ex[1] + y * self._ey[1])

    def tangent_at(self, u):
        if self.kind == RAY:
            return self._rd
        if self.kind == LINE:
            return self._ey
        dx = self._A * math.sinh(u)
        dy = self._Bc * math.cosh(u)
        tx = dx * self._ex[0] + dy * self._ey[0]
        ty = dx * self._ex[1] + dy * self._ey[1]
        n = math.hypot(tx, ty)
        return (tx / n, ty / n)

    def param_of(self, p):
        px, py = float(p[0]), float(p[1])
        if self.kind == RAY:
            return (px - self._ro[0]) * self._rd[0] + (py - self._ro[1]) * self._rd[1]
        rx = px - self._mx
        ry = py - self._my
        y = rx * self._ey[0] + ry * self._ey[1]
        if self.kind == LINE:
            return y
        return math.asinh(y / self._Bc) if self._Bc > 0 else 0.0

    def residual(self, p):
        fa = float(self.weight_a) + dist(p, self._a)
        fb = float(self.weight_b) + dist(p, self._b)
        return fa - fb

    def value_at(self, p):
        return float(self.weight_a) + dist(p, self._a)

    def line_params(self, p, q):
        """Arc params u of intersections with the infinite line through p,q."""
        px, py = float(p[0]), float(p[1])
        qx, qy = float(q[0]), float(q[1])
        nx = -(qy - py)
        ny = qx - px
        c = nx * px + ny * py
        if self.kind == RAY:
            den = nx * self._rd[0] + ny * self._rd[1]
            if den == 0.0:
                return []
            return [(c - nx * self._ro[0] - ny * self._ro[1]) / den]
        if self.kind == LINE:
            den = nx * self._ey[0] + ny * self._ey[1]
            if den == 0.0:
                return []
            return [(c - nx * self._mx - ny * self._my) / den]
        alpha = self._A * (nx * self._ex[0] + ny * self._ex[1])
        beta = self._Bc * (nx * self._ey[0] + ny * self._ey[1])
        gamma = c - (nx * self._mx + ny * self._my)
        # alpha*cosh(u) + beta*sinh(u) = gamma, via v = e^u
        a2 = alpha + beta
        b2 = -2.0 * gamma
        c2 = alpha - beta
        out = []
        if a2 == 0.0:
            if b2 != 0.0:
                v = -c2 / b2
                if v > 0:
                    out.append(math.log(v))
            return out
        disc = b2 * b2 - 4.0 * a2 * c2
        if disc < 0:
            return out
        sq = math.sqrt(disc)
        for v in ((-b2 + sq) / (2 * a2), (-b2 - sq) / (2 * a2)):
            if v > 0:
                out.append(math.log(v))
        return out

    def seg_intersections(self, p, q, tol=1e-9):
        """[(u, t)] intersections with closed segment pq, Newton-refined."""
        out = []
        for u in self.line_params(p, q):
            if not (self.u0 - 1e-12 <= u <= self.u1 + 1e-12):
                continue
            pt = self.point_at(u)
            t = lerp_param(p, q, pt)
            t = self._refine_on_segment(p, q, t)
            if t is None or not (-tol <= t <= 1.0 + tol):
                continue
            t = min(1.0, max(0.0, t))
            pt = seg_point_at((float(p[0]), float(p[1])), (float(q[0]), float(q[1])), t)
            u2 = self.param_of(pt)
            if self.u0 - 1e-9 <= u2 <= self.u1 + 1e-9:
                out.append((u2, t))
        out.sort(key=lambda ut: ut[1])
        return out

    def _refine_on_segment(self, p, q, t):
        px, py = float(p[0]), float(p[1])
        dx = float(q[0]) - px
        dy = float(q[1]) - py
        for _ in range(3):
            x = px + t * dx
            y = py + t * dy
            g = self.residual((x, y))
            da = dist((x, y), self._a)
            db = dist((x, y), self._b)
            if da == 0 or db == 0:
                return None
            gx = (x - self._a[0]) / da - (x - self._b[0]) / db
            gy = (y - self._a[1]) / da - (y - self._b[1]) / db
            dg = gx * dx + gy * dy
            if dg == 0:
                break
            step = g / dg
            t -= step
            if abs(step) < 1e-15:
                break
        return t

    def ray_intersections(self, origin, direction):
        """[(u, t_ray)] for ray origin + t*direction, t >= 0."""
        far = (float(origin[0]) + float(direction[0]), float(origin[1]) + float(direction[1]))
        out = []
        for u in self.line_params(origin, far):
            if not (self.u0 - 1e-12 <= u <= self.u1 + 1e-12):
                continue
            pt = self.point_at(u)
            t = ((pt[0] - float(origin[0])) * float(direction[0])
                 + (pt[1] - float(origin[1])) * float(direction[1]))
            t /= float(direction[0]) ** 2 + float(direction[1]) ** 2
            if t >= -1e-12:
                out.append((u, max(t, 0.0)))
        out.sort(key=lambda ut: ut[1])
        return out

    def sample(self, k=64):
        lo = self.u0 if math.isfinite(self.u0) else -5.0
        hi = self.u1 if math.isfinite(self.u1) else 5.0
        return [self.point_at(lo + (hi - lo) * i / (k - 1)) for i in range(k)]

    def clip_points(self):
        return self.point_at(self.u0), self.point_at(self.u1)


def ray_shoot_arc_chain(arcs, origin, direction):
    """First point where the ray hits any arc of the chain, or None."""
    best = None
    best_t = math.inf
    for arc in arcs:
        for u, t in arc.ray_intersections(origin, direction):
            if t < best_t:
                best_t = t
                best = arc.point_at(u)
    return best


# ---------------------------------------------------------------------------
# Ray shooting in rings of segments and arcs


class _Grid:
    """Uniform grid over segment pieces for sublinear ray scans."""

    def __init__(self, edges, res=None):
        self.edges = edges
        m = max(len(edges), 1)
        self.res = res or max(4, int(math.sqrt(m) * 1.5))
        xs = edges[:, [0, 2]]
        ys = edges[:, [1, 3]]
        self.x0 = float(xs.min()) if len(edges) else 0.0
        self.y0 = float(ys.min()) if len(edges) else 0.0
        self.x1 = float(xs.max()) if len(edges) else 1.0
        self.y1 = float(ys.max()) if len(edges) else 1.0
        self.sx = max((self.x1 - self.x0) / self.res, 1e-300)
        self.sy = max((self.y1 - self.y0) / self.res, 1e-300)
        self.cells = {}
        for i, (ax, ay, bx, by) in enumerate(edges):
            ia0, ia1 = self._cx(min(ax, bx)), self._cx(max(ax, bx))
            ja0, ja1 = self._cy(min(ay, by)), self._cy(max(ay, by))
            for ci in range(ia0, ia1 + 1):
                for cj in range(ja0, ja1 + 1):
                    if self._seg_touches_cell(ax, ay, bx, by, ci, cj):
                        self.cells.setdefault((ci, cj), []).append(i)

    def _cx(self, x):
        return min(self.res - 1, max(0, int((x - self.x0) / self.sx)))

    def _cy(self, y):
        return min(self.res - 1, max(0, int((y - self.y0) / self.sy)))

    def _seg_touches_cell(self, ax, ay, bx, by, ci, cj):
        cx0 = self.x0 + ci * self.sx
        cy0 = self.y0 + cj * self.sy
        cx1 = cx0 + self.sx
        cy1 = cy0 + self.sy
        # conservative separating-axis test against the cell box
        if max(ax, bx) < cx0 or min(ax, bx) > cx1:
            return False
        if max(ay, by) < cy0 or min(ay, by) > cy1:
            return False
        dx = bx - ax
        dy = by - ay
        c = dx * ay - dy * ax
        vals = [dx * y - dy * x - c for x in (cx0, cx1) for y in (cy0, cy1)]
        return min(vals) <= 0 <= max(vals)

    def ray_cells(self, ox, oy, dx, dy, max_steps=None):
        """Yield grid cells along the ray (Amanatides-Woo)."""
        inv = 1e300
        ci = self._cx(ox)
        cj = self._cy(oy)
        stepi = 1 if dx > 0 else (-1 if dx < 0 else 0)
        stepj = 1 if dy > 0 else (-1 if dy < 0 else 0)
        nx = self.x0 + (ci + (dx > 0)) * self.sx
        ny = self.y0 + (cj + (dy > 0)) * self.sy
        tmx = (nx - ox) / dx if dx != 0 else inv
        tmy = (ny - oy) / dy if dy != 0 else inv
        tdx = abs(self.sx / dx) if dx != 0 else inv
        tdy = abs(self.sy / dy) if dy != 0 else inv
        steps = max_steps or (2 * self.res + 4)
        for _ in range(steps):
            yield ci, cj, min(tmx, tmy)
            if tmx < tmy:
                ci += stepi
                tmx += tdx
            else:
                cj += stepj
                tmy += tdy
            if not (0 <= ci < self.res and 0 <= cj < self.res):
                return


class RayShooter:
    """First-hit queries against a collection of segment pieces and arcs.

    `accelerate=False` (or env QUICKVIS_NAIVE_SHOOT=1) forces the naive
    all-pieces scan; the grid path produces bit-identical hits and is
    differential-tested against the naive one.
    """

    def __init__(self, segments, arcs=(), accelerate=True, piece_ids=None):
        self.segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
        self.arcs = list(arcs)
        self.piece_ids = piece_ids if piece_ids is not None else list(range(len(self.segments)))
        naive_env = os.environ.get("QUICKVIS_NAIVE_SHOOT", "") not in ("", "0")
        self.accelerate = accelerate and not naive_env and len(self.segments) >= 24
        self.grid = _Grid(self.segments) if self.accelerate else None
        self.stats = {"queries": 0, "edge_tests": 0}

    def first_hit(self, origin, direction, t_lo=0.0):
        """(t, kind, index, point) of the first piece hit, or NoHit.

        kind is 'seg' or 'arc'; index refers to piece_ids / arcs.
        """
        ox, oy = float(origin[0]), float(origin[1])
        dx, dy = float(direction[0]), float(direction[1])
        if dx == 0 and dy == 0:
            raise ValueError("zero direction")
        self.stats["queries"] += 1
        t, idx, code = self._seg_scan(ox, oy, dx, dy, t_lo)
        best_t, best = (t, ("seg", idx)) if idx >= 0 else (math.inf, None)
        for k, arc in enumerate(self.arcs):
            for u, ta in arc.ray_intersections((ox, oy), (dx, dy)):
                if ta > t_lo:
                    if ta < best_t:
                        best_t = ta
                        best = ("arc", k)
                    break
        if best is None:
            raise NoHit("ray misses all pieces")
        pt = (ox + best_t * dx, oy + best_t * dy)
        kind, idx = best
        if kind == "seg":
            idx = self.piece_ids[idx]
        return best_t, kind, idx, pt

    def _seg_scan(self, ox, oy, dx, dy, t_lo):
        if not len(self.segments):
            return math.inf, -1, 0
        if self.grid is None:
            self.stats["edge_tests"] += len(self.segments)
            return kernels.ray_scan(ox, oy, dx, dy, self.segments, t_lo)
        best = (math.inf, -1, 0)
        seen = set()
        for ci, cj, t_exit in self.grid.ray_cells(ox, oy, dx, dy):
            idxs = [i for i in self.grid.cells.get((ci, cj), ()) if i not in seen]
            seen.update(idxs)
            if idxs:
                sub = self.segments[idxs]
                self.stats["edge_tests"] += len(idxs)
                t, j, code = kernels.ray_scan(ox, oy, dx, dy, sub, t_lo)
                if j >= 0 and t < best[0]:
                    best = (t, idxs[j], code)
            if best[0] <= t_exit:
                break
        return best
