"""Seeded random domain generator: star-shaped outer ring + convex holes."""

from __future__ import annotations

import math
import random
from fractions import Fraction

from . import geom
from .domain import _point_in_ring_exact, _ring_simple, validate_domain
from .errors import ValidationError


def _snap(v, grid=Fraction(1, 64)):
    return Fraction(round(Fraction(v) / grid)) * grid


def gen_domain(n=30, holes=2, seed=0, size=100):
    """Deterministic random domain; retries sub-seeds until valid."""
    for attempt in range(64):
        rng = random.Random((seed << 8) ^ attempt)
        try:
            dom = _gen_once(rng, n, holes, size)
        except ValidationError:
            continue
        if dom is not None:
            return dom
    raise ValidationError(f"generator failed for seed={seed} n={n} holes={holes}")


def _gen_once(rng, n, holes, size):
    hole_budget = [rng.randint(3, 6) for _ in range(holes)]
    n_outer = max(3, n - sum(hole_budget))
    cx = cy = Fraction(size, 2)
    R = size * 0.47
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(n_outer))
    for i in range(1, len(angles)):
        if angles[i] - angles[i - 1] < 1e-3:
            return None
    outer = []
    for a in angles:
        r = R * rng.uniform(0.55, 1.0)
        x = _snap(cx + Fraction(r * math.cos(a)).limit_denominator(10 ** 6))
        y = _snap(cy + Fraction(r * math.sin(a)).limit_denominator(10 ** 6))
        outer.append((x, y))
    if len({p for p in outer}) != len(outer):
        return None
    ok, _ = _ring_simple(outer)
    if not ok:
        return None
    hole_rings = []
    for nh in hole_budget:
        for _try in range(40):
            hx = Fraction(rng.uniform(float(cx) - R * 0.7, float(cx) + R * 0.7)).limit_denominator(512)
            hy = Fraction(rng.uniform(float(cy) - R * 0.7, float(cy) + R * 0.7)).limit_denominator(512)
            hr = rng.uniform(size * 0.03, size * 0.12)
            pts = []
            for k in range(nh):
                a = 2 * math.pi * (k + rng.uniform(0.1, 0.9)) / nh
                px = _snap(hx + Fraction(hr * (0.6 + 0.4 * rng.random()) * math.cos(a)).limit_denominator(10 ** 6))
                py = _snap(hy + Fraction(hr * (0.6 + 0.4 * rng.random()) * math.sin(a)).limit_denominator(10 ** 6))
                pts.append((px, py))
            ring = _convex_hull(pts)
            if len(ring) < 3:
                continue
            ring = ring[::-1]  # cw
            if _hole_fits(outer, hole_rings, ring):
                hole_rings.append(ring)
                break
        else:
            return None
    # source strictly inside free space with some clearance
    for _try in range(200):
        sx = Fraction(rng.uniform(float(cx) - R * 0.9, float(cx) + R * 0.9)).limit_denominator(4096)
        sy = Fraction(rng.uniform(float(cy) - R * 0.9, float(cy) + R * 0.9)).limit_denominator(4096)
        if _clear_point(outer, hole_rings, (sx, sy), size * 0.01):
            try:
                return validate_domain(outer, hole_rings, (sx, sy))
            except ValidationError:
                return None
    return None


def _convex_hull(pts):
    pts = sorted(set(pts))
    if len(pts) <= 2:
        return pts

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and geom.orient(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lo = half(pts)
    hi = half(pts[::-1])
    return lo[:-1] + hi[:-1]


def _hole_fits(outer, hole_rings, ring):
    for v in ring:
        if _point_in_ring_exact(v, outer) != "in":
            return False
    for i, a in enumerate(ring):
        b = ring[(i + 1) % len(ring)]
        for k, c in enumerate(outer):
            d = outer[(k + 1) % len(outer)]
            if geom.segment_intersect(a, b, c, d)[0] != "none":
                return False
        for other in hole_rings:
            for k, c in enumerate(other):
                d = other[(k + 1) % len(other)]
                if geom.segment_intersect(a, b, c, d)[0] != "none":
                    return False
    for other in hole_rings:
        if _point_in_ring_exact(ring[0], other) == "in":
            return False
        if _point_in_ring_exact(other[0], ring) == "in":
            return False
    # clearance between rings so queries stay well-conditioned
    for other in hole_rings + [outer]:
        if other is outer:
            continue
        for v in ring:
            for w in other:
                if geom.dist(v, w) < 1.0:
                    return False
    return True


def _clear_point(outer, hole_rings, p, clearance):
    if _point_in_ring_exact(p, outer) != "in":
        return False
    for h in hole_rings:
        if _point_in_ring_exact(p, h) != "out":
            return False
    for ring in [outer] + hole_rings:
        for i, a in enumerate(ring):
            b = ring[(i + 1) % len(ring)]
            if _seg_point_dist(a, b, p) < clearance:
                return False
    return True


def _seg_point_dist(a, b, p):
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    px, py = float(p[0]), float(p[1])
    dx, dy = bx - ax, by - ay
    dd = dx * dx + dy * dy
    t = 0.0 if dd == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / dd))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def random_free_point(dom, rng, clearance=None):
    """Uniform-ish random point strictly inside the free space."""
    x0, y0, x1, y1 = dom.bbox
    clearance = clearance if clearance is not None else dom.scale * 1e-3
    for _ in range(10000):
        p = (Fraction(rng.uniform(x0, x1)).limit_denominator(1 << 30),
             Fraction(rng.uniform(y0, y1)).limit_denominator(1 << 30))
        if _clear_point(dom.outer, dom.holes, p, clearance):
            return p
    raise ValidationError("could not sample a free point")


def random_free_segment(dom, rng, max_len=None, clearance=None):
    """Random segment fully inside the closed free space."""
    max_len = max_len or dom.scale * 0.5
    for _ in range(10000):
        a = random_free_point(dom, rng, clearance)
        ang = rng.uniform(0, 2 * math.pi)
        ln = rng.uniform(dom.scale * 0.02, max_len)
        b = (a[0] + Fraction(ln * math.cos(ang)).limit_denominator(1 << 20),
             a[1] + Fraction(ln * math.sin(ang)).limit_denominator(1 << 20))
        if dom.contains(b) and dom.visible(a, b):
            return a, b
    raise ValidationError("could not sample a free segment")
