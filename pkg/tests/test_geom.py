import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quickvis import geom


def test_orient_examples():
    assert geom.orient((0, 0), (1, 0), (0, 1)) == 1
    assert geom.orient((0, 0), (1, 1), (2, 2)) == 0
    assert geom.orient((0, 0), (0, 1), (1, 1)) == -1


coords = st.integers(min_value=-50, max_value=50)
pt = st.tuples(coords, coords)


@settings(max_examples=60, deadline=None)
@given(pt, pt, pt)
def test_orient_antisymmetric(p, q, r):
    o = geom.orient(p, q, r)
    assert geom.orient(q, p, r) == -o
    assert geom.orient(p, r, q) == -o
    assert geom.orient(r, q, p) == -o


def test_orient_near_degenerate_exact():
    # tiny rational offsets resolve exactly through the fallback
    p = (Fraction(0), Fraction(0))
    q = (Fraction(10 ** 12), Fraction(10 ** 12))
    r = (Fraction(10 ** 12) * 2, Fraction(10 ** 12) * 2 + Fraction(1, 10 ** 12))
    assert geom.orient(p, q, r) == 1


def test_segment_intersect_examples():
    kind, p = geom.segment_intersect((0, 0), (2, 2), (0, 2), (2, 0))
    assert kind == "point" and p == (1, 1)
    kind, seg = geom.segment_intersect((0, 0), (2, 0), (1, 0), (3, 0))
    assert kind == "overlap" and seg == ((1, 0), (2, 0))
    kind, _ = geom.segment_intersect((0, 0), (1, 0), (0, 1), (1, 1))
    assert kind == "none"


def test_segment_touch_at_endpoint():
    kind, p = geom.segment_intersect((0, 0), (1, 1), (1, 1), (2, 0))
    assert kind == "point" and p == (1, 1)


def _square_shooter(accelerate=False):
    segs = [(0, 0, 1, 0), (1, 0, 1, 1), (1, 1, 0, 1), (0, 1, 0, 0)]
    return geom.RayShooter(segs, accelerate=accelerate)


def test_ray_shoot_square():
    sh = _square_shooter()
    t, kind, idx, pt = sh.first_hit((0.5, 0.5), (1, 0))
    assert kind == "seg" and idx == 1
    assert pt == pytest.approx((1.0, 0.5))


def test_ray_shoot_corner_tie():
    sh = _square_shooter()
    t, kind, idx, pt = sh.first_hit((0.5, 0.5), (1, 1))
    assert pt == pytest.approx((1.0, 1.0))


def test_ray_shoot_no_hit():
    sh = _square_shooter()
    with pytest.raises(geom.NoHit):
        sh.first_hit((2.0, 2.0), (1, 0))


def _arc(fa, wa, fb, wb, u0=-5.0, u1=5.0):
    return geom.BisectorArc(fa, wa, fb, wb, u0=u0, u1=u1)


def test_line_bisector_kind_and_ray_hit():
    arc = _arc((0, 0), 0.0, (2, 0), 0.0)
    assert arc.kind == geom.LINE
    hit = geom.ray_shoot_arc_chain([arc], (0, 0.5), (1, 0))
    assert hit == pytest.approx((1.0, 0.5))


def test_ray_parallel_disjoint_misses_line_arc():
    arc = _arc((0, 0), 0.0, (2, 0), 0.0)
    assert geom.ray_shoot_arc_chain([arc], (3, 0.5), (0, 1)) is None


def test_hyperbola_ray_hit_matches_dense_sampling():
    arc = _arc((0, 0), 0.0, (4, 0), 1.0)
    hit = geom.ray_shoot_arc_chain([arc], (-10, 1.0), (1, 0))
    assert hit is not None
    assert abs(arc.residual(hit)) < 1e-9
    # dense polyline cross-check
    best = None
    pts = arc.sample(100000)
    for a, b in zip(pts, pts[1:]):
        if (a[1] - 1.0) * (b[1] - 1.0) <= 0:
            t = (1.0 - a[1]) / (b[1] - a[1]) if b[1] != a[1] else 0.5
            x = a[0] + t * (b[0] - a[0])
            if best is None or x < best:
                best = x
    assert best == pytest.approx(hit[0], abs=1e-6)


def test_extension_ray_kind():
    # child at (1,0) with parent (0,0): locus is the ray x >= 1, y = 0
    arc = geom.BisectorArc((0, 0), 2.0, (1, 0), 3.0, u0=0.0, u1=10.0)
    assert arc.kind == geom.RAY
    assert arc.point_at(0.0) == pytest.approx((1.0, 0.0))
    assert arc.point_at(2.0) == pytest.approx((3.0, 0.0))
    assert abs(arc.residual((5.0, 0.0))) < 1e-12


def test_arc_residual_invariant_on_samples():
    arc = _arc((0, 0), 0.3, (3, 1), 1.0)
    for p in arc.sample(257):
        assert abs(arc.residual(p)) < 1e-9


def test_seg_intersections_against_samples():
    arc = _arc((0, 0), 0.0, (4, 0), 1.0)
    seg = ((-5.0, -3.0), (5.0, 3.0))
    hits = arc.seg_intersections(*seg)
    for u, t in hits:
        p = geom.seg_point_at(seg[0], seg[1], t)
        assert abs(arc.residual(p)) < 1e-9


def test_grid_shooter_matches_naive_random():
    import random
    rng = random.Random(7)
    for rep in range(30):
        # random star-shaped polygon, <= 40 vertices
        import math as m
        k = rng.randint(5, 40)
        angs = sorted(rng.uniform(0, 2 * m.pi) for _ in range(k))
        if min(b - a for a, b in zip(angs, angs[1:])) < 1e-3:
            continue
        pts = [(10 + rng.uniform(2, 9) * m.cos(a), 10 + rng.uniform(2, 9) * m.sin(a))
               for a in angs]
        segs = [(pts[i][0], pts[i][1], pts[(i + 1) % k][0], pts[(i + 1) % k][1])
                for i in range(k)]
        naive = geom.RayShooter(segs, accelerate=False)
        grid = geom.RayShooter(segs, accelerate=True)
        for _ in range(40):
            ang = rng.uniform(0, 2 * m.pi)
            d = (m.cos(ang), m.sin(ang))
            try:
                t1, k1, i1, p1 = naive.first_hit((10, 10), d)
            except geom.NoHit:
                with pytest.raises(geom.NoHit):
                    grid.first_hit((10, 10), d)
                continue
            t2, k2, i2, p2 = grid.first_hit((10, 10), d)
            assert (k1, i1) == (k2, i2)
            assert p1 == p2  # bit-identical
