import json
from fractions import Fraction

import pytest

from quickvis import domain as dm
from quickvis.errors import ParseError, ValidationError
from quickvis.generate import gen_domain

from conftest import CONVEX, UNIT_SQUARE_1HOLE, make_domain


def test_load_fixture_counts(fixture_domain):
    d = fixture_domain
    assert d.n == 8
    assert d.h == 2
    assert d.sxy == (1.0, 1.0)


def test_orientation_normalized():
    spec = dict(UNIT_SQUARE_1HOLE)
    spec["outer"] = list(reversed(spec["outer"]))
    d = make_domain(spec)
    assert dm._ring_area2(d.outer) > 0
    assert dm._ring_area2(d.holes[0]) < 0


def test_source_in_hole_rejected():
    spec = dict(UNIT_SQUARE_1HOLE)
    spec["source"] = [5, 5]
    with pytest.raises(ValidationError):
        make_domain(spec)


def test_self_intersecting_ring_rejected():
    spec = {"outer": [[0, 0], [10, 10], [10, 0], [0, 10]], "holes": [], "source": [5, 1]}
    with pytest.raises(ValidationError):
        make_domain(spec)


def test_malformed_json():
    with pytest.raises(ParseError) as ei:
        dm.load_domain("{not json")
    assert "line" in str(ei.value)


def test_exact_decimal_parsing():
    d = dm.load_domain(json.dumps({
        "outer": [["0.1", 0], [10, 0], [10, 10], [0, 10]],
        "holes": [],
        "source": [5, 5],
    }))
    assert d.outer[0][0] == Fraction(1, 10)


def test_roundtrip(tmp_path, fixture_domain):
    p = tmp_path / "d.json"
    fixture_domain.save(p)
    d2 = dm.load_domain(p.read_text())
    assert d2.outer == fixture_domain.outer
    assert d2.holes == fixture_domain.holes
    assert d2.source == fixture_domain.source


def test_roundtrip_awkward_rationals(tmp_path):
    d = dm.load_domain(json.dumps({
        "outer": [["1/3", 0], [10, 0], [10, 10], [0, 10]],
        "holes": [],
        "source": [5, 5],
    }))
    p = tmp_path / "d.json"
    d.save(p)
    d2 = dm.load_domain(p.read_text())
    assert d2.outer == d.outer


def test_visible_fixture(fixture_domain):
    d = fixture_domain
    assert d.visible((1, 1), (9, 1))
    assert not d.visible((1, 1), (9, 9))
    assert d.visible((1, 1), (6, 4))  # grazing contact at the hole corner
    assert d.visible((9, 1), (1, 1))


def test_visible_symmetric_random(fixture_domain, rng):
    d = fixture_domain
    from quickvis.generate import random_free_point
    for _ in range(50):
        p = random_free_point(d, rng)
        q = random_free_point(d, rng)
        assert d.visible(p, q) == d.visible(q, p)


def test_visible_along_boundary(fixture_domain):
    # running along an obstacle edge counts as visible (closed free space)
    assert fixture_domain.visible((4, 4), (6, 4))
    assert fixture_domain.visible((0, 0), (10, 0))
    # cutting across the hole between two hole corners is blocked
    assert not fixture_domain.visible((4, 4), (6, 6))


def test_reflex_flags(fixture_domain):
    d = fixture_domain
    # outer square corners are convex, hole corners are reflex in free space
    assert not d.reflex[:4].any()
    assert d.reflex[4:].all()


def test_triangulate_square():
    d = make_domain({"outer": [[0, 0], [1, 0], [1, 1], [0, 1]], "holes": [], "source": [0.5, 0.5]})
    tri = dm.triangulate(d)
    assert len(tri.triangles) == 2


def test_triangulate_fixture(fixture_domain):
    tri = dm.triangulate(fixture_domain)
    assert len(tri.triangles) == 8


def test_triangulate_random_euler():
    for seed in range(6):
        d = gen_domain(n=30, holes=3, seed=seed)
        tri = dm.triangulate(d)
        assert len(tri.triangles) == d.n + 2 * (d.h - 1) - 2
        # every diagonal borders exactly two triangles
        for key, tris in tri.diagonals.items():
            assert len(tris) == 2


def test_triangulate_with_source(fixture_domain):
    tri = dm.triangulate(fixture_domain, include_source=True)
    assert len(tri.triangles) == 8 + 2
    assert tri.points[-1] == fixture_domain.sxy


def test_visibility_graph_convex(convex_domain):
    pts, adj = convex_domain.visibility_graph()
    n = len(pts)
    for i in range(n):
        for j in range(n):
            if i != j:
                assert adj[i, j]


def test_visibility_graph_fixture(fixture_domain):
    pts, adj = fixture_domain.visibility_graph(extras=[(9, 9)])
    i_s = fixture_domain.n  # source index
    i_q = fixture_domain.n + 1
    assert not adj[i_s, i_q]
