import heapq
import math
import random

import pytest

from quickvis import spm as SPM
from quickvis.errors import OutsideDomain
from quickvis.generate import gen_domain, random_free_point

SQRT34 = math.sqrt(34.0)


def dijkstra_dist(dom, t):
    """Independent oracle: Dijkstra over the visibility graph augmented with t."""
    pts = [dom.source] + list(dom.vertices) + [t]
    n = len(pts)
    vis = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if dom.visible(pts[i], pts[j]):
                vis[i][j] = vis[j][i] = True
    dist = [math.inf] * n
    dist[0] = 0.0
    h = [(0.0, 0)]
    seen = [False] * n
    while h:
        d, v = heapq.heappop(h)
        if seen[v]:
            continue
        seen[v] = True
        for u in range(n):
            if vis[v][u]:
                nd = d + math.hypot(float(pts[v][0]) - float(pts[u][0]),
                                    float(pts[v][1]) - float(pts[u][1]))
                if nd < dist[u]:
                    dist[u] = nd
                    heapq.heappush(h, (nd, u))
    return dist[n - 1]


@pytest.fixture(scope="module")
def fixture_spm(fixture_domain):
    return SPM.build_spm(fixture_domain)


def test_spt_star_on_convex(convex_domain):
    spt = SPM.build_spt(convex_domain)
    assert all(spt.parent[v] == 0 for v in range(1, spt.nsites))


def test_spt_fixture_distances(fixture_spm):
    spt = fixture_spm.spt
    dom = fixture_spm.dom
    # every s-visible vertex has w = straight distance
    for v in range(dom.n):
        if dom.visible(dom.source, dom.vertices[v]):
            d = math.hypot(dom.vxy[v][0] - 1, dom.vxy[v][1] - 1)
            assert spt.w[v + 1] == pytest.approx(d, rel=1e-12)
    # the far hole corner (6,6) goes through a near corner, sqrt(34) + 2
    vid = [i for i, p in enumerate(dom.vertices) if (float(p[0]), float(p[1])) == (6.0, 6.0)][0]
    assert spt.w[vid + 1] == pytest.approx(SQRT34 + 2, rel=1e-12)


def test_dist_fixture_values(fixture_spm):
    m = fixture_spm
    assert m.dist((9, 9)) == pytest.approx(2 * SQRT34, rel=1e-12)
    assert m.dist((9, 1)) == pytest.approx(8.0, rel=1e-12)
    assert m.dist((1, 1)) == 0.0
    d = m.dist((6, 6))
    assert d == pytest.approx(SQRT34 + 2, rel=1e-12)


def test_locate_fixture(fixture_spm):
    m = fixture_spm
    dom = m.dom
    assert m.locate((1, 1))[0] == 0
    assert m.locate((9, 1))[0] == 0
    cell, root = m.locate((9, 9))
    # tie between the two sqrt(34) corners: lowest site id wins
    pt = tuple(map(float, dom.vxy[root - 1]))
    assert pt in ((6.0, 4.0), (4.0, 6.0))
    cells = {m.locate((9, 9 - 1e-7))[0], m.locate((9 - 1e-7, 9))[0]}
    assert len(cells) == 2  # genuinely on a bisector


def test_outside_raises(fixture_spm):
    with pytest.raises(OutsideDomain):
        fixture_spm.dist((5, 5))
    with pytest.raises(OutsideDomain):
        fixture_spm.dist((-1, -1))


def test_extract_path_fixture(fixture_spm):
    p = fixture_spm.extract_path((9, 9))
    assert p[0] == (1.0, 1.0)
    assert p[-1] == (9.0, 9.0)
    assert len(p) == 3
    assert p[1] in ((6.0, 4.0), (4.0, 6.0))
    # visible target: straight segment
    assert fixture_spm.extract_path((9, 1)) == [(1.0, 1.0), (9.0, 1.0)]


def test_fixture_bisector_structure(fixture_spm):
    m = fixture_spm
    assert len(m.supercurves) == 1
    assert len(m.crossings) == 2
    pts = sorted(tuple(map(float, c.point)) for c in m.crossings)
    assert pts[0] == pytest.approx((6.0, 6.0))
    assert pts[1] == pytest.approx((10.0, 10.0))
    # (9,9) is on the bisector: equal path values via both roots
    arc = m.pieces[m.supercurves[0]["chain"][0][0]].arc
    assert abs(arc.residual((9.0, 9.0))) < 1e-9


def test_convex_no_bisectors(convex_domain):
    m = SPM.build_spm(convex_domain)
    assert not m.supercurves
    assert not m.crossings
    assert m.locate((5, 5))[0] == 0


def test_dist_vs_dijkstra_random():
    rng = random.Random(99)
    for seed in range(6):
        dom = gen_domain(n=24, holes=2, seed=seed)
        m = SPM.build_spm(dom)
        for _ in range(25):
            t = random_free_point(dom, rng)
            a = m.dist(t)
            b = dijkstra_dist(dom, t)
            assert abs(a - b) <= 1e-9 * (1 + b)


def test_paths_noncrossing_random(fixture_spm, rng):
    from quickvis import geom
    m = fixture_spm
    pts = [random_free_point(m.dom, rng) for _ in range(25)]
    paths = [m.extract_path(t) for t in pts]
    for i in range(len(paths)):
        for j in range(i + 1, len(paths)):
            for a, b in zip(paths[i], paths[i][1:]):
                for c, d in zip(paths[j], paths[j][1:]):
                    kind, data = geom.segment_intersect(a, b, c, d)
                    if kind == "point":
                        # touching allowed (shared prefixes), proper crossing not
                        o1 = geom.orient(a, b, c)
                        o2 = geom.orient(a, b, d)
                        o3 = geom.orient(c, d, a)
                        o4 = geom.orient(c, d, b)
                        assert not (o1 * o2 < 0 and o3 * o4 < 0)


def test_triple_points_on_three_cells():
    for seed in (0, 1, 7):
        dom = gen_domain(n=26, holes=2, seed=seed)
        m = SPM.build_spm(dom)
        for j in m.junctions:
            if j.kind != "triple" or not j.ends:
                continue
            assert len(j.ends) == 3
            assert len(j.sites) == 3
            # equal path values through all three roots
            vals = [float(m.spt.w[s]) + math.dist(j.point, tuple(m.spt.xy[s]))
                    for s in j.sites]
            assert max(vals) - min(vals) < 1e-7


def test_lca_index_random(rng):
    for _ in range(20):
        n = rng.randint(2, 50)
        parent = [-1] + [rng.randrange(0, v) for v in range(1, n)]
        idx = SPM.LcaIndex(parent)

        def naive(u, v):
            au = set()
            x = u
            while x >= 0:
                au.add(x)
                x = parent[x]
            x = v
            while x not in au:
                x = parent[x]
            return x

        for _ in range(40):
            u = rng.randrange(n)
            v = rng.randrange(n)
            assert idx.query(u, v) == naive(u, v)
        assert idx.query(0, rng.randrange(n)) == 0
        v = rng.randrange(n)
        assert idx.query(v, v) == v
