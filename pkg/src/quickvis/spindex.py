"""Query indexes over the anchor tree: T1 for shortest-path/segment
intersection queries and T2 for region range queries.

Both trees are complete binary trees over the anchor copies v_0..v_{h*-1} in
ccw order. Each node u stores a path fragment P(u) of T_V edges such that the
fragments along any root-to-leaf path concatenate to the geodesic pi(s, v_i);
T2 nodes additionally store the subtree structure U(u) (path pieces below the
fragment top plus the alpha chains spanned by the node's leaf range).

The range query walks the tree spine-wise (the paper's four procedures) and
confirms each candidate with a direct one-region boundary test, so it agrees
with the naive region loop exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import geom
from .errors import DegenerateInput, OutsideDomain


def _seg_intersect_pt(a, b, c, d, tol=1e-12):
    """Intersection point of closed segments ab, cd (floats), or None."""
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    cx, cy = float(c[0]), float(c[1])
    dx, dy = float(d[0]), float(d[1])
    r1x, r1y = bx - ax, by - ay
    r2x, r2y = dx - cx, dy - cy
    den = r1x * r2y - r1y * r2x
    if den == 0:
        if abs((cx - ax) * r1y - (cy - ay) * r1x) > tol * (abs(r1x) + abs(r1y) + 1):
            return None
        dd = r1x * r1x + r1y * r1y
        if dd == 0:
            return (ax, ay) if (ax, ay) == (cx, cy) else None
        t1 = ((cx - ax) * r1x + (cy - ay) * r1y) / dd
        t2 = ((dx - ax) * r1x + (dy - ay) * r1y) / dd
        lo, hi = min(t1, t2), max(t1, t2)
        lo = max(lo, 0.0)
        hi = min(hi, 1.0)
        if lo > hi:
            return None
        t = 0.5 * (lo + hi)
        return (ax + t * r1x, ay + t * r1y)
    t = ((cx - ax) * r2y - (cy - ay) * r2x) / den
    u = ((cx - ax) * r1y - (cy - ay) * r1x) / den
    if -tol <= t <= 1 + tol and -tol <= u <= 1 + tol:
        t = min(1.0, max(0.0, t))
        return (ax + t * r1x, ay + t * r1y)
    return None


@dataclass
class _Node:
    lo: int
    hi: int
    left: int = -1
    right: int = -1
    fragment: list = field(default_factory=list)   # T_V edges (node pairs)
    frag_pts: list = field(default_factory=list)   # ((x1,y1),(x2,y2), tv_edge)
    top: tuple = None                              # p_u hang point
    u_edges: list = field(default_factory=list)
    u_alphas: list = field(default_factory=list)   # alpha indices in U(u)


class PathTree:
    """Complete binary tree with P(u) fragments (shared by T1/T2)."""

    def __init__(self, decomp, with_u=False):
        self.decomp = decomp
        self.spm = decomp.spm
        self.tree = decomp.tree
        self.anchors = decomp.anchors
        self.h = len(self.anchors.copies)
        self.nodes = []
        self.leaf_node = {}
        self.stats = {"shoot_calls": 0, "queries": 0}
        if self.h == 0:
            self.root = -1
            return
        self.root = self._build(0, self.h - 1)
        self._insert_fragments()
        self._finalize_fragments()
        if with_u:
            self._build_u()

    def _build(self, lo, hi):
        idx = len(self.nodes)
        self.nodes.append(_Node(lo=lo, hi=hi))
        if lo == hi:
            self.leaf_node[lo] = idx
            return idx
        mid = (lo + hi) // 2
        l = self._build(lo, mid)
        r = self._build(mid + 1, hi)
        self.nodes[idx].left = l
        self.nodes[idx].right = r
        return idx

    def _insert_fragments(self):
        tree = self.tree
        ranges = tree.edge_leaf_range()
        order = []

        def rec(node):
            for c in tree._children(node):
                rec(c)
                order.append((node, c))

        rec(("site", 0))
        self.level_counts = {}
        for (pnode, cnode) in order:
            le, re_ = ranges[(pnode, cnode)]
            self._insert_edge(self.root, 0, (pnode, cnode), int(le), int(re_))

    def _insert_edge(self, nidx, depth, edge, le, re_):
        node = self.nodes[nidx]
        if le <= node.lo and node.hi <= re_:
            node.fragment.append(edge)
            key = (depth, edge)
            self.level_counts[key] = self.level_counts.get(key, 0) + 1
            if self.level_counts[key] > 2:
                raise DegenerateInput(
                    f"edge {edge} stored more than twice at level {depth}")
            return
        if node.left < 0:
            return
        l, r = self.nodes[node.left], self.nodes[node.right]
        if le <= l.hi:
            self._insert_edge(node.left, depth + 1, edge, le, re_)
        if re_ >= r.lo:
            self._insert_edge(node.right, depth + 1, edge, le, re_)

    def _finalize_fragments(self):
        tree = self.tree
        for node in self.nodes:
            node.frag_pts = [(tree.node_point(p), tree.node_point(c), (p, c))
                             for (p, c) in node.fragment]

    def _build_u(self):
        tree = self.tree
        post = tree.post_index

        def set_tops(nidx, inherited):
            node = self.nodes[nidx]
            if node.fragment:
                # the fragment node farthest from s (smallest post-order)
                far = min(node.fragment, key=lambda e: post[e[1]])
                node.top = far[1]
            else:
                node.top = inherited
            if node.left >= 0:
                set_tops(node.left, node.top)
                set_tops(node.right, node.top)

        set_tops(self.root, ("site", 0))
        for node in self.nodes:
            top = node.top
            visited = {top}
            edges = []
            for leaf in range(node.lo, node.hi + 1):
                path = self.tree.path_nodes(leaf)
                start = path.index(top) if top in path else 0
                chain = path[start:]
                for a, b in zip(chain, chain[1:]):
                    if b in visited:
                        continue
                    visited.add(b)
                    edges.append((a, b))
            node.u_edges = [(tree.node_point(a), tree.node_point(b), (a, b))
                            for (a, b) in edges]
            node.u_alphas = [c for c in range(node.lo, node.hi + 1) if c < self.h]

    # -- primitives ---------------------------------------------------------

    def frag_hit(self, nidx, a, b):
        """Intersection of segment ab with P(u), or None (one shooter call)."""
        self.stats["shoot_calls"] += 1
        for (p, q, edge) in self.nodes[nidx].frag_pts:
            pt = _seg_intersect_pt(a, b, p, q)
            if pt is not None:
                return pt, edge
        return None

    def alpha_hit(self, c, a, b):
        """Segment ab intersects alpha chain c (curve or obstacle chain)."""
        self.stats["shoot_calls"] += 1
        alpha = self.anchors.alphas[c]
        if alpha[0] == "curve":
            sc = self.spm.supercurves[alpha[1]]
            for (pi, flip) in sc["chain"]:
                if self.spm.pieces[pi].arc.seg_intersections(a, b):
                    return True
            return False
        for (_e, p, q) in alpha[1]:
            if _seg_intersect_pt(a, b, p, q) is not None:
                return True
        return False

    def u_hit(self, nidx, a, b):
        """Segment ab intersects U(u) (one shooter call)."""
        self.stats["shoot_calls"] += 1
        node = self.nodes[nidx]
        for (p, q, edge) in node.u_edges:
            if _seg_intersect_pt(a, b, p, q) is not None:
                return True
        for c in node.u_alphas:
            alpha = self.anchors.alphas[c]
            if alpha[0] == "curve":
                sc = self.spm.supercurves[alpha[1]]
                for (pi, flip) in sc["chain"]:
                    if self.spm.pieces[pi].arc.seg_intersections(a, b):
                        return True
            else:
                for (_e, p, q) in alpha[1]:
                    if _seg_intersect_pt(a, b, p, q) is not None:
                        return True
        return False

    def root_to_leaf(self, leaf):
        path = []
        nidx = self.root
        while True:
            path.append(nidx)
            node = self.nodes[nidx]
            if node.lo == node.hi:
                return path
            mid = (node.lo + node.hi) // 2
            nidx = node.left if leaf <= mid else node.right


class SpSegIndex:
    """T1: intersection of a query segment with the geodesic pi(s, t)."""

    def __init__(self, decomp):
        self.decomp = decomp
        self.spm = decomp.spm
        self.tree = decomp.tree
        self.t1 = PathTree(decomp, with_u=False)
        self.desc_leaf = {}
        for i in range(len(decomp.anchors.copies)):
            for node in self.tree.path_nodes(i):
                if node[0] == "site" and node not in self.desc_leaf:
                    self.desc_leaf[node] = i
        self.stats = self.t1.stats

    def anchor_query(self, leaf, a, b):
        """Point of segment ab on pi(s, v_leaf), or None."""
        self.stats["queries"] += 1
        if self.t1.root < 0:
            return None
        for nidx in self.t1.root_to_leaf(leaf):
            hit = self.t1.frag_hit(nidx, a, b)
            if hit is not None:
                return hit[0]
        return None

    def site_query(self, site, a, b):
        """Point of segment ab on pi(s, site) for a T_V site node, or None."""
        node = ("site", site)
        leaf = self.desc_leaf.get(node)
        if leaf is None:
            pts = self.spm.path_via(site)
            self.stats["shoot_calls"] += 1
            for p, q in zip(pts, pts[1:]):
                hit = _seg_intersect_pt(a, b, p, q)
                if hit is not None:
                    return hit
            return None
        want = self.tree.post_index[node]
        for nidx in self.t1.root_to_leaf(leaf):
            hit = self.t1.frag_hit(nidx, a, b)
            if hit is not None:
                pt, edge = hit
                # the hit edge's far endpoint must be an ancestor-or-self of
                # the site node (post-order increases toward the root)
                if self.tree.post_index[edge[1]] >= want:
                    return pt
                return None
        return None

    def point_query(self, t, a, b, root_site=None):
        """Point of segment ab on pi(s, t), or None."""
        self.stats["queries"] += 1
        decomp = self.decomp
        tf = (float(t[0]), float(t[1]))
        cell = decomp.locate_cell(tf)
        if cell is None:
            raise OutsideDomain(f"cannot locate {tf}")
        if root_site is not None and root_site in cell.super_roots:
            root = root_site
            node = ("s",) if root == 0 else ("v", root - 1)
            d, via = cell.geo.point_dist(node, tf)
        else:
            total, root, via = decomp.point_dist_in_cell(cell, tf)
            node = ("s",) if root == 0 else ("v", root - 1)
        hit = self.site_query(root, a, b)
        if hit is not None:
            return hit
        path = cell.geo.path_to(node, via, tf) if via >= 0 else [tf]
        self.stats["shoot_calls"] += 1
        for p, q in zip(path, path[1:]):
            pt = _seg_intersect_pt(a, b, p, q)
            if pt is not None:
                return pt
        if len(path) == 1:
            return _seg_intersect_pt(a, b, tf, tf)
        return None


class RegionRangeIndex:
    """T2: ccw-extremal region in a circular range whose boundary a segment
    crosses; tree-walk candidates verified by direct one-region tests."""

    def __init__(self, decomp):
        self.decomp = decomp
        self.spm = decomp.spm
        self.t2 = PathTree(decomp, with_u=True)
        self.h = self.t2.h
        self.stats = self.t2.stats

    # -- direct one-region test (also the naive reference) -------------------

    def region_boundary_crosses(self, r, a, b):
        reg = self.decomp.regions[r]
        spm = self.spm
        for copy_idx, endpoint in ((reg.i, reg.vi_point), (reg.j, reg.vj_point)):
            sites = spm.spt.path_sites(self.decomp.anchors.copies[copy_idx].cell)
            pts = [tuple(spm.spt.xy[v]) for v in sites] + [endpoint]
            for p, q in zip(pts, pts[1:]):
                if _seg_intersect_pt(a, b, p, q) is not None:
                    return True
        alpha = reg.alpha
        if alpha[0] == "curve":
            sc = spm.supercurves[alpha[1]]
            for (pi, flip) in sc["chain"]:
                if spm.pieces[pi].arc.seg_intersections(a, b):
                    return True
        else:
            for (_e, p, q) in alpha[1]:
                if _seg_intersect_pt(a, b, p, q) is not None:
                    return True
        return False

    def naive_query(self, i, j, a, b, want="max"):
        if self.h == 0:
            return None
        idxs = self._range_indices(i, j)
        order = reversed(idxs) if want == "max" else iter(idxs)
        for r in order:
            if self.region_boundary_crosses(r, a, b):
                return r
        return None

    def _range_indices(self, i, j):
        if i <= j:
            return list(range(i, j + 1))
        return list(range(i, self.h)) + list(range(0, j + 1))

    # -- indexed query --------------------------------------------------------

    def query(self, i, j, a, b, want="max"):
        self.stats["queries"] += 1
        if self.h == 0:
            return None
        if i <= j:
            return self._lin(i, j, a, b, want)
        if want == "max":
            r = self._lin(0, j, a, b, "max")
            if r is not None:
                return r
            return self._lin(i, self.h - 1, a, b, "max")
        r = self._lin(i, self.h - 1, a, b, "min")
        if r is not None:
            return r
        return self._lin(0, j, a, b, "min")

    def _lin(self, i, j, a, b, want):
        """Extremal crossed region in the ascending range [i, j]."""
        t2 = self.t2
        extremal = j if want == "max" else i
        self.stats["shoot_calls"] += 1
        if self.region_boundary_crosses(extremal, a, b):
            return extremal
        if i == j:
            return None
        # candidate test nodes: canonical cover of [i, j] plus the spine
        # ancestors that contain only the non-extremal range end
        cover = []
        self._cover(t2.root, i, j, cover)
        spine = []
        other_leaf = i if want == "max" else j
        for nidx in t2.root_to_leaf(other_leaf):
            node = t2.nodes[nidx]
            contains_extremal = node.lo <= extremal <= node.hi
            if not contains_extremal and not (node.lo >= i and node.hi <= j):
                spine.append(nidx)
        items = []
        for nidx in cover:
            node = t2.nodes[nidx]
            key = min(node.hi, j - 1) if want == "max" else max(node.lo - 1, i)
            items.append((key, 0, nidx, "cover"))
        for nidx in spine:
            node = t2.nodes[nidx]
            key = min(node.hi, j - 1) if want == "max" else max(node.lo - 1, i)
            items.append((key, 1, nidx, "spine"))
        items.sort(key=lambda it: (-it[0], it[1]) if want == "max" else (it[0], it[1]))
        for key, _, nidx, kind in items:
            if kind == "spine":
                # fragment is shared with the non-extremal end's path
                if t2.frag_hit(nidx, a, b) is not None:
                    return key
            else:
                r = self._probe_subtree(nidx, i, j, a, b, want)
                if r is not None:
                    return r
        # the non-extremal range end may be certified only by out-of-range
        # objects (e.g. the wrap path pi(s, v_{j+1 mod h*}))
        other = i if want == "max" else j
        self.stats["shoot_calls"] += 1
        if self.region_boundary_crosses(other, a, b):
            return other
        return None

    def _cover(self, nidx, i, j, out):
        node = self.t2.nodes[nidx]
        if node.lo >= i and node.hi <= j:
            out.append(nidx)
            return
        if node.left < 0:
            return
        mid = (node.lo + node.hi) // 2
        if i <= mid:
            self._cover(node.left, i, j, out)
        if j > mid:
            self._cover(node.right, i, j, out)

    def _probe_subtree(self, nidx, i, j, a, b, want):
        """P/U tests on an in-range subtree; returns a verified region or None."""
        t2 = self.t2
        node = t2.nodes[nidx]
        if t2.frag_hit(nidx, a, b) is not None:
            # crosses pi(s, v_l) for every leaf l under the node
            if want == "max":
                return self._verify([min(node.hi, j), min(node.hi, j) - 1],
                                    i, j, a, b, want, fallback=(nidx,))
            lo = max(node.lo - 1, i)
            return self._verify([lo, lo + 1], i, j, a, b, want, fallback=(nidx,))
        if not t2.u_hit(nidx, a, b):
            return None
        leaf = self._descend(nidx, a, b, want)
        cands = [leaf, leaf - 1] if want == "max" else [leaf - 1, leaf]
        r = self._verify(cands, i, j, a, b, want)
        if r is not None:
            return r
        # pathological multi-hit: bounded fallback over the subtree's regions
        lo = max(node.lo - 1, i)
        hi = min(node.hi, j)
        rng = range(hi, lo - 1, -1) if want == "max" else range(lo, hi + 1)
        for r in rng:
            self.stats["shoot_calls"] += 1
            if self.region_boundary_crosses(r, a, b):
                return r
        return None

    def _verify(self, cands, i, j, a, b, want, fallback=()):
        for r in cands:
            if r is None or not (i <= r <= j):
                continue
            self.stats["shoot_calls"] += 1
            if self.region_boundary_crosses(r, a, b):
                return r
        return None

    def _descend(self, nidx, a, b, want):
        t2 = self.t2
        while True:
            node = t2.nodes[nidx]
            # the node's own fragment certifies every leaf below it
            if t2.frag_hit(nidx, a, b) is not None:
                return node.hi if want == "max" else node.lo
            if node.lo == node.hi:
                return node.lo
            first = node.right if want == "max" else node.left
            if t2.frag_hit(first, a, b) is not None or t2.u_hit(first, a, b):
                nidx = first
            else:
                nidx = node.left if want == "max" else node.right

    def _lca_node(self, i, j):
        nidx = self.t2.root
        while True:
            node = self.t2.nodes[nidx]
            if node.lo == node.hi:
                return nidx
            mid = (node.lo + node.hi) // 2
            if j <= mid:
                nidx = node.left
            elif i > mid:
                nidx = node.right
            else:
                return nidx
