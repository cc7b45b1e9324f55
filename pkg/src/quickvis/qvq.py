"""Quickest-visibility query pipeline.

Per query: compute the windows of q, order the geodesics to their far
endpoints counterclockwise around the source (the f-map), run the stack
pruning and the recursive bundle pruning, then scan the surviving windows
with the region-processing procedure, once per side of the windows. The
final answer is the best of: the root-window minimum, the window endpoints,
and the two side scans; ties break to the lexicographically smallest point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import geom, kernels
from .errors import DegenerateQuery, NoCommonPoint, OutsideDomain
from .spindex import _seg_intersect_pt


@dataclass
class Window:
    u_vid: int          # defining reflex vertex id (-1 for star segments)
    u: tuple            # vertex point
    far: tuple          # far endpoint q(u) on the boundary
    angle: float = 0.0


@dataclass
class QvqAnswer:
    point: tuple
    length: float
    path: list
    provenance: str
    stats: dict = field(default_factory=dict)

    def as_json(self):
        return {
            "point": [self.point[0], self.point[1]],
            "length": self.length,
            "path": [[p[0], p[1]] for p in self.path],
            "provenance": self.provenance,
            "instrumentation": self.stats,
        }


# ---------------------------------------------------------------------------
# window computation


def compute_windows(engine, q, strict=False):
    """All windows of q, plus the index of the root window (through the SPM
    root of q's cell). Windows are returned unordered; sides order them."""
    dom = engine.dom
    spm = engine.spm
    qf = (float(q[0]), float(q[1]))
    val, u0_site = spm.dmin(q)
    if u0_site == 0:
        return [], -1, 0
    out = []
    for v in range(dom.n):
        if not dom.reflex[v]:
            continue
        vp = tuple(dom.vertices[v])
        vf = (float(vp[0]), float(vp[1]))
        if vf == qf:
            continue
        o1 = geom.orient(q, vp, dom.vertices[dom.vprev[v]])
        o2 = geom.orient(q, vp, dom.vertices[dom.vnext[v]])
        side_ok = o1 * o2 > 0
        if not side_ok:
            if (o1 == 0 or o2 == 0) and v + 1 == u0_site:
                engine.report(f"query {qf}: root vertex {v} collinear with its edge")
                side_ok = True
            else:
                continue
        if not dom.visible(q, vp):
            continue
        d = (vf[0] - qf[0], vf[1] - qf[1])
        t, idx, code = kernels.ray_scan(vf[0], vf[1], d[0], d[1], dom.edges,
                                        1e-12 * dom.scale)
        if idx < 0:
            continue
        if code == 2 and strict:
            raise DegenerateQuery(f"grazing window ray at vertex {v} for {qf}")
        far = (vf[0] + t * d[0], vf[1] + t * d[1])
        snapped = dom.snap_inside(far)
        if snapped is None:
            engine.report(f"query {qf}: window far point {far} unsnappable")
            continue
        out.append(Window(u_vid=v, u=vf, far=snapped,
                          angle=math.atan2(d[1], d[0]) % (2 * math.pi)))
    # drop collinear duplicates, keeping the nearer vertex
    out.sort(key=lambda w: (w.angle, (w.u[0] - qf[0]) ** 2 + (w.u[1] - qf[1]) ** 2))
    dedup = []
    for w in out:
        if dedup and abs((w.angle - dedup[-1].angle + math.pi) % (2 * math.pi)
                         - math.pi) < 1e-12:
            engine.report(f"query {qf}: collinear windows at {w.u} dropped")
            continue
        dedup.append(w)
    u0_vid = u0_site - 1
    root_idx = next((k for k, w in enumerate(dedup) if w.u_vid == u0_vid), -1)
    if root_idx < 0:
        if strict:
            raise DegenerateQuery(f"root vertex {u0_vid} defines no window for {qf}")
        # force the root window (possible under collinear degeneracy)
        vp = tuple(dom.vertices[u0_vid])
        vf = (float(vp[0]), float(vp[1]))
        d = (vf[0] - qf[0], vf[1] - qf[1])
        t, idx, code = kernels.ray_scan(vf[0], vf[1], d[0], d[1], dom.edges,
                                        1e-12 * dom.scale)
        far = (vf[0] + t * d[0], vf[1] + t * d[1]) if idx >= 0 else vf
        far = dom.snap_inside(far) or vf
        dedup.append(Window(u_vid=u0_vid, u=vf, far=far,
                            angle=math.atan2(d[1], d[0]) % (2 * math.pi)))
        root_idx = len(dedup) - 1
        engine.report(f"query {qf}: root window forced for vertex {u0_vid}")
    return dedup, root_idx, u0_site


# ---------------------------------------------------------------------------
# f-map: canonical-cycle ordering of geodesics around the source


class CycleOrder:
    """Circular order of (root, direction) slots around the source, from the
    planar shortest-path tree with per-node angular sectors."""

    def __init__(self, spt):
        self.spt = spt
        self.tokens = {}
        self.ref_angle = {}
        n = 0
        xy = spt.xy

        def ang(a, b):
            return math.atan2(xy[b][1] - xy[a][1], xy[b][0] - xy[a][0])

        order = []

        def rec(v):
            kids = spt.children[v]
            if v == 0:
                ref = ang(0, kids[0]) if kids else 0.0
            else:
                ref = ang(v, int(spt.parent[v]))
            self.ref_angle[v] = ref
            kk = sorted(kids, key=lambda c: (ang(v, c) - ref) % (2 * math.pi))
            self.kids_sorted[v] = kk
            if v == 0:
                for i, c in enumerate(kk):
                    if i > 0:
                        order.append((v, i))
                    rec(c)
                order.append((v, len(kk)))
            else:
                for i, c in enumerate(kk):
                    order.append((v, i))
                    rec(c)
                order.append((v, len(kk)))

        self.kids_sorted = {}
        rec(0)
        self.order = order
        self.pos = {tok: i for i, tok in enumerate(order)}
        self.ntok = max(len(order), 1)

    def key(self, root_site, target):
        """Cycle key of the geodesic ending with segment root -> target."""
        spt = self.spt
        xy = spt.xy[root_site]
        d = (float(target[0]) - xy[0], float(target[1]) - xy[1])
        a = math.atan2(d[1], d[0])
        rel = (a - self.ref_angle[root_site]) % (2 * math.pi)
        kids = self.kids_sorted[root_site]
        slot = 0
        for c in kids:
            ca = math.atan2(spt.xy[c][1] - xy[1], spt.xy[c][0] - xy[0])
            crel = (ca - self.ref_angle[root_site]) % (2 * math.pi)
            if crel <= rel:
                slot += 1
            else:
                break
        if root_site == 0:
            slot = max(slot, 1)
        tok = (root_site, slot)
        dist = math.hypot(d[0], d[1])
        return (self.pos[tok], rel, -dist)


def order_after(keys, anchor_key, ntok, ccw=True):
    """Indices sorted cyclically after anchor_key (ccw) or before (cw)."""
    def cyc(k):
        off = (k[0] - anchor_key[0]) % ntok
        if off == 0:
            after = k[1:] > anchor_key[1:]
            return (0 if after else ntok, k[1], k[2])
        return (off, k[1], k[2])

    idx = sorted(range(len(keys)), key=lambda i: cyc(keys[i]))
    if not ccw:
        idx = idx[::-1]
    return idx


# ---------------------------------------------------------------------------
# bundles (the recursive pruning structure, pointer-level per the data
# structure of the bundle tree; the range index is an ordered suffix stack)


class BNode:
    __slots__ = ("idx", "left", "right", "front", "rear")

    def __init__(self, idx):
        self.idx = idx          # window order-index; wrap index for internal
        self.left = None
        self.right = None
        self.front = None       # leftmost child
        self.rear = None        # rightmost child

    @property
    def is_leaf(self):
        return self.front is None

    def post_indices(self):
        out = []
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                out.append(node.idx)
                continue
            stack.append((node, True))
            c = node.rear
            while c is not None:
                stack.append((c, False))
                c = c.left
        return out


class BundleSeq:
    """Top-level bundle list (children of gamma) + the f-range suffix index."""

    def __init__(self, fvals, audit=False):
        self.f = fvals              # f[order_index] = original angular index
        self.front = None
        self.rear = None
        self.tf = []                # [(fmin, fmax, node)] in order
        self.audit = audit
        self.inserted = set()
        self.removed = set()
        self.pruned_full = set()    # order-indices whose windows died entirely

    # -- structural helpers --------------------------------------------------

    def top_level(self):
        out = []
        c = self.front
        while c is not None:
            out.append(c)
            c = c.right
        return out

    def fmin(self, node):
        return self.f[node.idx]

    def fmax(self, node):
        return max(self.f[i] for i in node.post_indices())

    def append_atomic(self, order_idx):
        node = BNode(order_idx)
        self._append_top(node)
        self.tf.append((self.f[order_idx], self.f[order_idx], node))
        self.inserted.add(order_idx)
        self._audit()
        return node

    def _append_top(self, node):
        node.left = self.rear
        node.right = None
        if self.rear is not None:
            self.rear.right = node
        self.rear = node
        if self.front is None:
            self.front = node

    def find_beta(self, fi):
        """Number of leading bundles with f_max < fi."""
        lo, hi = 0, len(self.tf)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.tf[mid][1] < fi:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def remove_leaf(self, node, parent_front_rear):
        """Unlink a top-level leaf node."""
        l, r = node.left, node.right
        if l is not None:
            l.right = r
        if r is not None:
            r.left = l
        if self.front is node:
            self.front = r
        if self.rear is node:
            self.rear = l
        self.removed.add(node.idx)

    def wrap_index_removal(self, node):
        """Replace an internal top-level node by its children (wrap removed)."""
        first, last = node.front, node.rear
        l, r = node.left, node.right
        first.left = l
        last.right = r
        if l is not None:
            l.right = first
        else:
            self.front = first
        if r is not None:
            r.left = last
        else:
            self.rear = last
        self.removed.add(node.idx)
        return first

    def bundle_creation(self, mu1, order_idx):
        """Wrap mu1..rear into a new composite with wrap index order_idx."""
        mu2 = self.rear
        mu3 = BNode(order_idx)
        mu3.front = mu1
        mu3.rear = mu2
        mu4 = mu1.left
        mu3.left = mu4
        mu3.right = None
        if mu4 is not None:
            mu4.right = mu3
        else:
            self.front = mu3
        self.rear = mu3
        mu1.left = None
        self.inserted.add(order_idx)
        return mu3

    def update_tf_suffix(self, beta, node):
        fmax = self.tf[-1][1] if len(self.tf) > beta else self.f[node.idx]
        del self.tf[beta:]
        fmin = self.f[node.idx]
        if node.is_leaf:
            fmax = self.f[node.idx]
        self.tf.append((fmin, fmax, node))
        self._audit()

    def _audit(self):
        if not self.audit:
            return
        tops = self.top_level()
        assert len(self.tf) == len(tops), "tf / bundle list length mismatch"
        prev_max = -1
        for (fmin, fmax, node), top in zip(self.tf, tops):
            assert node is top, "tf cross-link inconsistent"
            post = top.post_indices()
            assert post == sorted(post), f"bundle post-order not sorted: {post}"
            fs = [self.f[i] for i in post]
            assert fmin == min(fs) and fmax == max(fs), "tf range wrong"
            if not top.is_leaf:
                assert self.f[top.idx] == min(fs), "wrap index is not f-min"
            assert fmin > prev_max, "B-property f_max < f_min violated"
            prev_max = fmax


# ---------------------------------------------------------------------------
# one side of the pipeline


class SideRun:
    def __init__(self, engine, q, windows, root_idx, side, audit=False,
                 base_angle=None):
        self.engine = engine
        self.q = (float(q[0]), float(q[1]))
        self.side = side                  # 'left' | 'right'
        self.audit = audit
        self.stats = {"sp_queries": 0, "range_queries": 0, "region_calls": 0}
        w0 = windows[root_idx] if root_idx >= 0 else None
        others = [w for k, w in enumerate(windows) if k != root_idx]
        base = w0.angle if w0 is not None else (base_angle or 0.0)
        if side == "left":
            others.sort(key=lambda w: (base - w.angle) % (2 * math.pi))   # cw
        else:
            others.sort(key=lambda w: (w.angle - base) % (2 * math.pi))   # ccw
        self.windows = others             # angular order w_1..w_k for this side
        self.k = len(others)
        spm = engine.spm
        self.far_roots = []
        self.far_keys = []
        for w in others:
            val, site = spm.dmin(w.far)
            self.far_roots.append(site)
            self.far_keys.append(engine.cycle.key(site, w.far))
        # anchor: the geodesic to q itself
        if w0 is not None:
            u0_site = w0.u_vid + 1
        else:
            u0_site = spm.dmin(q)[1]
        self.q_key = engine.cycle.key(u0_site, self.q)
        order = order_after(self.far_keys, self.q_key, engine.cycle.ntok,
                            ccw=(side == "left"))
        # f maps position -> angular window index (1-based positions)
        self.f_of_pos = order             # position p (0-based) -> window idx
        self.pos_of_win = [0] * self.k
        for p, wi in enumerate(order):
            self.pos_of_win[wi] = p
        self.pruned_windows = set()
        self.pruned_prefix = {}           # win idx -> crossing point p (qp pruned)
        self._z_lift = None

    def lift_regions(self, zq, z_of_win):
        """Monotone lift of region indices along the processing order, so
        ranges anchored at the query's region are honest integer intervals
        even when a block of same-region paths straddles the anchor."""
        h = max(len(self.engine.decomp.regions), 1)
        lift = {}
        prev = zq
        for p in range(self.k):
            z = z_of_win(self.f_of_pos[p])
            if self.side == "left":
                nxt = prev + ((z - prev) % h)
            else:
                nxt = prev - ((prev - z) % h)
            lift[p] = nxt
            prev = nxt
        self._z_lift = lift
        self._zq = zq
        self._h = h
        return lift

    # -- containment (Lemma 9/10 machinery) ----------------------------------

    def _contains(self, wi, wj):
        """Is q_{wi} on the geodesic to q_{wj}?"""
        spm = self.engine.spm
        spt = spm.spt
        pi_pt = self.windows[wi].far
        ri = self.far_roots[wi]
        rj = self.far_roots[wj]
        tol = 1e-9 * self.engine.dom.scale
        if ri == rj:
            root = spt.xy[ri]
            return _on_segment_tol(root, self.windows[wj].far, pi_pt, tol)
        # is pi_pt on an SPT edge whose far endpoint is an ancestor of rj?
        for v in range(1, spt.nsites):
            p = int(spt.parent[v])
            if _on_segment_tol(spt.xy[p], spt.xy[v], pi_pt, tol):
                if spt.lca.is_ancestor(v, rj):
                    return True
        return False

    def stack_prune(self):
        """Lemma-10 stack pass; prunes windows whose far point lies on an
        earlier/later geodesic."""
        stack = []
        pushes = 0
        for p in range(self.k):
            wi = self.f_of_pos[p]
            while True:
                if not stack:
                    stack.append(p)
                    pushes += 1
                    break
                m = stack[-1]
                wm = self.f_of_pos[m]
                if not self._contains(wi, wm):
                    stack.append(p)
                    pushes += 1
                    break
                if self._win_lt(wi, wm):
                    self.pruned_windows.add(wm)
                    stack.pop()
                else:
                    self.pruned_windows.add(wi)
                    break
        self.stack_ops = pushes
        return [p for p in stack]

    def _win_lt(self, wa, wb):
        return wa < wb

    # -- bundle pruning --------------------------------------------------------

    def _crosses(self, path_win, seg_win):
        """Does the geodesic to q_{path_win} intersect window seg_win?"""
        self.stats["sp_queries"] += 1
        w = self.windows[seg_win]
        t = self.windows[path_win].far
        pt = self.engine.sp_index.point_query(
            t, self.q, w.far, root_site=self.far_roots[path_win])
        return pt

    def bundle_prune(self, surviving_positions):
        # bundle items are processing-order positions p; their f value is the
        # window's angular index (1-based)
        positions = surviving_positions
        f = {p: self.f_of_pos[p] + 1 for p in positions}

        def crosses(stored_pos, new_pos):
            return self._crosses(self.f_of_pos[stored_pos],
                                 self.f_of_pos[new_pos]) is not None

        def on_prune(pos):
            self.pruned_windows.add(self.f_of_pos[pos])

        self.B = process_bundles(positions, f, crosses, on_prune,
                                 audit=self.audit)

    # -- closest scan -----------------------------------------------------------

    def closest_scan(self, zq, z_of_win):
        """Run path(B_b, .) over the final bundles; returns best candidate."""
        self.lift_regions(zq, z_of_win)
        best = (math.inf, None, None, -1)
        prev_last_pos = None
        for node in self.B.top_level():
            z_from = self._zq if prev_last_pos is None else self._z_lift[prev_last_pos]
            cand = self._path(node, z_from)
            if cand is not None and cand[0] < best[0]:
                best = cand
            prev_last_pos = node.idx
        return best

    def _path(self, node, z_from):
        best = None
        j_pos = node.idx
        wj = self.f_of_pos[j_pos]
        z_to = self._z_lift[j_pos]
        if node.is_leaf:
            return self._region_scan(z_from, z_to, wj)
        # composite: range query to skip regions handled by siblings
        self.stats["range_queries"] += 1
        w = self.windows[wj]
        h = self._h
        lo_n, hi_n = z_from % h, z_to % h
        span = abs(z_to - z_from)
        if span >= h:
            rng = ((hi_n + 1) % h, hi_n)
        else:
            rng = (lo_n, hi_n)
        if self.side == "left":
            zn = self.engine.range_index.query(rng[0], rng[1], self.q, w.far,
                                               want="max")
        else:
            zn = self.engine.range_index.query(rng[1], rng[0], self.q, w.far,
                                               want="min")
        if zn is None:
            zij = z_from
        elif self.side == "left":
            zij = z_from + ((zn - z_from) % h)
            zij = min(zij, z_to)
        else:
            zij = z_from - ((z_from - zn) % h)
            zij = max(zij, z_to)
        best = self._region_scan(z_from, zij, wj)
        prev_last = None
        c = node.front
        first = True
        while c is not None:
            zf = zij if first else self._z_lift[prev_last]
            cand = self._path(c, zf)
            if cand is not None and (best is None or cand[0] < best[0]):
                best = cand
            prev_last = c.idx
            first = False
            c = c.right
        return best

    def _region_scan(self, z_from, z_to, win_idx):
        """regionProcess over lifted regions z_from..z_to in side order."""
        engine = self.engine
        h = self._h
        w = self.windows[win_idx]
        best = None
        step = 1 if self.side == "left" else -1
        r = z_from
        guard = 0
        while True:
            cand = engine.region_process(r % h, self.q, w.far, self.stats)
            if cand is not None and (best is None or cand[0] < best[0]):
                best = (cand[0], cand[1], cand[2], win_idx)
            if r == z_to or guard > h:
                break
            r += step
            guard += 1
        return best




def process_bundles(positions, f, crosses, on_prune, audit=False):
    """Run the bundle maintenance loop over items in processing order.

    `f` maps item -> its angular rank; `crosses(stored, new)` answers whether
    the stored item's geodesic meets the new item's window; fully pruned items
    are reported through `on_prune`."""
    B = BundleSeq(f, audit=audit)

    def prune(node, new_pos):
        # returns (fully_removed, node_where_stopped)
        if node.is_leaf:
            if crosses(node.idx, new_pos):
                on_prune(node.idx)
                B.remove_leaf(node, None)
                return True, node
            return False, node
        if not crosses(node.idx, new_pos):
            return False, node
        on_prune(node.idx)
        first = B.wrap_index_removal(node)
        cur = first
        while cur is not None:
            res, stop = prune(cur, new_pos)
            if not res:
                return False, stop
            cur = stop.right
        return True, node

    for p in positions:
        fi = f[p]
        beta = B.find_beta(fi)
        if beta == len(B.tf):
            B.append_atomic(p)
            continue
        if B.tf[beta][0] < fi:
            on_prune(p)          # Lemma-13 case: the new window dies whole
            continue
        node = B.tf[beta][2]
        mu1 = None
        all_true = True
        cur = node
        while cur is not None:
            res, stop_node = prune(cur, p)
            if not res:
                mu1 = stop_node
                all_true = False
                break
            cur = stop_node.right
        if all_true:
            newnode = BNode(p)
            B._append_top(newnode)
            B.inserted.add(p)
        else:
            newnode = B.bundle_creation(mu1, p)
        B.update_tf_suffix(beta, newnode)
    return B


def _on_segment_tol(a, b, p, tol):
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    px, py = float(p[0]), float(p[1])
    dx, dy = bx - ax, by - ay
    dd = dx * dx + dy * dy
    if dd == 0:
        return math.hypot(px - ax, py - ay) <= tol
    t = ((px - ax) * dx + (py - ay) * dy) / dd
    if t < -tol or t > 1 + tol:
        return False
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy)) <= tol
