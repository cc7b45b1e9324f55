"""Rotation-system face extraction for planar graphs with curved edges.

Edges carry outgoing direction vectors at both endpoints; faces are traced
with their interior on the left (ccw rotation order, clockwise-next rule),
which makes slit (dangling-tree) edges appear twice in one face walk.
"""

from __future__ import annotations

import math


class PlanarGraph:
    def __init__(self):
        self.points = {}         # node id -> (x, y)
        self.edges = []          # (n0, n1, dir0, dir1, payload)
        self.incident = {}       # node -> [(angle, stub)], stub = (edge, end)

    def add_node(self, nid, point):
        if nid not in self.points:
            self.points[nid] = (float(point[0]), float(point[1]))
            self.incident[nid] = []

    def add_edge(self, n0, n1, dir0, dir1, payload=None):
        eid = len(self.edges)
        self.edges.append((n0, n1, dir0, dir1, payload))
        self.incident[n0].append((math.atan2(dir0[1], dir0[0]), (eid, 0)))
        self.incident[n1].append((math.atan2(dir1[1], dir1[0]), (eid, 1)))
        return eid

    def _prepare(self):
        self._order = {}
        self._pos = {}
        for nid, stubs in self.incident.items():
            stubs = sorted(stubs, key=lambda t: t[0])
            order = [s for _, s in stubs]
            self._order[nid] = order
            for k, s in enumerate(order):
                self._pos[s] = k

    def next_half_edge(self, eid, fwd):
        """Successor of half-edge (eid, fwd) in its face walk."""
        n0, n1, d0, d1, _ = self.edges[eid]
        head = n1 if fwd else n0
        rev_stub = (eid, 1 if fwd else 0)
        order = self._order[head]
        k = self._pos[rev_stub]
        nxt = order[(k - 1) % len(order)]
        ne, nend = nxt
        return ne, nend == 0

    def faces(self):
        """List of faces; each face is a list of (edge_id, forward) half-edges."""
        self._prepare()
        seen = set()
        out = []
        for eid in range(len(self.edges)):
            for fwd in (True, False):
                if (eid, fwd) in seen:
                    continue
                walk = []
                cur = (eid, fwd)
                while cur not in seen:
                    seen.add(cur)
                    walk.append(cur)
                    cur = self.next_half_edge(*cur)
                out.append(walk)
        return out

    def half_edge_nodes(self, eid, fwd):
        n0, n1, _, _, _ = self.edges[eid]
        return (n0, n1) if fwd else (n1, n0)

    def face_nodes(self, face):
        return [self.half_edge_nodes(e, f)[0] for e, f in face]

    def face_corner_dirs(self, face):
        """Per face vertex: (node, incoming reversed dir, outgoing dir)."""
        out = []
        m = len(face)
        for i in range(m):
            e_in, f_in = face[(i - 1) % m]
            e_out, f_out = face[i]
            node = self.half_edge_nodes(e_out, f_out)[0]
            n0, n1, d0, d1, _ = self.edges[e_in]
            din = d1 if f_in else d0      # direction pointing back along arrival
            n0o, n1o, d0o, d1o, _ = self.edges[e_out]
            dout = d0o if f_out else d1o
            out.append((node, din, dout))
        return out


def corner_probe(point, din, dout, eps):
    """A point slightly inside the face corner wedge between dout and din (ccw)."""
    a0 = math.atan2(dout[1], dout[0])
    a1 = math.atan2(din[1], din[0])
    span = (a1 - a0) % (2 * math.pi)
    if span == 0:
        span = 2 * math.pi
    a = a0 + 0.5 * span
    return (point[0] + eps * math.cos(a), point[1] + eps * math.sin(a))


def face_area(points):
    s = 0.0
    for i, (x0, y0) in enumerate(points):
        x1, y1 = points[(i + 1) % len(points)]
        s += x0 * y1 - y0 * x1
    return 0.5 * s
