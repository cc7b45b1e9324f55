"""Deterministic SVG rendering of domains, maps, and query answers."""

from __future__ import annotations

import math

from . import spm as spm_mod

LAYERS = ("domain", "spm", "decomp", "windows", "corridor", "answer")


def _f(x):
    return f"{float(x):.6f}"


def _pts(points):
    return " ".join(f"{_f(x)},{_f(y)}" for x, y in points)


def render_svg(engine, layers=("domain",), query=None, answer=None, windows=None):
    dom = engine.dom
    x0, y0, x1, y1 = dom.bbox
    m = 0.05 * dom.scale
    W = (x1 - x0) + 2 * m
    H = (y1 - y0) + 2 * m
    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{_f(x0 - m)} {_f(y0 - m)} {_f(W)} {_f(H)}" '
        f'width="800" height="{_f(800 * H / max(W, 1e-9))}">')
    out.append(f'<g transform="translate(0,{_f(y0 + y1)}) scale(1,-1)">')
    sw = _f(dom.scale / 400)
    if "corridor" in layers and engine.corridor is not None:
        for b in engine.corridor.bays:
            out.append(f'<polygon class="bay" points="{_pts(b.polygon)}" '
                       f'fill="#cfe8ff" stroke="none"/>')
        for c in engine.corridor.canals:
            out.append(f'<polygon class="canal" points="{_pts(c.polygon)}" '
                       f'fill="#ffe3c2" stroke="none"/>')
        for p in engine.corridor.bays + engine.corridor.canals:
            for (g0, g1) in p.gates:
                out.append(f'<line class="gate" x1="{_f(g0[0])}" y1="{_f(g0[1])}" '
                           f'x2="{_f(g1[0])}" y2="{_f(g1[1])}" '
                           f'stroke="#ff8800" stroke-width="{sw}"/>')
    if "domain" in layers or True:
        out.append(f'<polygon class="outer" points="{_pts(dom.outer)}" '
                   f'fill="none" stroke="#222222" stroke-width="{sw}"/>')
        for h in dom.holes:
            out.append(f'<polygon class="hole" points="{_pts(h)}" '
                       f'fill="#dddddd" stroke="#222222" stroke-width="{sw}"/>')
        out.append(f'<circle class="source" cx="{_f(dom.sxy[0])}" cy="{_f(dom.sxy[1])}" '
                   f'r="{_f(dom.scale / 150)}" fill="#009900"/>')
    if "spm" in layers:
        dump = spm_mod.spm_dump(engine.spm)
        for curve in dump["supercurves"]:
            out.append(f'<polyline class="bisector" points="{_pts(curve)}" '
                       f'fill="none" stroke="#cc0000" stroke-width="{sw}"/>')
        for p in dump["triples"]:
            out.append(f'<circle class="triple" cx="{_f(p[0])}" cy="{_f(p[1])}" '
                       f'r="{_f(dom.scale / 250)}" fill="#cc0000"/>')
        for seg in dump["extensions"]:
            out.append(f'<polyline class="extension" points="{_pts(seg)}" fill="none" '
                       f'stroke="#cc8888" stroke-width="{sw}" stroke-dasharray="2,2"/>')
    if "decomp" in layers:
        g = engine.decomp.graph
        for (n0, n1, d0, d1, payload) in g.edges:
            if payload[0] != "tv":
                continue
            a = g.points[n0]
            b = g.points[n1]
            out.append(f'<line class="tv" x1="{_f(a[0])}" y1="{_f(a[1])}" '
                       f'x2="{_f(b[0])}" y2="{_f(b[1])}" '
                       f'stroke="#3355cc" stroke-width="{sw}"/>')
        for c in engine.decomp.anchors.copies:
            out.append(f'<circle class="anchor" cx="{_f(c.point[0])}" '
                       f'cy="{_f(c.point[1])}" r="{_f(dom.scale / 250)}" fill="#3355cc"/>')
    if "windows" in layers and windows:
        for w in windows:
            out.append(f'<line class="window" x1="{_f(w.u[0])}" y1="{_f(w.u[1])}" '
                       f'x2="{_f(w.far[0])}" y2="{_f(w.far[1])}" '
                       f'stroke="#884499" stroke-width="{sw}"/>')
    if query is not None:
        out.append(f'<circle class="query" cx="{_f(query[0])}" cy="{_f(query[1])}" '
                   f'r="{_f(dom.scale / 150)}" fill="#884499"/>')
    if "answer" in layers and answer is not None:
        if answer.path and len(answer.path) > 1:
            out.append(f'<polyline class="witness" points="{_pts(answer.path)}" '
                       f'fill="none" stroke="#009900" stroke-width="{sw}"/>')
        out.append(f'<circle class="argmin" cx="{_f(answer.point[0])}" '
                   f'cy="{_f(answer.point[1])}" r="{_f(dom.scale / 180)}" fill="#006600"/>')
    out.append("</g></svg>")
    return "\n".join(out) + "\n"
