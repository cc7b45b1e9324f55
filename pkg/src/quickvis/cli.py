"""Command-line front end: build | query | oracle | bench | render | gen.

JSON results go to stdout, human-readable notes to stderr; SVG to a named
file. Exit codes: 0 ok, 1 parse/validation error, 2 degenerate input under
--strict, 3 diff mismatch.
"""

from __future__ import annotations

import argparse
import json
import math
import pickle
import random
import sys
import time

from . import kernels
from .corridor import build_corridor_structure, quickest_visibility_query_fast
from .domain import load_domain, save_domain
from .engine import Engine, EngineConfig, build_engine
from .errors import DegenerateInput, ParseError, QuickvisError, ValidationError
from .generate import gen_domain, random_free_point, random_free_segment
from .oracle import oracle_qvq, oracle_seg_dist, oracle_visibility_polygon


def _load(path):
    with open(path, "r", encoding="utf-8") as f:
        return load_domain(f.read())


def _engine_for(args, dom):
    cfg = EngineConfig(gp_mode="error" if getattr(args, "strict", False) else
                       ("perturb" if getattr(args, "perturb", False) else "auto"),
                       audit=getattr(args, "audit", False))
    return build_engine(dom, cfg)


def cmd_build(args):
    dom = _load(args.domain)
    eng = _engine_for(args, dom)
    build_corridor_structure(eng)
    rep = eng.build_report()
    if args.cache:
        with open(args.cache, "wb") as f:
            pickle.dump(eng, f)
        rep["cache"] = args.cache
    json.dump(rep, sys.stdout, indent=1, default=str)
    print()
    return 0


def _restore_or_build(args):
    if getattr(args, "cache", None):
        try:
            with open(args.cache, "rb") as f:
                return pickle.load(f)
        except (OSError, pickle.PickleError):
            pass
    dom = _load(args.domain)
    return _engine_for(args, dom)


def cmd_query(args):
    eng = _restore_or_build(args)
    tol = 1e-9
    out = {}
    if args.point:
        q = tuple(float(v) for v in args.point.split(","))
        if args.mode in ("slow", "diff"):
            out["slow"] = eng.quickest_visibility_query(q).as_json()
        if args.mode in ("fast", "diff"):
            out["fast"] = quickest_visibility_query_fast(eng, q).as_json()
        if args.mode in ("oracle", "diff"):
            rep = oracle_qvq(eng.dom, eng.spm, q)
            out["oracle"] = rep.as_json()
    elif args.segment:
        x1, y1, x2, y2 = (float(v) for v in args.segment.split(","))
        if args.mode in ("slow", "fast", "diff"):
            ln, pt, path, st = eng.segment_query((x1, y1), (x2, y2))
            out["engine"] = {"length": ln, "point": [pt[0], pt[1]],
                             "path": [[p[0], p[1]] for p in path],
                             "instrumentation": {
                                 "cells_visited": len(set(st["cells"])),
                                 "subsegments": st["subsegments"]}}
        if args.mode in ("oracle", "diff"):
            out["oracle"] = oracle_seg_dist(eng.dom, eng.spm, (x1, y1), (x2, y2)).as_json()
    elif args.star:
        with open(args.star, "r", encoding="utf-8") as f:
            star = json.load(f)
        segs = [((s[0][0], s[0][1]), (s[1][0], s[1][1])) for s in star["segments"]]
        out["engine"] = eng.concurrent_segments_query(segs).as_json()
        if args.mode in ("oracle", "diff"):
            best = None
            for a, b in segs:
                rep = oracle_seg_dist(eng.dom, eng.spm, a, b)
                if best is None or rep.value < best.value:
                    best = rep
            out["oracle"] = best.as_json()
    else:
        print("query needs --point, --segment, or --star", file=sys.stderr)
        return 1
    json.dump(out, sys.stdout, indent=1)
    print()
    if args.mode == "diff":
        vals = []
        for key in ("slow", "fast", "engine"):
            if key in out:
                vals.append(out[key].get("length"))
        ov = out.get("oracle", {}).get("value")
        if ov is not None:
            for v in vals:
                if abs(v - ov) > tol * (1 + abs(ov)):
                    print(f"diff FAILED: {v} vs oracle {ov}", file=sys.stderr)
                    return 3
        print("diff ok", file=sys.stderr)
    return 0


def cmd_oracle(args):
    eng = _restore_or_build(args)
    out = {}
    if args.point:
        q = tuple(float(v) for v in args.point.split(","))
        out = oracle_qvq(eng.dom, eng.spm, q).as_json()
        poly, wins, K = oracle_visibility_polygon(eng.dom, q)
        out["K"] = K
        out["windows"] = [{"u": [w.u[0], w.u[1]], "far": [w.qu[0], w.qu[1]]}
                          for w in wins]
    elif args.segment:
        x1, y1, x2, y2 = (float(v) for v in args.segment.split(","))
        out = oracle_seg_dist(eng.dom, eng.spm, (x1, y1), (x2, y2)).as_json()
    else:
        print("oracle needs --point or --segment", file=sys.stderr)
        return 1
    json.dump(out, sys.stdout, indent=1)
    print()
    return 0


def cmd_render(args):
    from .qvq import compute_windows
    from .render import LAYERS, render_svg
    eng = _restore_or_build(args)
    layers = [l.strip() for l in args.layers.split(",") if l.strip()]
    for l in layers:
        if l not in LAYERS:
            print(f"unknown layer {l!r} (choose from {', '.join(LAYERS)})",
                  file=sys.stderr)
            return 1
    if "corridor" in layers and eng.corridor is None:
        build_corridor_structure(eng)
    query = answer = windows = None
    if args.query:
        query = tuple(float(v) for v in args.query.split(","))
        answer = eng.quickest_visibility_query(query)
        wins, ridx, u0 = compute_windows(eng, query)
        windows = wins
    svg = render_svg(eng, layers=layers, query=query, answer=answer,
                     windows=windows)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(svg)
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


def cmd_gen(args):
    dom = gen_domain(n=args.n, holes=args.holes, seed=args.seed)
    dom.save(args.out)
    print(f"wrote {args.out} (n={dom.n}, h={dom.h})", file=sys.stderr)
    return 0


def cmd_bench(args):
    if args.kernel_compare:
        return _bench_kernels(args)
    if args.domain:
        doms = [(args.domain, _load(args.domain))]
    else:
        doms = []
        for spec in args.gen or ["n=30,holes=3,seed=1"]:
            kv = dict(p.split("=") for p in spec.split(","))
            doms.append((spec.replace(",", ";"), gen_domain(n=int(kv.get("n", 30)),
                                          holes=int(kv.get("holes", 2)),
                                          seed=int(kv.get("seed", 0)))))
    rng = random.Random(args.seed)
    cols = ["domain", "n", "h", "anchors", "kind", "k_or_len",
            "cells_visited", "subsegments", "sp_queries", "range_queries",
            "region_calls"]
    if args.timings:
        cols.append("micros")
    print(",".join(cols))
    for name, dom in doms:
        try:
            eng = build_engine(dom, EngineConfig())
        except DegenerateInput as e:
            print(f"skip {name}: {e}", file=sys.stderr)
            continue
        for _ in range(args.queries):
            if rng.random() < 0.5:
                a, b = random_free_segment(dom, rng)
                t0 = time.perf_counter()
                ln, pt, path, st = eng.segment_query(a, b)
                dt = time.perf_counter() - t0
                row = [name, dom.n, dom.h, eng.decomp.anchors.hstar, "segment",
                       f"{ln:.9g}", len(set(st["cells"])), st["subsegments"],
                       0, 0, 0]
            else:
                q = random_free_point(dom, rng)
                t0 = time.perf_counter()
                ans = eng.quickest_visibility_query(q)
                dt = time.perf_counter() - t0
                row = [name, dom.n, dom.h, eng.decomp.anchors.hstar, "qvq",
                       ans.stats.get("k", 0), 0, 0,
                       ans.stats.get("sp_queries", 0),
                       ans.stats.get("range_queries", 0),
                       ans.stats.get("region_calls", 0)]
            if args.timings:
                row.append(int(dt * 1e6))
            print(",".join(str(v) for v in row))
    return 0


def _bench_kernels(args):
    import numpy as np
    from .kernels import get_backend
    dom = gen_domain(n=40, holes=3, seed=args.seed)
    edges = dom.edges
    ring_of = dom.ring_of
    rng = random.Random(args.seed)
    pts = [(rng.uniform(*dom.bbox[0::2]), rng.uniform(*dom.bbox[1::2]))
           for _ in range(2000)]
    print("backend,op,calls,seconds")
    for name in ("numba", "numpy"):
        try:
            impl = get_backend(name)
        except ImportError:
            continue
        impl.visible_code(0.0, 0.0, 1.0, 1.0, edges, ring_of, dom.nrings)
        t0 = time.perf_counter()
        for (x, y) in pts:
            impl.visible_code(dom.sxy[0], dom.sxy[1], x, y, edges, ring_of,
                              dom.nrings)
        print(f"{name},visible_code,{len(pts)},{time.perf_counter() - t0:.6f}")
        t0 = time.perf_counter()
        for (x, y) in pts:
            impl.point_free_code(x, y, edges, ring_of, dom.nrings)
        print(f"{name},point_free,{len(pts)},{time.perf_counter() - t0:.6f}")
        t0 = time.perf_counter()
        for (x, y) in pts[:500]:
            impl.ray_scan(x, y, 0.7, 0.3, edges, 0.0)
        print(f"{name},ray_scan,500,{time.perf_counter() - t0:.6f}")
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="quickvis",
                                 description="quickest-visibility and "
                                 "shortest-path-to-segment queries")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("build", help="build all structures, print a report")
    p.add_argument("domain")
    p.add_argument("--cache", help="write a pickled engine here")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--perturb", action="store_true")
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("query", help="answer a query")
    p.add_argument("domain")
    p.add_argument("--point")
    p.add_argument("--segment")
    p.add_argument("--star")
    p.add_argument("--mode", choices=["fast", "slow", "oracle", "diff"],
                   default="fast")
    p.add_argument("--cache")
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("oracle", help="brute-force reference answers")
    p.add_argument("domain")
    p.add_argument("--point")
    p.add_argument("--segment")
    p.add_argument("--cache")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("render", help="write an SVG")
    p.add_argument("domain")
    p.add_argument("--layers", default="domain")
    p.add_argument("--query")
    p.add_argument("--out", default="out.svg")
    p.add_argument("--cache")
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("bench", help="CSV of instrumentation counters")
    p.add_argument("--domain")
    p.add_argument("--gen", action="append",
                   help="generator spec n=..,holes=..,seed=..")
    p.add_argument("--queries", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timings", action="store_true",
                   help="append wall-clock columns (nondeterministic)")
    p.add_argument("--kernel-compare", action="store_true")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("gen", help="write a random domain file")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--holes", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="domain.json")
    p.set_defaults(fn=cmd_gen)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except DegenerateInput as e:
        print(f"degenerate input: {e}", file=sys.stderr)
        return 2
    except QuickvisError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
