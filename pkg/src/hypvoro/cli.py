"""Command-line pipelines: sample -> tessellate -> walk/expansion, verifiers, rendering.

Exit codes: 0 success, 2 invalid input, 3 guard violation.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from typing import Any, Optional, Sequence

import numpy as np

from . import verify, walk
from .graph import DualGraph, GuardError, min_expansion
from .hypgeo import HPoint, geodesic, radius_e_to_h, radius_h_to_e
from .parallel import ENV_THREADS
from .ppp import Sample, condition_root, condition_skeleton_vertex, sample_ball
from .schemes import Scheme, ZParams, enumerate_schemes, z_process
from .tess import (
    DelaunayComplex,
    VoronoiCells,
    delaunay,
    dual_delaunay_graph,
    dual_voronoi_graph,
    voronoi_cells,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_GUARD = 3
MAX_RENDER_EDGES = 200_000
DELAUNAY_COLOR = "#1f4fd6"
VORONOI_COLOR = "#d62728"


class UsageError(ValueError):
    pass


# -- files ---------------------------------------------------------------------


def write_atomic(path: Optional[str], data: str) -> None:
    """Write through a temporary file in the target directory, then rename; '-' or None is stdout."""
    if path in (None, "-"):
        sys.stdout.write(data)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
        mask = os.umask(0)
        os.umask(mask)
        os.chmod(tmp, 0o666 & ~mask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str, what: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"--in: cannot read {what} file {path!r}: {exc.strerror}") from None


def _load_json(path: str, what: str) -> Any:
    try:
        return json.loads(_read(path, what))
    except json.JSONDecodeError as exc:
        raise UsageError(f"--in: {path!r} is not valid JSON ({exc.msg})") from None


def load_sample(path: str) -> Sample:
    return Sample.from_dict(_load_json(path, "sample"))


def load_graph(path: str) -> DualGraph:
    return DualGraph.from_dict(_load_json(path, "graph"))


def _plain(x: Any) -> Any:
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dump(obj: Any) -> str:
    # repr-based floats round-trip exactly, so reruns are byte-identical
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_plain) + "\n"


# -- SVG ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _arc_path(p: complex, q: complex) -> str:
    """Geodesic from p to q as an SVG path in a y-down frame."""
    g = geodesic(HPoint.from_complex(p), HPoint.from_complex(q))
    head = f"M{_fmt(p.real)} {_fmt(-p.imag)}"
    if g.is_diameter or not math.isfinite(g.radius) or g.radius > 1e6:
        return f"{head} L{_fmt(q.real)} {_fmt(-q.imag)}"
    cross = ((p - g.center).conjugate() * (q - g.center)).imag
    # counterclockwise in the plane is a negative sweep once y points down
    sweep = 0 if cross > 0 else 1
    r = _fmt(g.radius)
    return f"{head} A{r} {r} 0 0 {sweep} {_fmt(q.real)} {_fmt(-q.imag)}"


def voronoi_segments(cells: VoronoiCells) -> list[tuple[int, int, complex, complex]]:
    """Each shared bisector piece once, taken from the lower-numbered cell."""
    out = []
    for cell in cells.cells:
        for piece in cell.pieces:
            if piece.label >= 0 and cell.nucleus < piece.label:
                out.append((cell.nucleus, piece.label, piece.start, piece.end))
    return out


def _subsample(count: int, cap: int) -> np.ndarray:
    if count <= cap:
        return np.arange(count)
    return np.unique(np.linspace(0, count - 1, cap).round().astype(np.int64))


def render_svg(c: Optional[DelaunayComplex], cells: Optional[VoronoiCells], window_r: float,
               max_edges: int = MAX_RENDER_EDGES, size: int = 1000) -> str:
    """Delaunay edges in blue, Voronoi edges in red, window circle in black.

    Edges are geodesic arcs; when more than max_edges of a kind exist an
    evenly spaced deterministic subset is drawn.
    """
    blue: list[str] = []
    red: list[str] = []
    if c is not None and len(c.valid_edges):
        z = c.sample.z
        e = c.valid_edges
        for k in _subsample(len(e), max_edges).tolist():
            a, b = e[k]
            blue.append(_arc_path(complex(z[a]), complex(z[b])))
    if cells is not None:
        segs = voronoi_segments(cells)
        for k in _subsample(len(segs), max_edges).tolist():
            _, _, p, q = segs[k]
            red.append(_arc_path(p, q))
    ew = radius_h_to_e(window_r)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="-1.02 -1.02 2.04 2.04">',
        f'<circle id="window" cx="0" cy="0" r="{_fmt(ew)}" fill="none" stroke="#000000" stroke-width="0.002"/>',
        f'<g id="delaunay" fill="none" stroke="{DELAUNAY_COLOR}" stroke-width="0.0008">',
    ]
    lines += [f'<path d="{d}"/>' for d in blue]
    lines.append("</g>")
    lines.append(f'<g id="voronoi" fill="none" stroke="{VORONOI_COLOR}" stroke-width="0.0008">')
    lines += [f'<path d="{d}"/>' for d in red]
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# -- commands --------------------------------------------------------------------------


def _window(args) -> float:
    if args.radius_h is not None:
        r = float(args.radius_h)
        if not r > 0:
            raise UsageError(f"--radius-h={r} must be > 0")
        return r
    e = float(args.radius_e)
    if not 0 < e < 1:
        raise UsageError(f"--radius-e={e} must lie in (0, 1)")
    return radius_e_to_h(e)


def _floats(text: str, name: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{name}: empty list")
    return vals


def _positive(value: int, name: str) -> int:
    if value < 1:
        raise UsageError(f"{name}={value} must be >= 1")
    return value


def cmd_sample(args) -> str:
    r = _window(args)
    if not args.lam > 0:
        raise UsageError(f"--lambda={args.lam} must be > 0")
    s = sample_ball(args.lam, r, args.seed)
    if args.condition == "root":
        s = condition_root(s)
    elif args.condition == "skeleton":
        s = condition_skeleton_vertex(s)
    return dump(s.to_dict())


def _complex(args) -> DelaunayComplex:
    return delaunay(load_sample(args.input), core_margin_h=args.core_margin)


def cmd_tessellate(args) -> str:
    c = _complex(args)
    g = dual_voronoi_graph(c) if args.graph == "voronoi" else dual_delaunay_graph(c)
    return dump(g.to_dict())


def cmd_render(args) -> str:
    s = load_sample(args.input)
    c = delaunay(s)
    cells = voronoi_cells(c) if len(s) else None
    return render_svg(c if len(s) else None, cells, s.window_r, _positive(args.max_render_edges, "--max-render-edges"),
                      args.size)


def cmd_walk(args) -> str:
    g = load_graph(args.input)
    traces = walk.walk_ensemble(g, _positive(args.walks, "--walks"), args.steps, args.seed, threads=args.threads)
    if args.format == "csv":
        rows = ["walk,step,vertex,dist"]
        for w, t in enumerate(traces):
            rows += [f"{w},{j},{v},{d}" for j, (v, d) in enumerate(zip(t.vertices.tolist(), t.dist.tolist()))]
        return "\n".join(rows) + "\n"
    return dump({"seed": args.seed, "traces": [t.to_dict() for t in traces]})


def cmd_speed(args) -> str:
    g = load_graph(args.input)
    traces = walk.walk_ensemble(g, _positive(args.walks, "--walks"), args.steps, args.seed, threads=args.threads)
    k = args.k_eval if args.k_eval is not None else walk.choose_k_eval(traces)
    est = walk.speed_estimate(traces, _positive(k, "--k-eval"), args.seed)
    return dump({"kind": g.kind, "seed": args.seed, "walks": args.walks, **est.to_dict()})


def cmd_expansion(args) -> str:
    g = load_graph(args.input)
    return dump(min_expansion(g, m=args.m).to_dict())


def cmd_schemes(args) -> str:
    count, it = enumerate_schemes(args.k)
    out: dict[str, Any] = {"k": args.k, "count": count}
    if args.list:
        out["schemes"] = [sc.to_dict() for sc in it]
    return dump(out)


def cmd_report(args) -> str:
    rows = []
    for path in args.inputs:
        d = _load_json(path, "report")
        passed = d.get("passed")
        rows.append({"file": os.path.basename(path), "name": d.get("name", "?"),
                     "all_passed": None if passed is None else bool(all(passed))})
    return dump({"reports": rows, "all_passed": all(r["all_passed"] is not False for r in rows)})


def cmd_verify_tail(args) -> str:
    rep = verify.tail_triangle(args.lam, _floats(args.r_grid, "--r-grid"), _positive(args.trials, "--trials"),
                               args.seed, args.threads)
    return dump(rep.to_dict())


def cmd_verify_region(args) -> str:
    rep = verify.geometry_region_grid(_floats(args.x_grid, "--x-grid"), _floats(args.theta_grid, "--theta-grid"),
                                      _window(args), _positive(args.trials, "--trials"), args.seed, args.constant)
    return dump(rep.to_dict())


def cmd_verify_locus(args) -> str:
    grid, vals, passed = [], [], []
    for x in _floats(args.x_grid, "--x-grid"):
        top = 2.0 * math.asin(x)  # beyond this the locus ray misses the disk
        for j in range(args.n_alpha):
            a = top * (j + 1) / (args.n_alpha + 1)
            dev, n = verify.locus_check(x, a, args.n_probe)
            grid.append([x, a])
            vals.append(dev)
            passed.append(n > 0 and dev < args.tol)
    rep = verify.VerificationReport("locus_check", grid, vals, [None] * len(vals), [args.tol] * len(vals),
                                    passed, args.n_probe, 0)
    return dump(rep.to_dict())


def cmd_verify_ell(args) -> str:
    grid, vals = [], []
    for x in _floats(args.x_grid, "--x-grid"):
        for phi in _floats(args.phi_grid, "--phi-grid"):
            grid.append([x, phi])
            vals.append(verify.ell_formulas(x, phi).deviation)
    rep = verify.VerificationReport("ell_formulas", grid, vals, [None] * len(vals), [args.tol] * len(vals),
                                    [v < args.tol for v in vals], 0, 0)
    return dump(rep.to_dict())


def cmd_verify_phi_star(args) -> str:
    grid, vals, ratios, passed = [], [], [], []
    for x in _floats(args.x_grid, "--x-grid"):
        for th in _floats(args.theta_grid, "--theta-grid"):
            p = verify.phi_star_check(x, th)
            grid.append([x, th])
            vals.append(p.deviation)
            ratios.append(p.ratio)
            ok = p.deviation < args.tol and (args.constant is None or p.ratio <= args.constant)
            passed.append(ok)
    rep = verify.VerificationReport("phi_star_check", grid, vals, [None] * len(vals), [args.tol] * len(vals),
                                    passed, 0, 0, {"ratio": ratios, "constant": args.constant})
    return dump(rep.to_dict())


def cmd_verify_hull(args) -> str:
    return dump(verify.hull_bound_random(_positive(args.trials, "--trials"), args.seed, r_max=args.r_max).to_dict())


def cmd_verify_strong_area(args) -> str:
    rep = verify.strong_area_scan(_complex(args), args.k_max)
    return dump(rep.to_dict())


def cmd_verify_distance(args) -> str:
    g = load_graph(args.input)
    ratios = verify.distance_compare(g)
    return dump({"annulus_min_ratio": [[a, r] for a, r in ratios.items()]})


def cmd_verify_deviation(args) -> str:
    c = _complex(args)
    rows = ["r,D_r"]
    for r in _floats(args.r_grid, "--r-grid"):
        rows.append(f"{r!r},{verify.geodesic_deviation(c, r)}")
    return "\n".join(rows) + "\n"


def cmd_verify_reversibility(args) -> str:
    graphs = [load_graph(p) for p in args.inputs]
    res = walk.reversibility_test(graphs, _positive(args.trials, "--trials"), args.seed, not args.unbiased)
    return dump(res.to_dict())


def cmd_verify_boundary(args) -> str:
    g = load_graph(args.input)
    traces = walk.walk_ensemble(g, _positive(args.walks, "--walks"), args.steps, args.seed, threads=args.threads)
    osc = [walk.oscillation_profile(t) for t in traces if t.steps >= 4]
    if not osc:
        raise UsageError("--steps: no walk is long enough for an oscillation profile")
    first = float(np.median([o[0] for o in osc]))
    last = float(np.median([o[(3 * len(o)) // 4] for o in osc]))
    return dump({"median_first": first, "median_final_quarter": last,
                 "drop": first / last if last > 0 else math.inf, "walks": len(osc)})


def cmd_verify_harmonic(args) -> str:
    g = load_graph(args.input)
    traces = walk.walk_ensemble(g, _positive(args.walks, "--walks"), args.steps, args.seed, threads=args.threads)
    centers, mass = walk.harmonic_measure(traces, args.bins)
    return walk.histogram_csv(centers, mass)


def cmd_verify_z_tail(args) -> str:
    ks = [int(k) for k in _floats(args.k_grid, "--k-grid")]
    vals = []
    for k in ks:
        p = ZParams(args.alpha, args.beta, Scheme.chain(k), args.seed)
        vals.append(z_process(p, k, trials=_positive(args.trials, "--trials"), eps=args.eps).tail)
    rep = verify.VerificationReport("z_tail", ks, vals, [verify._binom_ci(round(v * args.trials), args.trials)
                                                         for v in vals],
                                    [None] * len(ks), [True] * len(ks), args.trials, args.seed,
                                    {"alpha": args.alpha, "beta": args.beta, "eps": args.eps})
    return dump(rep.to_dict())


# -- parser ------------------------------------------------------------------------------


def _add_window(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--radius-h", type=float, help="window radius, hyperbolic units")
    g.add_argument("--radius-e", type=float, help="window radius, Euclidean radius in the Poincare disk")


def _add_common(p: argparse.ArgumentParser, seed: bool = True) -> None:
    if seed:
        p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    p.add_argument("--threads", type=int, default=None, help=f"worker threads (default: ${ENV_THREADS} or 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypvoro", description="Hyperbolic Poisson-Voronoi toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample the Poisson process in a ball")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    _add_window(p)
    p.add_argument("--condition", choices=["none", "root", "skeleton"], default="root")
    _add_common(p)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("tessellate", help="Delaunay complex to a dual graph")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--graph", choices=["voronoi", "delaunay"], default="voronoi")
    p.add_argument("--core-margin", type=float, default=None)
    _add_common(p, seed=False)
    p.set_defaults(fn=cmd_tessellate)

    p = sub.add_parser("render", help="SVG of the tessellation and triangulation")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--max-render-edges", type=int, default=MAX_RENDER_EDGES)
    p.add_argument("--size", type=int, default=1000)
    _add_common(p, seed=False)
    p.set_defaults(fn=cmd_render)

    for name, fn, extra in (("walk", cmd_walk, True), ("speed", cmd_speed, False)):
        p = sub.add_parser(name, help="random walks on a dual graph" if extra else "speed estimate with CI")
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--walks", type=int, default=200)
        p.add_argument("--steps", type=int, default=1000)
        if extra:
            p.add_argument("--format", choices=["json", "csv"], default="json")
        else:
            p.add_argument("--k-eval", type=int, default=None)
        _add_common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("expansion", help="exact minimum expansion over small connected sets")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--m", type=int, default=8)
    _add_common(p, seed=False)
    p.set_defaults(fn=cmd_expansion)

    p = sub.add_parser("schemes", help="count (and list) triangulation schemes")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--list", action="store_true")
    _add_common(p, seed=False)
    p.set_defaults(fn=cmd_schemes)

    p = sub.add_parser("report", help="summarize verification reports")
    p.add_argument("inputs", nargs="+")
    _add_common(p, seed=False)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("verify-tail", help="triangle-star tail probabilities")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--r-grid", default="2,2.5,3,3.5")
    p.add_argument("--trials", type=int, default=10_000)
    _add_common(p)
    p.set_defaults(fn=cmd_verify_tail)

    p = sub.add_parser("verify-region", help="small-area circumdisk region estimate")
    p.add_argument("--x-grid", default="0.05,0.25,0.5,0.75,0.95")
    p.add_argument("--theta-grid", default="0.001,0.01,0.1")
    _add_window(p, required=False)
    p.add_argument("--trials", type=int, default=200_000)
    p.add_argument("--constant", type=float, default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_verify_region, radius_h=None, radius_e=None)

    p = sub.add_parser("verify-locus", help="constant-area locus rays")
    p.add_argument("--x-grid", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,0.95")
    p.add_argument("--n-alpha", type=int, default=10)
    p.add_argument("--n-probe", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    _add_common(p, seed=False)
    p.set_defaults(fn=cmd_verify_locus)

    p = sub.add_parser("verify-ell", help="radial distances to the circle and horocycle")
    p.add_argument("--x-grid", default="0.1,0.3,0.5,0.7,0.9")
    p.add_argument("--phi-grid", default="0,0.2,0.4,0.8,1.2,1.5707963267948966")
    p.add_argument("--tol", type=float, default=1e-9)
    _add_common(p, seed=False)
    p.set_defaults(fn=cmd_verify_ell)

    p = sub.add_parser("verify-phi-star", help="first crossing angle of the locus ray")
    p.add_argument("--x-grid", default="0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    p.add_argument("--theta-grid", default="0.001,0.003,0.01,0.03")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--constant", type=float, default=None)
    _add_common(p, seed=False)
    p.set_defaults(fn=cmd_verify_phi_star)

    p = sub.add_parser("verify-hull", help="hull area against 4 pi |S|")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--r-max", type=float, default=8.0)
    _add_common(p)
    p.set_defaults(fn=cmd_verify_hull)

    p = sub.add_parser("verify-strong-area", help="mean area of small strongly connected collections")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--core-margin", type=float, default=None)
    _add_common(p, seed=False)
    p.set_defaults(fn=cmd_verify_strong_area)

    p = sub.add_parser("verify-distance", help="graph against hyperbolic distance per annulus")
    p.add_argument("--in", dest="input", required=True)
    _add_common(p, seed=False)
    p.set_defaults(fn=cmd_verify_distance)

    p = sub.add_parser("verify-deviation", help="distance from the origin cell to a graph geodesic (CSV)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--r-grid", default="4,6,8")
    p.add_argument("--core-margin", type=float, default=None)
    _add_common(p, seed=False)
    p.set_defaults(fn=cmd_verify_deviation)

    p = sub.add_parser("verify-reversibility", help="degree-pair symmetry of one step")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--unbiased", action="store_true", help="uniform root instead of degree-biased")
    _add_common(p)
    p.set_defaults(fn=cmd_verify_reversibility)

    for name, fn in (("verify-boundary", cmd_verify_boundary), ("verify-harmonic", cmd_verify_harmonic)):
        p = sub.add_parser(name, help="direction oscillation of walks" if name == "verify-boundary"
                           else "terminal-direction histogram (CSV)")
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--walks", type=int, default=100)
        p.add_argument("--steps", type=int, default=2000)
        if name == "verify-harmonic":
            p.add_argument("--bins", type=int, default=64)
        _add_common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("verify-z-tail", help="lower tail of the Z process on a chain scheme")
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--k-grid", default="10,20,40")
    p.add_argument("--trials", type=int, default=1_000_000)
    _add_common(p)
    p.set_defaults(fn=cmd_verify_z_tail)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INVALID
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print(f"error: --threads={args.threads} must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    if args.command == "verify-region" and args.radius_h is None and args.radius_e is None:
        args.radius_h = 5.0
    try:
        out = args.fn(args)
        write_atomic(args.out, out)
    except GuardError as exc:
        print(f"guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
