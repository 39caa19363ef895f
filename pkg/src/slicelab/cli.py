"""Command-line front end.

Exit codes: 0 success, 2 invalid input or uncomputable request, 3 a checked
inequality failed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import fmt
from . import ifs as ifsmod
from . import measure, slicer, tangent
from . import takagi as tk
from .errors import SliceLabError, ValidationError
from .linalg2 import MultiCone, ProjInterval

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 2, 3


class CheckFailed(Exception):
    def __init__(self, payload):
        super().__init__("check failed")
        self.payload = payload


@dataclass
class RunConfig:
    lambda_: str = "2/3"
    depth: int = 12
    slack: float | None = None
    hull: str = "box"
    output: str | None = None
    format: str = "json"
    threads: int = 1

    @classmethod
    def from_file(cls, path) -> dict:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from None
        names = {f.name.rstrip("_"): f.name for f in fields(cls)}
        unknown = set(raw) - set(names)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return {names[k]: v for k, v in raw.items()}


def _resolve(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        for k, v in RunConfig.from_file(args.config).items():
            setattr(cfg, k, v)
    env = os.environ.get("SLICE_LAB_THREADS")
    if env is not None and not (args.config and "threads" in RunConfig.from_file(args.config)):
        try:
            cfg.threads = int(env)
        except ValueError:
            raise ValidationError(f"SLICE_LAB_THREADS must be an integer, got {env!r}") from None
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    cfg.lambda_ = str(cfg.lambda_)
    if cfg.threads == 0:
        cfg.threads = os.cpu_count() or 1
    if cfg.threads < 0:
        raise ValidationError("threads must be >= 0")
    if not 0 <= int(cfg.depth) <= slicer.MAX_DEPTH:
        raise ValidationError(f"depth must be in 0..{slicer.MAX_DEPTH}")
    if cfg.hull not in ("box", "pentagon"):
        raise ValidationError("hull must be box or pentagon")
    if cfg.format not in ("json", "csv"):
        raise ValidationError("format must be json or csv")
    return cfg


def _lam(cfg) -> float:
    return tk.parse_lambda(cfg.lambda_)


def _point(text: str):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise ValidationError(f"expected a point 'x,y', got {text!r}") from None
    return x, y


def _line(args, cfg) -> slicer.Line:
    if args.vertical is not None:
        return slicer.Line.vertical_at(args.vertical)
    if args.slope is None:
        raise ValidationError("give --slope (or --vertical X)")
    chosen = [a for a in (args.through, args.on_graph, args.intercept) if a is not None]
    if len(chosen) != 1:
        raise ValidationError("give exactly one of --through, --on-graph, --intercept")
    if args.through is not None:
        return slicer.Line.sloped(args.slope, _point(args.through))
    if args.on_graph is not None:
        x = args.on_graph
        return slicer.Line.sloped(args.slope, (x, tk.evaluate(_lam(cfg), x, 1e-15)[0]))
    return slicer.Line.with_intercept(args.slope, args.intercept)


def _system(args, cfg) -> ifsmod.AffineIFS:
    if getattr(args, "ifs", None):
        return ifsmod.AffineIFS.load(args.ifs)
    if getattr(args, "system", "takagi") == "example3":
        return ifsmod.example3_ifs()
    return tk.takagi_ifs(_lam(cfg), cfg.hull)


def _cone_dict(cone: MultiCone) -> list:
    out = []
    for iv in cone:
        item = {"start": iv.start, "length": iv.length}
        try:
            item["slopes"] = list(iv.slopes())
        except ValidationError:
            item["slopes"] = None
        out.append(item)
    return out


# ------------------------------------------------------------ commands ----

def cmd_takagi_eval(args, cfg):
    lam = _lam(cfg)
    value, err = tk.evaluate(lam, tk.parse_x(args.x), args.tol)
    return {"lambda": lam, "x": args.x, "value": value, "error": err}


def cmd_takagi_constants(args, cfg):
    return tk.constants(_lam(cfg)).as_dict()


def cmd_takagi_graph(args, cfg):
    pts = tk.graph_samples(_lam(cfg), int(cfg.depth))
    if cfg.format == "csv":
        return ("x", "y"), pts.tolist()
    return {"x": pts[:, 0], "y": pts[:, 1]}


def _target(args, cfg):
    line = _line(args, cfg)
    return slicer.Strip(line, args.radius) if args.radius is not None else line


def cmd_slice_census(args, cfg):
    c = slicer.slice_census(_lam(cfg), _target(args, cfg), int(cfg.depth), hull=cfg.hull, slack=cfg.slack,
                            extra_witnesses=args.extra_witnesses, threads=cfg.threads)
    if cfg.format == "csv":
        return ("n", "definite", "possible"), [
            (k, c.definite_levels[k], c.possible_levels[k]) for k in range(c.depth + 1)]
    return c.as_dict()


def _parse_grid(text: str):
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            return slicer.slope_grid(lo, hi, step)
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ValidationError(f"expected 'lo:hi:step' or a comma list, got {text!r}") from None


def cmd_slice_scan(args, cfg):
    lam = _lam(cfg)
    slopes = _parse_grid(args.slopes)
    if args.offsets is not None:
        cells = [(t, b) for t in slopes for b in _parse_grid(args.offsets)]
    else:
        k = args.graph_points
        xs = [(i + 0.5) / k for i in range(k)]
        cells = [(t, b) for t in slopes for b in slicer.graph_offsets(lam, t, xs)]
    res = slicer.scan_max_slice(lam, cells, int(cfg.depth), n0=args.n0, hull=cfg.hull, slack=cfg.slack,
                                threads=cfg.threads)
    print("diagnostic: finite-depth slopes of a limit dimension", file=sys.stderr)
    rows = [(r.slope, r.offset, r.definite_dim, r.possible_dim, r.definite_n, r.possible_n) for r in res.rows]
    if cfg.format == "csv":
        return ("slope", "offset", "definite_dim", "possible_dim", "definite_n", "possible_n"), rows
    return {"rows": [dict(zip(("slope", "offset", "definite_dim", "possible_dim", "definite_n", "possible_n"), r))
                     for r in rows],
            "max_definite_dim": res.max_definite_dim, "max_possible_dim": res.max_possible_dim}


def cmd_slice_bad_words(args, cfg):
    t = slicer.bad_word_tally(_lam(cfg), _line(args, cfg), int(cfg.depth), hull=cfg.hull, slack=cfg.slack)
    return t.as_dict()


def cmd_slice_bound_check(args, cfg):
    rows = slicer.count_bound_check(_lam(cfg), _line(args, cfg), args.k_max, hull=cfg.hull, slack=cfg.slack)
    out = {"rows": [{"k": r.k, "n": r.depth, "definite": r.definite, "possible": r.possible, "bound": r.bound,
                     "ok": r.ok, "possible_ok": r.possible_ok} for r in rows],
           "ok": all(r.ok for r in rows)}
    if not out["ok"]:
        raise CheckFailed(out)
    return out


def cmd_measure_strip_mass(args, cfg):
    if args.radius is None:
        raise ValidationError("strip-mass needs --radius")
    b = measure.strip_mass(_lam(cfg), _target(args, cfg), int(cfg.depth), hull=cfg.hull, slack=cfg.slack)
    return {"depth": b.depth, "lower": b.lower, "upper": b.upper}


def cmd_measure_conservation(args, cfg):
    rep = measure.pointwise_dim_estimate(_lam(cfg), _line(args, cfg), range(args.n_min, args.n_max + 1),
                                         hull=cfg.hull, extra_depth=args.extra_depth, slack=cfg.slack)
    print("diagnostic: finite-scale estimate of a limit identity", file=sys.stderr)
    return rep.as_dict()


def cmd_measure_sandwich(args, cfg):
    r = measure.conservation_sandwich_check(_lam(cfg), _line(args, cfg), int(cfg.depth), hull=cfg.hull,
                                            slack=cfg.slack)
    out = {"n": r.n, "upper_mass": r.upper_mass, "definite_line": r.definite_line, "rhs": r.rhs, "ok": r.ok}
    if not r.ok:
        raise CheckFailed(out)
    return out


def cmd_ifs_example3(args, cfg):
    if args.emit:
        return ifsmod.example3_ifs().to_json_obj()
    rep = ifsmod.example3_checks()
    groups = {
        "norm": ["norm_bound_ok", "cone_min_ok", "restricted_inverse_ok"],
        "square": ["square_invariant"],
        "cone": ["cone_invariant"],
    }
    keys = sum(groups.values(), []) if args.check == "all" else groups[args.check]
    rep["ok"] = all(rep[k] for k in keys)
    if not rep["ok"]:
        raise CheckFailed(rep)
    return rep


def cmd_ifs_domination(args, cfg):
    rep = ifsmod.domination_report(_system(args, cfg), int(cfg.depth))
    out = {"max_ratio": rep.max_ratio[1:]}
    if len(rep.max_ratio) > 2:
        tau, c = rep.decay_rate()
        out.update(tau=tau, C=c)
    return out


def cmd_ifs_furstenberg(args, cfg):
    system = _system(args, cfg)
    if args.seed_slopes:
        lo, hi = _point(args.seed_slopes)
        seed = MultiCone([ProjInterval.from_slopes(lo, hi)])
    elif system.label == "takagi":
        k = tk.constants(_lam(cfg)).k_lambda
        seed = MultiCone.from_slopes(-k - 1.0, k + 1.0)
        if args.direction == "forward":
            seed = seed.complement()
    else:
        raise ValidationError("give --seed-slopes lo,hi for a non-Takagi system")
    cone = ifsmod.furstenberg_enclosure(system, seed, int(cfg.depth), args.direction)
    return {"direction": args.direction, "depth": int(cfg.depth), "intervals": _cone_dict(cone)}


def cmd_ifs_wbnc(args, cfg):
    system = _system(args, cfg)
    x = _point(args.x)
    return {"x": list(x), "r": args.radius, "upper": ifsmod.wbnc_probe(system, x, args.radius),
            "witness": ifsmod.wbnc_witness(system, x, args.radius)}


def cmd_ifs_affinity(args, cfg):
    lo, hi = ifsmod.affinity_dimension(_system(args, cfg), int(cfg.depth))
    return {"depth": int(cfg.depth), "s_lo": lo, "s_hi": hi}


def cmd_tangent_blowup(args, cfg):
    cloud = tangent.blowup_cloud(_system(args, cfg), _point(args.x), args.radius, args.eps)
    if cfg.format == "csv":
        return ("x", "y"), cloud.points.tolist()
    return {"resolution": cloud.resolution, "x": cloud.points[:, 0], "y": cloud.points[:, 1]}


def cmd_tangent_example3(args, cfg):
    r = tangent.example3_tangent_check(args.n)
    out = {"n": r.n, "distance": r.distance, "bound": r.bound, "points": r.points, "ok": r.ok}
    if not r.ok:
        raise CheckFailed(out)
    return out


# -------------------------------------------------------------- parser ----

def _common(p, depth=True):
    p.add_argument("--lambda", dest="lambda_", help="decimal or p/q (default 2/3)")
    if depth:
        p.add_argument("--depth", type=int)
    p.add_argument("--slack", type=float)
    p.add_argument("--hull", choices=("box", "pentagon"))
    p.add_argument("--output", "-o")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--threads", type=int, help="0 = all cores; env SLICE_LAB_THREADS is the fallback")
    p.add_argument("--config", help="JSON file with RunConfig fields")


def _line_args(p):
    p.add_argument("--slope", type=float)
    p.add_argument("--vertical", type=float, metavar="X")
    p.add_argument("--through", metavar="X,Y")
    p.add_argument("--on-graph", type=float, metavar="X")
    p.add_argument("--intercept", type=float)


def _system_args(p):
    p.add_argument("--system", choices=("takagi", "example3"), default="takagi")
    p.add_argument("--ifs", help="IFS JSON file (overrides --system)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slicelab", description="Certified slices of self-affine graphs")
    top = parser.add_subparsers(dest="group", required=True)

    g = top.add_parser("takagi").add_subparsers(dest="cmd", required=True)
    p = g.add_parser("eval"); _common(p, depth=False)
    p.add_argument("--x", required=True, help="decimal or exact p/q")
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_takagi_eval)
    p = g.add_parser("constants"); _common(p, depth=False); p.set_defaults(func=cmd_takagi_constants)
    p = g.add_parser("graph"); _common(p); p.set_defaults(func=cmd_takagi_graph)

    g = top.add_parser("slice").add_subparsers(dest="cmd", required=True)
    p = g.add_parser("census"); _common(p); _line_args(p)
    p.add_argument("--radius", type=float, help="census a strip of this radius instead of the line")
    p.add_argument("--extra-witnesses", action="store_true")
    p.set_defaults(func=cmd_slice_census)
    p = g.add_parser("scan"); _common(p)
    p.add_argument("--slopes", default="-3:3:0.25")
    p.add_argument("--offsets", help="intercepts 'lo:hi:step' or comma list")
    p.add_argument("--graph-points", type=int, default=21, help="lines through this many graph points")
    p.add_argument("--n0", type=int, help="first depth of the regression window")
    p.set_defaults(func=cmd_slice_scan)
    p = g.add_parser("bad-words"); _common(p); _line_args(p); p.set_defaults(func=cmd_slice_bad_words)
    p = g.add_parser("bound-check"); _common(p, depth=False); _line_args(p)
    p.add_argument("--k-max", type=int, default=2)
    p.set_defaults(func=cmd_slice_bound_check)

    g = top.add_parser("measure").add_subparsers(dest="cmd", required=True)
    p = g.add_parser("strip-mass"); _common(p); _line_args(p)
    p.add_argument("--radius", type=float)
    p.set_defaults(func=cmd_measure_strip_mass)
    p = g.add_parser("conservation"); _common(p, depth=False); _line_args(p)
    p.add_argument("--n-min", type=int, default=8)
    p.add_argument("--n-max", type=int, default=16)
    p.add_argument("--extra-depth", type=int, default=measure.MASS_EXTRA_DEPTH)
    p.set_defaults(func=cmd_measure_conservation)
    p = g.add_parser("sandwich"); _common(p); _line_args(p); p.set_defaults(func=cmd_measure_sandwich)

    g = top.add_parser("ifs").add_subparsers(dest="cmd", required=True)
    p = g.add_parser("example3"); _common(p, depth=False)
    p.add_argument("--check", choices=("all", "norm", "square", "cone"), default="all")
    p.add_argument("--emit", action="store_true", help="print the IFS as JSON instead of checking")
    p.set_defaults(func=cmd_ifs_example3)
    p = g.add_parser("domination"); _common(p); _system_args(p); p.set_defaults(func=cmd_ifs_domination)
    p = g.add_parser("furstenberg"); _common(p); _system_args(p)
    p.add_argument("--direction", choices=("backward", "forward"), default="backward")
    p.add_argument("--seed-slopes", metavar="LO,HI")
    p.set_defaults(func=cmd_ifs_furstenberg)
    p = g.add_parser("wbnc"); _common(p, depth=False); _system_args(p)
    p.add_argument("--x", required=True, metavar="X,Y")
    p.add_argument("--radius", type=float, required=True)
    p.set_defaults(func=cmd_ifs_wbnc)
    p = g.add_parser("affinity"); _common(p); _system_args(p); p.set_defaults(func=cmd_ifs_affinity)

    g = top.add_parser("tangent").add_subparsers(dest="cmd", required=True)
    p = g.add_parser("blowup"); _common(p, depth=False); _system_args(p)
    p.add_argument("--x", required=True, metavar="X,Y")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.02)
    p.set_defaults(func=cmd_tangent_blowup)
    p = g.add_parser("example3"); _common(p, depth=False)
    p.add_argument("--n", type=int, default=4)
    p.set_defaults(func=cmd_tangent_example3)
    return parser


def _render(result, cfg) -> str:
    if isinstance(result, tuple):
        header, rows = result
        if cfg.format == "csv":
            return fmt.csv(header, rows)
        return fmt.dumps([dict(zip(header, r)) for r in rows])
    if cfg.format == "csv":
        flat = {k: v for k, v in result.items() if not isinstance(v, (list, tuple, dict, np.ndarray))}
        return fmt.csv(tuple(flat), [tuple(flat.values())])
    return fmt.dumps(result)


def _emit(text: str, cfg):
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        cfg = _resolve(args)
        result = args.func(args, cfg)
    except CheckFailed as exc:
        _emit(fmt.dumps(exc.payload), cfg)
        print("check failed", file=sys.stderr)
        return EXIT_FAILED
    except (SliceLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _emit(_render(result, cfg), cfg)
    return EXIT_OK


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
