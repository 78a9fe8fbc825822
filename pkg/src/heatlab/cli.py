"""Command-line interface: gen, kernel, lambda, profile, sim, verify, run-preset.

Output is machine-first (JSON and CSV); every report embeds the full
configuration and the package version.  Exit codes: 0 success, 1 runtime
error, 2 unknown preset, 3 strict-mode check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from . import estimates as est
from . import isoperimetry as iso
from .errors import HeatlabError, UnknownPreset
from .generators import lattice_box, stretched_vicsek, vicsek_tree, weighted_vicsek
from .graph import VertexSet, ball, graph_from_json, graph_to_json
from .kernel import heat_kernel, killed_kernel
from .montecarlo import simulate_exit, simulate_tail
from .potential import exit_profile
from .presets import run_preset
from .spectral import lambda_min


def _parse_set(g, spec):
    """Set specifications of the form ball:x:R."""
    kind, *args = spec.split(":")
    if kind == "ball":
        x, R = int(args[0]), int(args[1])
        return ball(g, x, R)
    raise ValueError(f"unknown set spec {spec!r}; expected ball:x:R")


def _parse_grid(spec):
    """Grids of the form start:stop:step (inclusive of the stop)."""
    a, b, s = (float(v) for v in spec.split(":"))
    n = int(round((b - a) / s))
    return [round(a + k * s, 10) for k in range(n + 1)]


def _write_json(path, doc):
    text = json.dumps(doc, sort_keys=True, indent=1)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _cmd_gen(args):
    if args.family == "lattice_box":
        g = lattice_box(args.dim, args.side)
    elif args.family == "vicsek":
        g = vicsek_tree(args.level)
    elif args.family == "weighted_vicsek":
        weights = ([float(w) for w in args.weights.split(",")]
                   if args.weights else None)
        g = weighted_vicsek(args.level, weights)
    elif args.family == "stretched_vicsek":
        g = stretched_vicsek(args.level)
    else:
        raise ValueError(f"unknown family {args.family!r}")
    graph_to_json(g, args.out)
    return 0


def _cmd_kernel(args):
    g = graph_from_json(args.graph)
    if args.killed:
        A = _parse_set(g, args.killed)
        slice_ = killed_kernel(g, A, args.source, args.time)
    else:
        slice_ = heat_kernel(g, args.source, args.time)
    rows = [(v, slice_.values[v]) for v in range(g.vertex_count)]
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(["vertex", "value"])
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_lambda(args):
    g = graph_from_json(args.graph)
    A = _parse_set(g, args.set)
    res = lambda_min(g, A)
    _write_json(args.out, {
        "config": {"graph": args.graph, "set": args.set, "version": __version__},
        "lambda": res.value,
        "residual": res.residual,
        "certified_interval": list(res.certified_interval),
    })
    return 0


def _cmd_profile(args):
    g = graph_from_json(args.graph)
    prof = exit_profile(g, args.center, args.rmax, q=args.q)
    doc = {"config": {"graph": args.graph, "version": __version__}}
    doc.update(prof.to_json_dict())
    _write_json(args.out, doc)
    return 0


def _cmd_sim(args):
    g = graph_from_json(args.graph)
    if args.mode == "exit":
        res = simulate_exit(g, ball(g, args.center, args.radius), args.center,
                            args.trials, args.seed)
    else:
        res = simulate_tail(g, args.center, args.radius, args.time,
                            args.trials, args.seed)
    _write_json(args.out, {
        "config": {"mode": args.mode, "center": args.center,
                   "radius": args.radius, "time": args.time,
                   "trials": args.trials, "seed": args.seed,
                   "version": __version__},
        "estimate": res.estimate,
        "std_error": res.std_error,
    })
    return 0


def _cmd_verify(args):
    g = graph_from_json(args.graph)
    x = args.center if args.center is not None else g.root
    delta_grid = _parse_grid(args.delta_grid)
    budget = {"max_exhaustive_size": args.max_exhaustive, "samples": args.samples}
    config = {"check": args.check, "graph": args.graph, "center": x,
              "radius": args.radius, "delta_grid": delta_grid,
              "budget": budget, "seed": args.seed, "q": args.q,
              "ball_factor": args.ball_factor, "version": __version__}

    def fam(factor):
        return iso.subset_families(g, x, args.radius, budget,
                                   ball_factor=factor, seed=args.seed)

    def prof():
        return exit_profile(g, x, max(args.radius, 2 * args.radius), q=args.q)

    check = args.check
    if check in ("e", "fk", "rho"):
        family, profile = fam(args.ball_factor), prof()
        fun = {"e": iso.check_E, "fk": iso.check_FK, "rho": iso.check_rho}[check]
        rep = fun(g, family, profile, delta_grid)
        doc = rep.to_json_dict()
    elif check == "pcycle":
        family = fam(args.ball_factor)
        sets = [VertexSet(g, m) for m in family.members[: args.samples]]
        doc = iso.check_pcycle(g, sets, delta_grid[-1])
    elif check == "corollary":
        family, profile = fam(2), prof()
        reps = iso.check_corollary_forms(g, family, profile, delta_grid)
        doc = {k: r.to_json_dict() for k, r in reps.items()}
    elif check == "due":
        rep = est.check_DUE(g, [x], args.nmax, q=args.q)
        doc = rep.to_json_dict()
    elif check == "ue":
        d = max(2, args.radius)
        far = np.nonzero(g.distances(x) == d)[0]
        pairs = [(x, int(far[0]))] if far.size else []
        rep = est.check_UE(g, pairs, [d, 2 * d, 4 * d, 8 * d], q=args.q)
        doc = rep.to_json_dict()
    elif check == "dg":
        d = g.distances(x)
        far = np.nonzero(d == 2 * args.radius + 6)[0]
        y = int(far[0]) if far.size else int(np.argmax(d))
        A, B = ball(g, x, 4), ball(g, y, 4)
        rep = est.check_DG(g, [(A, B)], [args.nmax // 4 or 1, args.nmax], q=args.q)
        doc = rep.to_json_dict()
    elif check == "tail":
        rep = est.check_exit_tail(g, [x], [args.radius, 2 * args.radius],
                                  lambda R: range(R, R * R + 1, max(1, R // 2)),
                                  q=args.q)
        doc = rep.to_json_dict()
    elif check == "pmv":
        rep = est.check_PMV(g, x, args.radius, seed=args.seed)
        doc = rep.to_json_dict()
    elif check == "mv":
        rep = est.check_MV(g, x, args.radius, seed=args.seed)
        doc = rep.to_json_dict()
    elif check == "tc":
        rep = est.check_TC(g, [x], [args.radius, 2 * args.radius], seed=args.seed)
        doc = rep.to_json_dict()
    elif check == "lvv":
        far = np.nonzero(g.distances(x) == args.radius)[0]
        pairs = [(x, int(far[0]))] if far.size else []
        rep = est.check_lvv(g, pairs, [args.nmax // 4 or 1, args.nmax],
                            [0.1, 0.25, 0.5, 1.0], q=args.q)
        doc = rep.to_json_dict()
    elif check == "twostep":
        rep = est.check_two_step(g, [2, args.radius], seed=args.seed)
        doc = rep.to_json_dict()
    else:
        raise ValueError(f"unknown check {check!r}")

    _write_json(args.out, {"config": config, **doc})
    if args.strict and not doc.get("pass", True):
        return 3
    return 0


def _cmd_run_preset(args):
    rows = run_preset(args.name, args.out_dir, strict=False)
    if args.strict and not all(r["pass"] for r in rows):
        return 3
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="heatlab",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a catalog graph")
    p.add_argument("--family", required=True,
                   choices=["lattice_box", "vicsek", "weighted_vicsek",
                            "stretched_vicsek"])
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--side", type=int, default=101)
    p.add_argument("--weights", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("kernel", help="one heat-kernel row as CSV")
    p.add_argument("--graph", required=True)
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--time", type=int, required=True)
    p.add_argument("--killed", default=None, help="ball:x:R")
    p.add_argument("--out", default="-")
    p.set_defaults(fn=_cmd_kernel)

    p = sub.add_parser("lambda", help="smallest Dirichlet eigenvalue of a set")
    p.add_argument("--graph", required=True)
    p.add_argument("--set", required=True, help="ball:x:R")
    p.add_argument("--out", default="-")
    p.set_defaults(fn=_cmd_lambda)

    p = sub.add_parser("profile", help="exit-time profile at a center")
    p.add_argument("--graph", required=True)
    p.add_argument("--center", type=int, required=True)
    p.add_argument("--rmax", type=int, default=64)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=_cmd_profile)

    p = sub.add_parser("sim", help="Monte-Carlo oracle")
    p.add_argument("mode", choices=["exit", "tail"])
    p.add_argument("--graph", required=True)
    p.add_argument("--center", type=int, required=True)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--time", type=int, default=None)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=_cmd_sim)

    p = sub.add_parser("verify", help="run one inequality or estimate check")
    p.add_argument("check", choices=["e", "fk", "rho", "pcycle", "corollary",
                                     "due", "ue", "dg", "tail", "pmv", "mv",
                                     "tc", "lvv", "twostep"])
    p.add_argument("--graph", required=True)
    p.add_argument("--center", type=int, default=None)
    p.add_argument("--radius", type=int, default=4)
    p.add_argument("--nmax", type=int, default=200)
    p.add_argument("--delta-grid", default="0.1:1.5:0.1")
    p.add_argument("--max-exhaustive", type=int, default=6)
    p.add_argument("--samples", type=int, default=60)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--ball-factor", type=int, default=3)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("run-preset", help="run a full experiment preset")
    p.add_argument("name")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(fn=_cmd_run_preset)

    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except UnknownPreset as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HeatlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
