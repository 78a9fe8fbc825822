"""Experiment presets: fully-determined pipeline runs over the graph catalog.

A preset fixes the graph, the center/radius, every grid and every seed, so a
run is reproducible bit for bit.  ``run_preset`` writes the graph JSON, the
root exit profile, nine check reports and a one-row-per-check summary CSV
into the output directory.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import estimates as est
from . import isoperimetry as iso
from .errors import UnknownPreset
from .graph import VertexSet, ball, check_p0, graph_to_json, volume_regularity_report
from .generators import lattice_box, stretched_vicsek, vicsek_tree, weighted_vicsek
from .potential import exit_profile, exit_times_at
from .isoperimetry import stability_verdict


@dataclass
class ExperimentPreset:
    name: str
    make_graph: object
    radius: int
    profile_rmax: int
    due_nmax: int
    ue_pairs_offsets: list          # distances from the root along the graph
    dg_distance: int
    tail_R: list
    tc_R: list
    vd_R: list
    delta_grid: list = field(default_factory=lambda: [round(0.1 * k, 10)
                                                      for k in range(1, 16)])
    budget: dict = field(default_factory=lambda: {"max_exhaustive_size": 6,
                                                  "samples": 60})
    seed: int = 7
    q: float = 1.0
    ball_factor: int = 3
    pcycle_delta: float = 1.0


def _pair_at_distance(g, x, d):
    dist = g.distances(x)
    candidates = np.nonzero(dist == d)[0]
    return (int(x), int(candidates[0])) if candidates.size else None


def _dg_pairs(g, x, d, r=3):
    dist = g.distances(x)
    far = np.nonzero(dist == d + 2 * r)[0]
    if not far.size:
        return []
    y = int(far[0])
    A, B = ball(g, x, r + 1), ball(g, y, r + 1)
    if np.intersect1d(A.members, B.members).size:
        return []
    return [(A, B)]


PRESETS = {}


def _register(p):
    PRESETS[p.name] = p
    return p


_register(ExperimentPreset(
    name="lattice-z1",
    make_graph=lambda: lattice_box(1, 2001),
    radius=8, profile_rmax=64, due_nmax=400,
    ue_pairs_offsets=[12], dg_distance=20,
    tail_R=[4, 8], tc_R=[4, 8, 16], vd_R=[4, 8, 16, 32]))

_register(ExperimentPreset(
    name="lattice-z2",
    make_graph=lambda: lattice_box(2, 61),
    radius=4, profile_rmax=16, due_nmax=200,
    ue_pairs_offsets=[6], dg_distance=8,
    tail_R=[3, 5], tc_R=[2, 4], vd_R=[2, 4, 8],
    budget={"max_exhaustive_size": 5, "samples": 40}))

_register(ExperimentPreset(
    name="vicsek-3",
    make_graph=lambda: vicsek_tree(3),
    radius=4, profile_rmax=16, due_nmax=200,
    ue_pairs_offsets=[6], dg_distance=8,
    tail_R=[3, 5], tc_R=[2, 4], vd_R=[2, 4, 8],
    budget={"max_exhaustive_size": 6, "samples": 40}))

_register(ExperimentPreset(
    name="weighted-vicsek-3",
    make_graph=lambda: weighted_vicsek(3),
    radius=4, profile_rmax=16, due_nmax=200,
    ue_pairs_offsets=[6], dg_distance=8,
    tail_R=[3, 5], tc_R=[2, 4], vd_R=[2, 4, 8],
    budget={"max_exhaustive_size": 6, "samples": 40}))

_register(ExperimentPreset(
    name="stretched-vicsek-4",
    make_graph=lambda: stretched_vicsek(4),
    radius=8, profile_rmax=128, due_nmax=600,
    ue_pairs_offsets=[10], dg_distance=16,
    tail_R=[4, 8], tc_R=[8, 16, 32], vd_R=[8, 16, 32, 64],
    budget={"max_exhaustive_size": 6, "samples": 40}))

# the section-5 reproduction: same graph family, grids tuned to show the
# drifting exit-time exponent next to stable volume and time-comparison
# constants
_register(ExperimentPreset(
    name="paper-section-5",
    make_graph=lambda: stretched_vicsek(4),
    radius=8, profile_rmax=128, due_nmax=1000,
    ue_pairs_offsets=[10], dg_distance=16,
    tail_R=[4, 8], tc_R=[16, 32, 64], vd_R=[8, 16, 32, 64, 128],
    budget={"max_exhaustive_size": 6, "samples": 40}))


def _dyadic_slope_drift(g, x, radii):
    """Spread of the dyadic log-slopes of E(x, .) over the given radii."""
    table = exit_times_at(g, x, sorted(set(radii) | {2 * max(radii)}))
    slopes = {}
    for R in radii:
        e1, e2 = table[R], table.get(2 * R)
        if e2 is None:
            continue
        slopes[R] = float(np.log2(e2 / e1))
    drift = max(slopes.values()) - min(slopes.values()) if len(slopes) >= 2 else 0.0
    return slopes, float(drift)


def run_preset(name, out_dir, strict=False):
    """Run one preset end to end; returns the summary rows.

    Raises :class:`UnknownPreset` for unregistered names.  Check findings
    (large constants) are data, not errors; under ``strict`` a failed check
    verdict raises RuntimeError after all reports are written.
    """
    if name not in PRESETS:
        raise UnknownPreset(f"no preset named {name!r}; "
                            f"known: {sorted(PRESETS)}")
    p = PRESETS[name]
    os.makedirs(out_dir, exist_ok=True)
    g = p.make_graph()
    x = g.root
    config = {
        "preset": p.name, "radius": p.radius, "profile_rmax": p.profile_rmax,
        "due_nmax": p.due_nmax, "delta_grid": p.delta_grid,
        "budget": p.budget, "seed": p.seed, "q": p.q,
        "ball_factor": p.ball_factor, "version": __version__,
    }

    graph_to_json(g, os.path.join(out_dir, "graph.json"))
    profile = exit_profile(g, x, p.profile_rmax, q=p.q)
    _write_json(os.path.join(out_dir, "profile.json"),
                {"config": config, **profile.to_json_dict()})

    family = iso.subset_families(g, x, p.radius, p.budget,
                                 ball_factor=p.ball_factor, seed=p.seed)
    rows = []

    def emit(tag, report, statistic, constants, passed):
        doc = {"config": config}
        doc.update(report.to_json_dict() if hasattr(report, "to_json_dict")
                   else report)
        _write_json(os.path.join(out_dir, f"report_{tag}.json"), doc)
        rows.append({"check": tag, "statistic": statistic,
                     "fitted": json.dumps(constants, sort_keys=True),
                     "pass": passed})

    rep = iso.check_E(g, family, profile, p.delta_grid)
    emit("e", rep, rep.worst_constant[p.pcycle_delta], rep.worst_constant, rep.passed)
    rep = iso.check_FK(g, family, profile, p.delta_grid)
    emit("fk", rep, rep.worst_constant[p.pcycle_delta], rep.worst_constant, rep.passed)
    rep = iso.check_rho(g, family, profile, p.delta_grid,
                        inner_budget={"max_exhaustive_size": 6})
    emit("rho", rep, rep.worst_constant[p.pcycle_delta], rep.worst_constant, rep.passed)

    sets = [VertexSet(g, m) for m in family.members[: 40]]
    rep = iso.check_pcycle(g, sets, p.pcycle_delta,
                           inner_budget={"max_exhaustive_size": 6})
    emit("pcycle", rep, rep["C1_exit"],
         {k: rep[k] for k in ("C1_exit", "C2_eigen", "C3_resistance")},
         rep["pass"])

    rep = est.check_DUE(g, [x], p.due_nmax, q=p.q)
    emit("due", rep, rep.sup_statistic, rep.fitted, rep.passed)

    pairs = [pq for d in p.ue_pairs_offsets if (pq := _pair_at_distance(g, x, d))]
    n_grid = sorted({max(2, d * k) for d in p.ue_pairs_offsets
                     for k in (1, 2, 4, 8)})
    rep = est.check_UE(g, pairs, n_grid, q=p.q)
    emit("ue", rep, rep.sup_statistic, rep.fitted, rep.passed)

    dg_pairs = _dg_pairs(g, x, p.dg_distance)
    d = p.dg_distance
    rep = est.check_DG(g, dg_pairs, sorted({d, d * d // 4 or 1, d * d}), q=p.q)
    emit("dg", rep, rep.fitted["c_hat"], rep.fitted, rep.passed)

    rep = est.check_exit_tail(g, [x], p.tail_R,
                              lambda R: range(R, R * R + 1, max(1, R // 2)),
                              q=p.q)
    emit("tail", rep, rep.sup_statistic, rep.fitted, rep.passed)

    rep = est.check_TC(g, [x], p.tc_R, seed=p.seed)
    tc_stable = stability_verdict(list(rep.extras["per_scale_max"].values()))
    rep.extras["stable_factor4"] = tc_stable
    emit("tc", rep, rep.fitted["C"], rep.fitted, rep.passed)

    # summary-only rows: structural constants and the exit-exponent drift
    p0 = check_p0(g)
    rows.append({"check": "p0", "statistic": p0,
                 "fitted": json.dumps({"p0": p0}), "pass": p0 > 0})
    vol = volume_regularity_report(g, [x], p.vd_R, seed=p.seed)
    per_scale = [r["DV"] for r in vol["vd_table"]]
    vd_stable = stability_verdict(per_scale)
    rows.append({"check": "vd", "statistic": vol["D_V"],
                 "fitted": json.dumps({"D_V": vol["D_V"], "alpha": vol["alpha"],
                                       "stable_factor4": vd_stable},
                                      sort_keys=True),
                 "pass": bool(np.isfinite(vol["D_V"]))})
    slopes, drift = _dyadic_slope_drift(g, x, p.vd_R)
    rows.append({"check": "exit_slope_drift", "statistic": drift,
                 "fitted": json.dumps({str(k): v for k, v in slopes.items()},
                                      sort_keys=True),
                 "pass": True})

    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["check", "statistic", "fitted",
                                                "pass"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)

    if strict and not all(r["pass"] for r in rows):
        raise RuntimeError("strict mode: at least one check verdict failed")
    return rows


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
