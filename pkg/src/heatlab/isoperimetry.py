"""Subset-family generation and verification of the relative isoperimetric
inequalities: the exit-time form, the Faber-Krahn form and the resistance
form, their corollary variants at a fixed ball, and the fixed-set equivalence
cycle.

Universal quantifiers over subsets are sampled honestly: exhaustively up to a
size cap, then through structured witnesses (sub-balls, annuli) and seeded
random BFS-grown sets.  Reports carry, for every exponent delta on the grid,
the worst observed constant together with the witness set that attains it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import solve
from .errors import BudgetTooLarge, HorizonExceeded, SetsIntersect
from .graph import VertexSet, ball
from .potential import (
    effective_resistance,
    exit_time_vector,
    extreme_exit_time,
    mean_exit_time,
)
from .spectral import lambda_min

ENUM_HARD_CAP = 10 ** 7


# -- connected subset enumeration -------------------------------------------

def enumerate_connected_subsets(g, root, max_size, within=None, cap=ENUM_HARD_CAP):
    """All connected vertex sets containing `root` with at most `max_size`
    vertices, optionally restricted to the set `within`.

    Enumeration is the standard fixed-root extension scheme: each set is
    produced exactly once, in a deterministic order.  Raises
    :class:`BudgetTooLarge` when more than `cap` sets would be produced.
    """
    if within is not None:
        allowed = np.zeros(g.vertex_count, dtype=bool)
        allowed[within.members if isinstance(within, VertexSet) else within] = True
    else:
        allowed = np.ones(g.vertex_count, dtype=bool)
    if not allowed[root]:
        return []

    local = np.nonzero(allowed)[0]
    pos = {int(v): i for i, v in enumerate(local)}
    adj_masks = []
    for v in local:
        nbrs = g.neighbors(int(v))
        mask = 0
        for u in nbrs:
            if allowed[u] and u != v:
                mask |= 1 << pos[int(u)]
        adj_masks.append(mask)

    out_masks: List[int] = []
    r = pos[int(root)]

    def rec(S, size, ext, forb):
        out_masks.append(S)
        if len(out_masks) > cap:
            raise BudgetTooLarge(f"more than {cap} connected subsets")
        if size == max_size:
            return
        while ext:
            vbit = ext & -ext
            ext ^= vbit
            v = vbit.bit_length() - 1
            grown = ext | (adj_masks[v] & ~(S | forb | ext | vbit))
            rec(S | vbit, size + 1, grown, forb)
            forb |= vbit  # every set through v is done; exclude it from siblings

    rec(1 << r, 1, adj_masks[r], 0)

    sets = []
    for mask in out_masks:
        ids = []
        m = mask
        while m:
            b = m & -m
            ids.append(int(local[b.bit_length() - 1]))
            m ^= b
        sets.append(np.array(sorted(ids), dtype=np.int64))
    return sets


# -- families ----------------------------------------------------------------

@dataclass
class SubsetFamily:
    graph: object
    base: Tuple[int, int]                 # (x, R)
    ball_factor: int
    members: List[np.ndarray]
    provenance: List[str]
    seed: int

    def __len__(self):
        return len(self.members)

    def vertex_sets(self):
        return [VertexSet(self.graph, m) for m in self.members]


def subset_families(g, x, R, budget=None, ball_factor=3, seed=7):
    """Witness family for the universally quantified subsets A of B(x, fR).

    budget keys: max_exhaustive_size (default 12), samples (default 100).
    Members are deduplicated; identical inputs and seed give an identical
    family.
    """
    budget = dict(budget or {})
    cap = int(budget.get("max_exhaustive_size", 12))
    samples = int(budget.get("samples", 100))

    big = ball(g, x, ball_factor * R)
    if big.touches(g.truncated):
        raise HorizonExceeded(
            f"B({x},{ball_factor}R) touches the truncation boundary")

    members: List[np.ndarray] = []
    provenance: List[str] = []
    seen = set()

    def add(ids, tag):
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size == 0:
            return
        key = ids.tobytes()
        if key not in seen:
            seen.add(key)
            members.append(ids)
            provenance.append(tag)

    for ids in enumerate_connected_subsets(g, x, cap, within=big):
        add(ids, "exhaustive")

    big_mask = big.mask()
    for y in ball(g, x, R).members:
        for r in range(1, 2 * R + 1):
            sub = ball(g, int(y), r).members
            if np.all(big_mask[sub]):
                add(sub, "subball")

    d = g.distances(x)
    for r1 in range(1, 2 * R):
        for r2 in range(r1 + 1, 2 * R + 1):
            ann = np.nonzero((d >= r1) & (d < r2))[0]
            if ann.size and np.all(big_mask[ann]):
                add(ann, "annulus")

    rng = np.random.default_rng(seed)
    inner = ball(g, x, R).members
    for _ in range(samples):
        start = int(rng.choice(inner))
        target = int(rng.integers(2, max(3, len(big))))
        grown = {start}
        frontier = [n for n in g.neighbors(start) if big_mask[n]]
        while frontier and len(grown) < target:
            pick = int(rng.integers(len(frontier)))
            v = frontier.pop(pick)
            if v in grown:
                continue
            grown.add(v)
            frontier.extend(n for n in g.neighbors(v)
                            if big_mask[n] and n not in grown)
        add(np.array(sorted(grown), dtype=np.int64), "bfs_random")

    return SubsetFamily(g, (int(x), int(R)), ball_factor, members, provenance,
                        int(seed))


# -- reports -----------------------------------------------------------------

@dataclass
class InequalityReport:
    check_name: str
    graph_id: str
    delta_grid: List[float]
    worst_constant: Dict[float, float]
    witness: Dict[float, dict]
    passed: bool
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "check": self.check_name,
            "graph_id": self.graph_id,
            "delta_grid": list(self.delta_grid),
            "worst_constant": {str(d): v for d, v in self.worst_constant.items()},
            "witness": {str(d): w for d, w in self.witness.items()},
            "pass": bool(self.passed),
            "metadata": self.metadata,
        }


def _ratio_report(name, g, family, numerators, profile, delta_grid, ball_factor,
                  extra_meta=None):
    """Shared maximization Chat(delta) = max_A num(A) / [E(x,R) (mu(A)/mu(B))^d]."""
    x, R = family.base
    muB = ball(g, x, ball_factor * R).measure()
    ExR = profile.E(R)
    mus = np.array([float(g.mu[m].sum()) for m in family.members])
    nums = np.asarray(numerators, dtype=np.float64)
    worst, witness = {}, {}
    for d in delta_grid:
        ratios = nums / (ExR * (mus / muB) ** d)
        i = int(np.argmax(ratios))
        worst[d] = float(ratios[i])
        witness[d] = {
            "A": family.members[i].tolist(),
            "member_index": i,
            "provenance": family.provenance[i],
            "numerator": float(nums[i]),
            "mu_A": float(mus[i]),
            "x": x,
            "R": R,
        }
    meta = {
        "mu_B": muB,
        "E_xR": ExR,
        "family_size": len(family),
        "ball_factor": ball_factor,
        "seed": family.seed,
        "q": profile.q,
        "beta": profile.beta,
    }
    meta.update(extra_meta or {})
    finite = all(np.isfinite(v) for v in worst.values())
    return InequalityReport(name, g.graph_id(), list(delta_grid), worst, witness,
                            finite, meta)


def check_E(g, family, profile, delta_grid):
    """Exit-time isoperimetric form: Ebar(A) <= C E(x,R) (mu(A)/mu(B))^delta."""
    nums = [extreme_exit_time(g, VertexSet(g, m))[0] for m in family.members]
    return _ratio_report("E", g, family, nums, profile, delta_grid,
                         family.ball_factor)


def check_FK(g, family, profile, delta_grid, nash_delta=None):
    """Faber-Krahn form: lambda(A)^{-1} <= C E(x,R) (mu(A)/mu(B))^delta.

    Also derives the Nash-inequality parameters (a, C, delta) from the fit:
    with K = max_A lambda^{-1}(A)/mu(A)^delta over the family, every
    nonnegative f supported where the fit covers satisfies
    a ||f||_2^2 (||f||_2/||f||_1)^(2 delta) <= C E(f,f) for a = 1 and
    C = 4 * 6^delta * K.
    """
    from .spectral import nash_bound_from_fk

    nums = [1.0 / lambda_min(g, VertexSet(g, m)).value for m in family.members]
    rep = _ratio_report("FK", g, family, nums, profile, delta_grid,
                        family.ball_factor)
    d_star = nash_delta if nash_delta is not None else list(delta_grid)[-1]
    mus = np.array([float(g.mu[m].sum()) for m in family.members])
    K = float(np.max(np.asarray(nums) / mus ** d_star))
    rep.metadata["nash"] = {
        "a": 1.0,
        "C": nash_bound_from_fk(K, d_star),
        "delta": float(d_star),
        "fk_constant": K,
    }
    return rep


def _inner_sets(g, A_ids, inner_budget):
    """Candidate D for the resistance form: exhaustive when A is small,
    otherwise singletons plus sub-balls inside A."""
    cap = int((inner_budget or {}).get("max_exhaustive_size", 8))
    A_list = [int(v) for v in A_ids]
    out = []
    if len(A_list) <= cap:
        for mask in range(1, 1 << len(A_list)):
            out.append(np.array(sorted(A_list[i] for i in range(len(A_list))
                                       if mask >> i & 1), dtype=np.int64))
        return out
    out.extend(np.array([v], dtype=np.int64) for v in A_list)
    out.append(np.asarray(A_ids, dtype=np.int64))
    inside = set(A_list)
    for y in A_list[:: max(1, len(A_list) // 8)]:
        d = g.distances(y)
        for r in range(2, 8):
            sub = np.nonzero(d < r)[0]
            if set(sub.tolist()) <= inside:
                out.append(sub)
    dedup, seen = [], set()
    for ids in out:
        key = ids.tobytes()
        if key not in seen:
            seen.add(key)
            dedup.append(ids)
    return dedup


def check_rho(g, family, profile, delta_grid, inner_budget=None):
    """Resistance form: rho(D,A) mu(D) <= C E(x,R) (mu(A)/mu(B))^delta.

    rho(D,A) is the resistance between D and the complement of A (potential
    1 on D, 0 outside A), so the left side is maximized over admissible D
    inside each family member: exhaustive subsets when A is small, singletons
    and sub-balls otherwise.
    """
    from .potential import LocalResistance

    nums, tags = [], []
    for ids in family.members:
        A = VertexSet(g, ids)
        if A.is_whole_graph():
            nums.append(0.0)
            tags.append(None)
            continue
        ctx = LocalResistance(g, ids)
        best, best_D = 0.0, None
        for D_ids in _inner_sets(g, ids, inner_budget):
            val = ctx.rho(D_ids) * float(g.mu[D_ids].sum())
            if val > best:
                best, best_D = val, D_ids
        nums.append(best)
        tags.append(best_D.tolist() if best_D is not None else None)
    rep = _ratio_report("rho", g, family, nums, profile, delta_grid,
                        family.ball_factor,
                        extra_meta={"inner_budget": dict(inner_budget or {})})
    for d in rep.witness:
        rep.witness[d]["D"] = tags[rep.witness[d]["member_index"]]
    return rep


def check_pcycle(g, sets, delta, inner_budget=None):
    """Best constants of the fixed-exponent equivalence cycle over the sets.

    C1: Ebar(A) <= C mu(A)^delta, C2: lambda^{-1}(A) <= C mu(A)^delta,
    C3: rho(D,A) mu(D) <= C mu(A)^delta over D inside A.  Reports the three
    constants and their pairwise ratios; the equivalence predicts they are
    finite together, not equal.
    """
    from .potential import LocalResistance

    C1 = C2 = C3 = 0.0
    w1 = w2 = w3 = None
    for A in sets:
        muA_d = A.measure() ** delta
        e = extreme_exit_time(g, A)[0] / muA_d
        l = (1.0 / lambda_min(g, A).value) / muA_d
        r = 0.0
        if not A.is_whole_graph():
            ctx = LocalResistance(g, A.members)
            for D_ids in _inner_sets(g, A.members, inner_budget):
                val = ctx.rho(D_ids) * float(g.mu[D_ids].sum())
                r = max(r, val / muA_d)
        if e > C1:
            C1, w1 = e, A.members.tolist()
        if l > C2:
            C2, w2 = l, A.members.tolist()
        if r > C3:
            C3, w3 = r, A.members.tolist()
    ratios = {
        "C1_over_C2": C1 / C2 if C2 else float("inf"),
        "C2_over_C3": C2 / C3 if C3 else float("inf"),
        "C3_over_C1": C3 / C1 if C1 else float("inf"),
    }
    return {
        "check": "pcycle",
        "graph_id": g.graph_id(),
        "delta": float(delta),
        "C1_exit": C1, "C2_eigen": C2, "C3_resistance": C3,
        "witnesses": {"C1": w1, "C2": w2, "C3": w3},
        "ratios": ratios,
        "pass": bool(np.isfinite([C1, C2, C3]).all()),
    }


def check_corollary_forms(g, family, profile, delta_grid, inner_budget=None):
    """Relative forms at the fixed ball B = B(x,2R): exit-time, eigenvalue and
    two-exponent resistance variants.  The family must live inside B(x,2R)
    (build it with ball_factor=2)."""
    if family.ball_factor != 2:
        raise ValueError("corollary forms quantify over A inside B(x,2R); "
                         "build the family with ball_factor=2")
    x, R = family.base
    B = ball(g, x, 2 * R)
    muB = B.measure()
    ebarB = extreme_exit_time(g, B)[0]
    lamB_inv = 1.0 / lambda_min(g, B).value
    from .potential import annulus_resistance

    rho_ann = annulus_resistance(g, x, R, 2 * R)

    mus = np.array([float(g.mu[m].sum()) for m in family.members])
    ebars = np.array([extreme_exit_time(g, VertexSet(g, m))[0]
                      for m in family.members])
    lams = np.array([1.0 / lambda_min(g, VertexSet(g, m)).value
                     for m in family.members])

    out = {}
    for name, nums, denom in (("FKE", ebars, ebarB), ("fkll", lams, lamB_inv)):
        worst, wit = {}, {}
        for d in delta_grid:
            ratios = (nums / denom) / (mus / muB) ** d
            i = int(np.argmax(ratios))
            worst[d] = float(ratios[i])
            wit[d] = {"A": family.members[i].tolist(), "x": x, "R": R}
        out[name] = InequalityReport(
            name, g.graph_id(), list(delta_grid), worst, wit,
            all(np.isfinite(v) for v in worst.values()),
            {"normalizer": denom, "mu_B": muB, "ball_factor": 2})

    from .potential import LocalResistance

    worst, wit = {d: 0.0 for d in delta_grid}, {d: None for d in delta_grid}
    for ids, muA in zip(family.members, mus):
        A = VertexSet(g, ids)
        if A.is_whole_graph():
            continue
        ctx = LocalResistance(g, ids)
        for D_ids in _inner_sets(g, ids, inner_budget):
            rho = ctx.rho(D_ids)
            muD = float(g.mu[D_ids].sum())
            for d in delta_grid:
                rhs_shape = (muA / muD) ** d * (muD / muB) ** (d - 1)
                val = (rho / rho_ann) / rhs_shape
                if val > worst[d]:
                    worst[d] = float(val)
                    wit[d] = {"A": ids.tolist(), "D": D_ids.tolist(), "x": x, "R": R}
    out["FKrr"] = InequalityReport(
        "FKrr", g.graph_id(), list(delta_grid), worst, wit,
        all(np.isfinite(v) for v in worst.values()),
        {"normalizer": rho_ann, "mu_B": muB, "ball_factor": 2})
    return out


def stability_verdict(constants, factor=4.0):
    """True when the per-scale constants agree within the given factor."""
    vals = [v for v in constants if np.isfinite(v) and v > 0]
    if len(vals) < 2:
        return False
    return max(vals) / min(vals) <= factor
