"""Transition operator, iterated heat kernels, killed walks and Green functions.

The heat kernel is p_n(x,y) = P_n(x,y) / mu(y); by reversibility it equals
the n-fold application of P to the measure-normalized point mass at x, which
is how it is computed here (n sparse matvecs, no dense powers).  Killed
kernels run the same iteration on the operator restricted to the set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse

from . import solve
from .errors import (
    AbsorbingSet,
    HorizonExceeded,
    SourceOutsideSet,
)
from .graph import VertexSet, WeightedGraph, ball


@dataclass
class KernelSlice:
    """One row p_n(source, .) of the (possibly killed) heat kernel."""

    graph: WeightedGraph
    source: int
    time: int
    values: np.ndarray
    killed_on: Optional[VertexSet] = None

    def mass(self):
        """sum_y p_n(x,y) mu(y); equals 1 exactly when the walk is not killed."""
        return float(self.values @ self.graph.mu)

    def value(self, y):
        return float(self.values[y])


def transition_step(g, f):
    """Apply the Markov operator once: (Pf)(x) = sum_y P(x,y) f(y)."""
    return g.P @ np.asarray(f, dtype=np.float64)


def exact_horizon(g, x):
    """Largest n for which p_n(x, .) on this graph matches the infinite graph."""
    return g.dist_to_truncated(x)


def heat_kernel(g, x, n, *, require_exact=False):
    """Heat kernel row p_n(x, .) after n transition steps.

    Parameters
    ----------
    g : WeightedGraph
    x : int
        Source vertex.
    n : int
        Number of steps, n >= 0.
    require_exact : bool
        When set, raise :class:`HorizonExceeded` unless n <= d(x, truncation
        boundary), i.e. unless the row provably equals the infinite-graph
        kernel.  Without it the row is the exact kernel of the finite graph.
    """
    if n < 0:
        raise ValueError("time must be >= 0")
    if require_exact and n > exact_horizon(g, x):
        raise HorizonExceeded(
            f"time {n} exceeds the exact horizon {exact_horizon(g, x)} at {x}")
    v = np.zeros(g.vertex_count)
    v[x] = 1.0 / g.mu[x]
    P = g.P
    for _ in range(int(n)):
        v = P @ v
    return KernelSlice(g, int(x), int(n), v)


def killed_kernel(g, A, x, n):
    """Dirichlet heat kernel row p_n^A(x, .), supported on A."""
    if x not in A:
        raise SourceOutsideSet(f"source {x} outside the killed set")
    members = A.members
    pos = int(np.searchsorted(members, x))
    PA = solve.restricted_operator(g, members)
    v = np.zeros(members.size)
    v[pos] = 1.0 / g.mu[x]
    for _ in range(int(n)):
        v = PA @ v
    full = np.zeros(g.vertex_count)
    full[members] = v
    return KernelSlice(g, int(x), int(n), full, killed_on=A)


def killed_diagonal_sequence(g, A, x, n_max):
    """P_k^A(x,x) for k = 0..n_max (used by the time-monotonicity checks)."""
    members = A.members
    if x not in A:
        raise SourceOutsideSet(f"source {x} outside the killed set")
    pos = int(np.searchsorted(members, x))
    PA = solve.restricted_operator(g, members)
    u = np.zeros(members.size)
    u[pos] = 1.0
    out = np.empty(n_max + 1)
    out[0] = 1.0
    for k in range(1, n_max + 1):
        u = PA.T @ u
        out[k] = u[pos]
    return out


def green_function(g, A, y):
    """Row G^A(y, .) of the local Green function, zero outside A.

    G^A(y,z) is the expected number of visits to z before the walk started at
    y exits A; it solves (I - P^A)^T applied to the z-column structure, i.e.
    row y of (I - P^A)^{-1}.
    """
    if A.is_whole_graph():
        raise AbsorbingSet("Green function needs a set the walk can exit")
    if y not in A:
        raise SourceOutsideSet(f"source {y} outside the set")
    members = A.members
    pos = int(np.searchsorted(members, y))
    e = np.zeros(members.size)
    e[pos] = 1.0
    row = solve.solve_dirichlet_transpose(g, members, e)
    full = np.zeros(g.vertex_count)
    full[members] = row
    return full


def green_kernel(g, A, y):
    """g^A(y,z) = G^A(y,z) / mu(z); symmetric in (y,z)."""
    return green_function(g, A, y) / g.mu


def survival_probability(g, x, R, n):
    """P_x(T_{B(x,R)} < n): probability the walk leaves the ball before time n.

    Exact for the infinite graph the finite one stands in for, because the
    killed iteration only uses transitions inside the ball; hence the guard
    asks that B(x,R) contain no truncation-added vertex.
    """
    if n < 1 or R < 1:
        raise ValueError("need n >= 1 and R >= 1")
    return float(survival_series(g, x, R, n)[int(n)])


def survival_series(g, x, R, n_max):
    """P_x(T_{B(x,R)} < n) for n = 0..n_max in one killed evolution."""
    B = ball(g, x, R)
    if B.touches(g.truncated):
        raise HorizonExceeded(f"ball B({x},{R}) touches the truncation boundary")
    members = B.members
    pos = int(np.searchsorted(members, x))
    PAT = solve.restricted_operator(g, members).T.tocsr()
    u = np.zeros(members.size)
    u[pos] = 1.0
    out = np.empty(int(n_max) + 1)
    out[0] = 0.0
    for n in range(1, int(n_max) + 1):
        out[n] = 1.0 - u.sum()  # mass still alive after n-1 steps
        u = PAT @ u
    return out


def is_bipartite(g):
    """2-color the graph; returns (flag, colors) with colors in {0,1}."""
    from scipy.sparse import csgraph

    d = csgraph.dijkstra(g.W, unweighted=True, indices=g.root or 0)
    colors = (d.astype(np.int64) % 2).astype(np.int8)
    u, v = g.edge_u, g.edge_v
    ok = bool(np.all(colors[u] != colors[v]))
    return ok, colors


def two_step_graph(g):
    """Two-step graph: same vertices, weights mu*_xy = mu(x) P_2(x,y).

    Returns the graph on the parity component of the root when the original
    graph is bipartite (the two-step walk never leaves a parity class).
    Self-loops are enabled since P_2(x,x) > 0.

    When all edge weights are integers the two-step weights are stored as the
    exact integer numerators mu(x) P_2(x,y) * M with M = lcm of the vertex
    measures, and ``meta["measure_scale"] = M``; the stored vertex measure is
    then exactly M times the original one, which keeps the identity
    mu* = mu checkable without floating-point slack.  All walk quantities are
    invariant under this global weight scale.
    """
    import math

    W = g.W
    mu = g.mu
    int_weights = bool(np.all(g.edge_w == np.round(g.edge_w)))
    if int_weights:
        mu_int = np.round(mu).astype(np.int64)
        M = 1
        for m in sorted(set(mu_int.tolist())):
            M = math.lcm(M, int(m))
        if M > 2 ** 40:
            int_weights = False
    if int_weights:
        inv = sparse.diags(np.asarray(M / mu_int, dtype=np.float64))
    else:
        M = 1
        inv = sparse.diags(1.0 / mu)
    A = (W @ inv @ W).tocsr()  # A_xy = M * sum_z w_xz w_zy / mu(z) = M mu(x) P2(x,y)
    if int_weights:
        A.data = np.round(A.data)

    bip, colors = is_bipartite(g)
    root = g.root if g.root is not None else 0
    if bip:
        keep = np.nonzero(colors == colors[root])[0]
    else:
        keep = np.arange(g.vertex_count)
    A = A[keep, :][:, keep].tocoo()

    new_id = {int(v): i for i, v in enumerate(keep)}
    edges = [(int(r), int(c), float(w))
             for r, c, w in zip(A.row, A.col, A.data) if r <= c and w > 0]
    meta = {
        "family": "two_step",
        "params": dict(g.meta.get("params", {})),
        "parent_family": g.meta.get("family"),
        "parent_ids": [int(v) for v in keep],
        "parity": int(colors[root]) if bip else None,
        "measure_scale": M,
    }
    if g.truncated.size:
        meta["truncated"] = sorted(new_id[int(t)] for t in g.truncated
                                   if int(t) in new_id)
    from .graph import build_graph

    return build_graph(edges, allow_self_loops=True, root=new_id[int(root)], meta=meta)
