"""Weighted graphs with vertex measures, metric balls and boundary operations.

A :class:`WeightedGraph` is a finite connected graph with symmetric positive
edge weights.  The weights induce the vertex measure mu(x) (sum of incident
edge weights), the reversible walk P(x,y) = mu_xy / mu(x) and the usual
shortest-path metric.  Graphs are immutable after construction and safe to
share; every operation in this module is a pure read.

Graphs produced by the generators carry metadata describing which vertices
were added by truncating an infinite graph (``meta["truncated"]``) and the
largest radius ``safe_radius`` for which the triple ball around the root is
free of such vertices.  Operations that emulate infinite-graph quantities
check their inputs against the truncated set.
"""

from __future__ import annotations

import json

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import (
    ConflictingWeight,
    DisconnectedGraph,
    NonPositiveWeight,
    RadiusOrder,
    SelfLoopNotAllowed,
)


class WeightedGraph:
    """Finite symmetric-weighted graph; the universe for all computations.

    Use :func:`build_graph` or one of the generators instead of calling the
    constructor directly.

    Attributes
    ----------
    vertex_count : int
        Number of vertices; ids are dense in [0, vertex_count).
    edge_u, edge_v, edge_w : ndarray
        Canonical edge arrays with edge_u <= edge_v, sorted lexicographically.
    mu : ndarray, shape (vertex_count,)
        Vertex measure mu(x) = sum of incident edge weights (a self-loop
        contributes its weight once).
    root : int or None
        Distinguished vertex used by generators and presets.
    meta : dict
        Free-form metadata (family, params, safe_radius, coords, truncated).
    """

    def __init__(self, vertex_count, edge_u, edge_v, edge_w, root=None, meta=None):
        self.vertex_count = int(vertex_count)
        self.edge_u = np.asarray(edge_u, dtype=np.int64)
        self.edge_v = np.asarray(edge_v, dtype=np.int64)
        self.edge_w = np.asarray(edge_w, dtype=np.float64)
        self.root = None if root is None else int(root)
        self.meta = dict(meta) if meta else {}

        n = self.vertex_count
        loops = self.edge_u == self.edge_v
        u = np.concatenate([self.edge_u, self.edge_v[~loops]])
        v = np.concatenate([self.edge_v, self.edge_u[~loops]])
        w = np.concatenate([self.edge_w, self.edge_w[~loops]])
        self._W = sparse.csr_matrix((w, (u, v)), shape=(n, n))
        self._W.sum_duplicates()
        self.mu = np.asarray(self._W.sum(axis=1)).ravel()

        self._P = None
        self._PT = None
        self._dist_cache = {}
        self._alias = None

    # -- basic structure ---------------------------------------------------

    @property
    def W(self):
        """Symmetric weight matrix in CSR form (self-loops on the diagonal)."""
        return self._W

    @property
    def P(self):
        """Transition matrix P(x,y) = mu_xy / mu(x) in CSR form."""
        if self._P is None:
            self._P = sparse.diags(1.0 / self.mu) @ self._W
            self._P = self._P.tocsr()
        return self._P

    @property
    def PT(self):
        """Transpose of P in CSR form (for row-vector evolution)."""
        if self._PT is None:
            self._PT = self.P.T.tocsr()
        return self._PT

    @property
    def edge_count(self):
        return self.edge_u.shape[0]

    @property
    def has_self_loops(self):
        return bool(np.any(self.edge_u == self.edge_v))

    @property
    def safe_radius(self):
        """Truncation horizon from metadata, or None for a self-contained graph."""
        return self.meta.get("safe_radius")

    @property
    def truncated(self):
        """Vertex ids whose neighborhood was cut by truncation (may be empty)."""
        return np.asarray(self.meta.get("truncated", []), dtype=np.int64)

    def degrees(self):
        """Number of neighbors per vertex (a self-loop counts once)."""
        return np.diff(self._W.indptr)

    def neighbors(self, x):
        return self._W.indices[self._W.indptr[x]:self._W.indptr[x + 1]]

    def total_measure(self):
        return float(self.mu.sum())

    # -- metric ------------------------------------------------------------

    def distances(self, x):
        """Graph distances from x to every vertex (cached per center)."""
        x = int(x)
        d = self._dist_cache.get(x)
        if d is None:
            d = csgraph.dijkstra(self._W, unweighted=True, indices=x)
            self._dist_cache[x] = d
        return d

    def distance(self, x, y):
        return float(self.distances(x)[y])

    def distance_to_set(self, members, targets):
        """min over (a in members, b in targets) of d(a, b)."""
        members = np.asarray(members, dtype=np.int64)
        d = csgraph.dijkstra(self._W, unweighted=True, indices=members, min_only=True)
        return float(np.min(d[np.asarray(targets, dtype=np.int64)]))

    def dist_to_truncated(self, x):
        """Distance from x to the nearest truncation-added vertex (inf if none)."""
        t = self.truncated
        if t.size == 0:
            return np.inf
        return float(np.min(self.distances(x)[t]))

    def volume_table(self, x):
        """V(x, r) for r = 0 .. ecc(x)+1, where V(x,r) = mu(B(x,r)).

        Entry r holds the measure of the open ball of radius r, so the table
        starts at V(x,0) = 0 and ends at the total measure.
        """
        d = self.distances(x).astype(np.int64)
        per_dist = np.bincount(d, weights=self.mu)
        return np.concatenate([[0.0], np.cumsum(per_dist)])

    def volume(self, x, R):
        """mu-measure V(x,R) of the open ball B(x,R)."""
        table = self.volume_table(x)
        R = int(R)
        if R <= 0:
            return 0.0
        return float(table[min(R, len(table) - 1)])

    # -- serialization -----------------------------------------------------

    def to_json_dict(self):
        edges = []
        for u, v, w in zip(self.edge_u, self.edge_v, self.edge_w):
            wv = int(w) if float(w).is_integer() and abs(w) < 2**53 else float(w)
            edges.append([int(u), int(v), wv])
        return {
            "vertex_count": self.vertex_count,
            "edges": edges,
            "root": self.root,
            "meta": self.meta,
        }

    def graph_id(self):
        fam = self.meta.get("family", "graph")
        params = self.meta.get("params", {})
        tail = ",".join(f"{k}={params[k]}" for k in sorted(params))
        return f"{fam}({tail})" if tail else fam


class VertexSet:
    """Finite subset of a graph's vertices with boundary/closure/measure ops."""

    def __init__(self, graph, members):
        self.graph = graph
        m = np.unique(np.asarray(members, dtype=np.int64))
        if m.size and (m[0] < 0 or m[-1] >= graph.vertex_count):
            raise ValueError("vertex id out of range")
        self.members = m

    def __len__(self):
        return int(self.members.size)

    def __iter__(self):
        return iter(self.members.tolist())

    def __contains__(self, x):
        i = np.searchsorted(self.members, x)
        return bool(i < self.members.size and self.members[i] == x)

    def __eq__(self, other):
        return isinstance(other, VertexSet) and np.array_equal(self.members, other.members)

    def __repr__(self):
        return f"VertexSet({self.members.tolist()!r})"

    def measure(self):
        """mu(A) = sum of vertex measures over the members."""
        return float(self.graph.mu[self.members].sum())

    def indicator(self):
        f = np.zeros(self.graph.vertex_count)
        f[self.members] = 1.0
        return f

    def mask(self):
        m = np.zeros(self.graph.vertex_count, dtype=bool)
        m[self.members] = True
        return m

    def boundary(self):
        """Outer boundary: vertices outside A adjacent to a member of A."""
        W = self.graph.W
        touched = np.unique(np.concatenate(
            [W.indices[W.indptr[x]:W.indptr[x + 1]] for x in self.members]
        )) if len(self) else np.empty(0, dtype=np.int64)
        return VertexSet(self.graph, np.setdiff1d(touched, self.members, assume_unique=False))

    def closure(self):
        return VertexSet(self.graph, np.union1d(self.members, self.boundary().members))

    def complement(self):
        m = np.ones(self.graph.vertex_count, dtype=bool)
        m[self.members] = False
        return VertexSet(self.graph, np.nonzero(m)[0])

    def is_whole_graph(self):
        return len(self) == self.graph.vertex_count

    def touches(self, ids):
        ids = np.asarray(ids, dtype=np.int64)
        return bool(np.intersect1d(self.members, ids).size)


def build_graph(edge_list, *, allow_self_loops=False, root=None, meta=None):
    """Validate an edge list and construct a :class:`WeightedGraph`.

    Parameters
    ----------
    edge_list : iterable of (u, v, weight)
        Undirected weighted edges.  Duplicate entries (in either orientation)
        are accepted only when they agree on the weight.
    allow_self_loops : bool
        Self-loops (u == v) are rejected unless this is set.
    root, meta : optional
        Attached to the graph unchanged.

    Returns
    -------
    WeightedGraph

    Raises
    ------
    NonPositiveWeight, ConflictingWeight, SelfLoopNotAllowed, DisconnectedGraph
    """
    rows = list(edge_list)
    if not rows:
        raise DisconnectedGraph("empty edge list")
    u = np.asarray([r[0] for r in rows], dtype=np.int64)
    v = np.asarray([r[1] for r in rows], dtype=np.int64)
    w = np.asarray([r[2] for r in rows], dtype=np.float64)
    if np.any(u < 0) or np.any(v < 0):
        raise ValueError("negative vertex id")
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise NonPositiveWeight("edge weights must be positive and finite")
    if not allow_self_loops and np.any(u == v):
        raise SelfLoopNotAllowed("self-loops are disabled by default")

    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    order = np.lexsort((hi, lo))
    lo, hi, w = lo[order], hi[order], w[order]
    key = lo * (hi.max() + 1) + hi
    uniq, first = np.unique(key, return_index=True)
    if uniq.size != key.size:
        # duplicates exist: every entry must match the first occurrence
        for i, k in enumerate(key):
            j = first[np.searchsorted(uniq, k)]
            if w[i] != w[j]:
                raise ConflictingWeight(
                    f"edge ({lo[i]},{hi[i]}) has conflicting weights {w[j]} and {w[i]}"
                )
    lo, hi, w = lo[first], hi[first], w[first]

    n = int(hi.max()) + 1
    g = WeightedGraph(n, lo, hi, w, root=root, meta=meta)
    n_reached = csgraph.connected_components(g.W, directed=False, return_labels=False)
    if n_reached != 1 or np.any(g.mu == 0):
        raise DisconnectedGraph("graph is not connected")
    return g


def graph_to_json(g, path=None):
    """Serialize a graph to the JSON wire format; return the string."""
    text = json.dumps(g.to_json_dict(), sort_keys=True, indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def graph_from_json(source):
    """Load a graph from a JSON string, dict, or file path."""
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        doc = json.loads(source)
    else:
        with open(source) as fh:
            doc = json.load(fh)
    edges = [(int(u), int(v), float(w)) for u, v, w in doc["edges"]]
    has_loops = any(u == v for u, v, _ in edges)
    g = build_graph(edges, allow_self_loops=has_loops,
                    root=doc.get("root"), meta=doc.get("meta"))
    if g.vertex_count != doc["vertex_count"]:
        raise DisconnectedGraph("vertex_count does not match the edge list")
    return g


# -- metric balls and boundaries -------------------------------------------

def ball(g, x, R):
    """Open metric ball B(x,R) = {y : d(x,y) < R} as a :class:`VertexSet`.

    B(x,0) is empty and B(x,1) = {x}.
    """
    if R <= 0:
        return VertexSet(g, [])
    d = g.distances(x)
    return VertexSet(g, np.nonzero(d < R)[0])


def boundary(A):
    return A.boundary()


def closure(A):
    return A.closure()


def annulus_volume(g, x, r, R):
    """v(x,r,R) = V(x,R) - V(x,r), the measure of the annulus."""
    if r > R:
        raise RadiusOrder(f"need r <= R, got r={r}, R={R}")
    return g.volume(x, R) - g.volume(x, r)


# -- structural conditions ---------------------------------------------------

def check_p0(g, *, sample_centers=8, sample_targets=8, seed=0):
    """Achieved uniform transition lower bound p0 = min_{x~y} mu_xy / mu(x).

    Also asserts two consequences on the way out: every vertex degree is at
    most 1/p0, and mu(y) <= mu(x) / p0^d(x,y) on sampled pairs (relative
    tolerance 1e-12).  Both follow from the definition, so a failure means a
    broken graph.
    """
    u, v, w = g.edge_u, g.edge_v, g.edge_w
    ratios = np.concatenate([w / g.mu[u], w / g.mu[v]])
    p0 = float(ratios.min())

    deg_max = int(g.degrees().max())
    if deg_max > 1.0 / p0 * (1 + 1e-12):
        raise AssertionError(f"degree bound violated: {deg_max} > 1/{p0}")

    rng = np.random.default_rng(seed)
    centers = rng.choice(g.vertex_count, size=min(sample_centers, g.vertex_count),
                         replace=False)
    for x in centers:
        d = g.distances(x)
        targets = rng.choice(g.vertex_count, size=min(sample_targets, g.vertex_count),
                             replace=False)
        for y in targets:
            lhs = p0 ** d[y] * g.mu[y]
            if lhs > g.mu[x] * (1 + 1e-12):
                raise AssertionError(
                    f"measure comparison violated at ({x},{y}): {lhs} > {g.mu[x]}"
                )
    return p0


def volume_regularity_report(g, centers, radii, *, pd2v_samples=12, seed=0):
    """Observed volume-regularity constants over the given centers and radii.

    Returns a dict with the doubling constant D_V, the two-center doubling
    constant over sampled y in B(x,R), the anti-doubling factor A_V (smallest
    integer a with 2 V(x,R) <= V(x,aR) at every tested scale), a fitted volume
    exponent alpha, and the exponential-volume constant C with
    V(x,R) <= C^R mu(x).  The report always comes back; trends that break a
    property (for example doubling drifting upward on a binary tree) are
    visible in the per-scale tables.
    """
    rng = np.random.default_rng(seed)
    radii = [int(R) for R in radii]
    vd_rows = []
    pd2v_max = 0.0
    av_worst = 0
    vbound_c = 0.0
    alpha_fits = []
    for x in centers:
        table = g.volume_table(x)
        rmax = len(table) - 1

        def V(r):
            return table[min(max(int(r), 0), rmax)]

        logs = []
        for R in radii:
            if V(R) <= 0 or 2 * R > rmax:
                continue
            dv = V(2 * R) / V(R)
            vd_rows.append({"center": int(x), "R": R, "DV": float(dv)})
            logs.append((np.log(R), np.log(V(R))))

            members = ball(g, x, R).members
            take = min(pd2v_samples, members.size)
            ys = rng.choice(members, size=take, replace=False) if take else []
            for y in ys:
                vy = g.volume(int(y), R)
                if vy > 0:
                    pd2v_max = max(pd2v_max, V(2 * R) / vy)

            a = 2
            while a * R <= rmax and V(a * R) < 2 * V(R):
                a += 1
            av_worst = max(av_worst, a if V(a * R) >= 2 * V(R) else -1)

            vbound_c = max(vbound_c, (V(R) / g.mu[x]) ** (1.0 / R))

        if len(logs) >= 2:
            lr, lv = np.array(logs).T
            slope = np.polyfit(lr, lv, 1)[0]
            alpha_fits.append(float(slope))

    dvs = [row["DV"] for row in vd_rows]
    return {
        "vd_table": vd_rows,
        "D_V": float(max(dvs)) if dvs else float("nan"),
        "doubling_trend": float(dvs[-1] / dvs[0]) if len(dvs) >= 2 else 1.0,
        "PD2V_C": float(pd2v_max),
        "A_V": int(av_worst),
        "alpha": float(np.mean(alpha_fits)) if alpha_fits else float("nan"),
        "alpha_from_DV": float(np.log2(max(dvs))) if dvs else float("nan"),
        "vbound_C": float(vbound_c),
        "vbound_violations": [],
    }
