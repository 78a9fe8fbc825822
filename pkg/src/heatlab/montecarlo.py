"""Stochastic oracle: simulate the walk to cross-validate exit times and tails.

Transition sampling uses per-vertex alias tables (built once per graph, so a
step costs two uniforms and two gathers regardless of degree).  Randomness is
counter-based Philox keyed by (seed, block index) over fixed-size trial
blocks: blocks are independent streams, results do not depend on execution
order across blocks, and identical seeds reproduce bit-identical estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AbsorbingSet, SourceOutsideSet
from .graph import ball

BLOCK = 256


@dataclass
class SimResult:
    estimate: float
    std_error: float
    trials: int
    seed: int


def _alias_tables(g):
    """Vose alias tables for every vertex, concatenated in CSR layout."""
    if g._alias is not None:
        return g._alias
    W = g.W
    probs = np.empty(W.nnz)
    alias = np.empty(W.nnz, dtype=np.int64)
    indptr, data = W.indptr, W.data
    for v in range(g.vertex_count):
        lo, hi = indptr[v], indptr[v + 1]
        k = hi - lo
        p = data[lo:hi] / g.mu[v] * k
        al = np.arange(k)
        small = [i for i in range(k) if p[i] < 1.0]
        large = [i for i in range(k) if p[i] >= 1.0]
        p = p.copy()
        while small and large:
            s, l = small.pop(), large.pop()
            alias[lo + s] = lo + l
            probs[lo + s] = p[s]
            p[l] = p[l] - (1.0 - p[s])
            (small if p[l] < 1.0 else large).append(l)
        for i in large + small:
            probs[lo + i] = 1.0
            alias[lo + i] = lo + i
        probs[lo:hi] = probs[lo:hi]
    g._alias = (probs, alias, W.indices, indptr)
    return g._alias


def _step(g, current, u1, u2):
    probs, alias, nbr, indptr = _alias_tables(g)
    lo = indptr[current]
    deg = indptr[current + 1] - lo
    slot = lo + (u1 * deg).astype(np.int64)
    chosen = np.where(u2 < probs[slot], slot, alias[slot])
    return nbr[chosen]


def _block_seeds(trials):
    return range((trials + BLOCK - 1) // BLOCK)


def simulate_exit(g, A, x, trials, seed):
    """Empirical mean of the exit time T_A over independent walks from x."""
    if x not in A:
        raise SourceOutsideSet(f"start {x} outside the set")
    if A.is_whole_graph():
        raise AbsorbingSet("the walk never exits the whole graph")
    if trials < 1:
        raise ValueError("need at least one trial")
    inA = A.mask()
    times = []
    for b in _block_seeds(trials):
        m = min(BLOCK, trials - b * BLOCK)
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, b],
                                                                dtype=np.uint64)))
        cur = np.full(m, int(x), dtype=np.int64)
        t = np.zeros(m, dtype=np.int64)
        active = np.ones(m, dtype=bool)
        while active.any():
            idx = np.nonzero(active)[0]
            u = rng.random((idx.size, 2))
            cur[idx] = _step(g, cur[idx], u[:, 0], u[:, 1])
            t[idx] += 1
            active[idx] = inA[cur[idx]]
        times.append(t)
    t = np.concatenate(times).astype(np.float64)
    se = float(t.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return SimResult(float(t.mean()), se, int(trials), int(seed))


def simulate_tail(g, x, R, n, trials, seed):
    """Empirical frequency of {T_{B(x,R)} < n} with its binomial standard error."""
    A = ball(g, x, R)
    if trials < 1:
        raise ValueError("need at least one trial")
    inA = A.mask()
    hits = 0
    for b in _block_seeds(trials):
        m = min(BLOCK, trials - b * BLOCK)
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, b],
                                                                dtype=np.uint64)))
        cur = np.full(m, int(x), dtype=np.int64)
        active = np.ones(m, dtype=bool)
        for _ in range(int(n) - 1):
            if not active.any():
                break
            idx = np.nonzero(active)[0]
            u = rng.random((idx.size, 2))
            cur[idx] = _step(g, cur[idx], u[:, 0], u[:, 1])
            active[idx] = inA[cur[idx]]
        hits += int((~active).sum())
    p = hits / trials
    se = float(np.sqrt(p * (1 - p) / trials))
    return SimResult(float(p), se, int(trials), int(seed))
