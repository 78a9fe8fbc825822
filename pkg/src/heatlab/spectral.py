"""Smallest Dirichlet eigenvalue and the Dirichlet energy form.

lambda(A) is the smallest eigenvalue of I - S_A where
S_A(x,y) = mu_xy / sqrt(mu(x) mu(y)) restricted to A, the self-adjoint
realization of the killed operator P^A in the mu inner product.  Dense
solves are used up to DENSE_LIMIT vertices, inverse iteration beyond;
both report a residual-certified interval around the returned value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg as sla
from scipy import sparse
from scipy.sparse import linalg as spla

from . import solve
from .errors import EmptySet, HorizonExceeded, WholeGraph

DENSE_LIMIT = 2000
TARGET_RELWIDTH = 1e-9


@dataclass
class EigenResult:
    value: float
    vector: np.ndarray          # on the whole graph, zero off A
    residual: float
    certified_interval: Tuple[float, float]


def dirichlet_energy(g, f):
    """E(f,f) = 1/2 sum_{x,y} mu_xy (f(x) - f(y))^2 (self-loops contribute 0)."""
    f = np.asarray(f, dtype=np.float64)
    diff = f[g.edge_u] - f[g.edge_v]
    return float(np.sum(g.edge_w * diff * diff))


def _symmetrized(g, members):
    SA = solve.restricted_weights(g, members)
    root = np.sqrt(g.mu[members])
    return sparse.diags(1.0 / root) @ SA @ sparse.diags(1.0 / root)


def lambda_min(g, A, *, require_exact=False):
    """Smallest Dirichlet eigenvalue lambda(A) with certified enclosure.

    Parameters
    ----------
    A : VertexSet
        Nonempty proper subset of the graph.
    require_exact : bool
        When set, reject sets that touch the truncation boundary, where the
        finite graph's measure differs from the infinite one's.
    """
    if len(A) == 0:
        raise EmptySet("lambda(A) needs a nonempty set")
    if A.is_whole_graph():
        raise WholeGraph("lambda(A) needs a proper subset")
    if require_exact and A.touches(A.graph.truncated):
        raise HorizonExceeded("set touches the truncation boundary")

    members = A.members
    m = members.size
    S = _symmetrized(g, members)
    if m <= DENSE_LIMIT:
        dense = S.toarray()
        theta, vecs = sla.eigh(dense, subset_by_index=[m - 1, m - 1])
        theta = float(theta[0])
        psi = vecs[:, 0]
        lam = 1.0 - theta
        res = float(np.linalg.norm(dense @ psi - theta * psi))
    else:
        lam, psi, res = _inverse_iteration(S, m)

    if psi[np.argmax(np.abs(psi))] < 0:
        psi = -psi
    vec = np.zeros(g.vertex_count)
    vec[members] = psi / np.sqrt(g.mu[members])
    interval = (max(lam - res, 0.0), lam + res)
    return EigenResult(float(lam), vec, res, interval)


def _inverse_iteration(S, m, max_iter=500):
    """Inverse iteration on I - S with a deterministic start vector."""
    M = (sparse.identity(m, format="csr") - S).tocsc()
    lu = spla.splu(M)
    v = np.full(m, 1.0 / np.sqrt(m))
    lam = np.inf
    for _ in range(max_iter):
        v = lu.solve(v)
        v /= np.linalg.norm(v)
        Mv = M @ v
        lam = float(v @ Mv)
        res = float(np.linalg.norm(Mv - lam * v))
        if res <= max(0.5 * TARGET_RELWIDTH * lam, 1e-14):
            return lam, v, res
    return lam, v, res


def rayleigh_quotient(g, f):
    """E(f,f) / (f,f)_mu; an upper bound on lambda(supp f)."""
    f = np.asarray(f, dtype=np.float64)
    denom = float((f * f) @ g.mu)
    if denom == 0:
        raise EmptySet("zero function")
    return dirichlet_energy(g, f) / denom


def norm_l1(g, f):
    return float(np.abs(f) @ g.mu)


def norm_l2_sq(g, f):
    f = np.asarray(f, dtype=np.float64)
    return float((f * f) @ g.mu)


def nash_ratio(g, f, delta):
    """||f||_2^2 (||f||_2/||f||_1)^(2 delta) / E(f,f) for nonnegative f."""
    l2sq = norm_l2_sq(g, f)
    l1 = norm_l1(g, f)
    en = dirichlet_energy(g, f)
    if en == 0 or l1 == 0:
        return 0.0
    return l2sq * (np.sqrt(l2sq) / l1) ** (2 * delta) / en


def nash_bound_from_fk(fk_constant, delta):
    """Provable Nash constant 4 * 6^delta * K for an FK constant K.

    If lambda(A)^{-1} <= K mu(A)^delta for every subset A of a region, then
    every nonnegative f supported in the region satisfies
    ||f||_2^2 (||f||_2/||f||_1)^(2 delta) <= 4 * 6^delta * K * E(f,f);
    the factor comes from splitting f at the level t = ||f||_2^2/(6||f||_1).
    """
    return 4.0 * 6.0 ** delta * fk_constant
