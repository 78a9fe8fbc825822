"""Effective resistance, mean exit times, exit profiles and the sub-Gaussian kernel.

Resistances come from the discrete Dirichlet problem (potential 1 on A, 0 on
B, harmonic in between); exit times from the linear system (I - P^A) u = 1.
The exit profile tabulates E(x,R) over R, carries its generalized inverse
e(x,n) = min{r : E(x,r) >= n}, and fits the walk-dimension exponent from
dyadic scales.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from . import solve
from .errors import (
    AbsorbingSet,
    BeyondProfile,
    HorizonExceeded,
    RadiusOrder,
    SetsIntersect,
    SourceOutsideSet,
)
from .graph import VertexSet, ball


# -- resistance --------------------------------------------------------------

def harmonic_potential(g, A, B):
    """Potential with f=1 on A, f=0 on B, harmonic elsewhere (full length)."""
    if np.intersect1d(A.members, B.members).size:
        raise SetsIntersect("A and B must be disjoint")
    if len(A) == 0 or len(B) == 0:
        raise SetsIntersect("A and B must both be nonempty")
    fixed = np.union1d(A.members, B.members)
    interior = np.setdiff1d(np.arange(g.vertex_count), fixed)
    values = np.concatenate([np.ones(len(A)), np.zeros(len(B))])
    ids = np.concatenate([A.members, B.members])
    return solve.harmonic_interpolation(g, interior, ids, values)


def effective_resistance(g, A, B):
    """rho(A,B): inverse of the minimal Dirichlet energy between A and B."""
    f = harmonic_potential(g, A, B)
    from .spectral import dirichlet_energy

    energy = dirichlet_energy(g, f)
    return 1.0 / energy


def annulus_resistance(g, x, r, R):
    """rho(x,r,R) = rho(B(x,r), complement of B(x,R))."""
    if not (0 < r < R):
        raise RadiusOrder(f"need 0 < r < R, got r={r}, R={R}")
    BR = ball(g, x, R)
    if BR.touches(g.truncated):
        raise HorizonExceeded(f"B({x},{R}) touches the truncation boundary")
    outside = BR.complement()
    if len(outside) == 0:
        raise HorizonExceeded(f"B({x},{R}) covers the whole graph")
    return effective_resistance(g, ball(g, x, r), outside)


class LocalResistance:
    """Resistances rho(D, complement of S) for many D inside a fixed small S.

    The optimal potential (1 on D, harmonic on S minus D, 0 off S) is
    supported on S, so everything reduces to a dense problem on the closure
    of S; extracting that once makes per-D solves cheap.
    """

    def __init__(self, g, support_ids):
        S = np.asarray(support_ids, dtype=np.int64)
        Sset = VertexSet(g, S)
        if Sset.is_whole_graph():
            raise AbsorbingSet("the support must have a nonempty complement")
        closure_ids = Sset.closure().members
        self.closure_ids = closure_ids
        self.pos = {int(v): i for i, v in enumerate(closure_ids)}
        W = g.W[closure_ids, :][:, closure_ids].toarray()
        self.W = W
        self.L = np.diag(W.sum(axis=1)) - W  # local Dirichlet form matrix
        self.mu = g.mu[closure_ids]          # true measures (row sums may differ)
        self.support_pos = np.array([self.pos[int(v)] for v in S], dtype=np.int64)

    def rho(self, D_ids):
        """rho(D, complement of S); D must be inside S."""
        D_pos = np.array([self.pos[int(v)] for v in D_ids], dtype=np.int64)
        m = len(self.closure_ids)
        f = np.zeros(m)
        f[D_pos] = 1.0
        interior = np.setdiff1d(self.support_pos, D_pos)
        if interior.size:
            W_ii = self.W[np.ix_(interior, interior)]
            P_ii = W_ii / self.mu[interior, None]
            rhs = (self.W[np.ix_(interior, D_pos)] / self.mu[interior, None]).sum(axis=1)
            f[interior] = np.linalg.solve(np.eye(interior.size) - P_ii, rhs)
        energy = float(f @ (self.L @ f))
        return 1.0 / energy


# -- exit times --------------------------------------------------------------

def exit_time_vector(g, A):
    """u with u(x) = E_x(A) for x in A, solved from (I - P^A) u = 1."""
    if A.is_whole_graph():
        raise AbsorbingSet("the walk never exits the whole graph")
    members = A.members
    return solve.solve_dirichlet(g, members, np.ones(members.size))


def mean_exit_time(g, A, x):
    """E_x(A): expected number of steps before the walk leaves A."""
    if x not in A:
        raise SourceOutsideSet(f"start {x} outside the set")
    u = exit_time_vector(g, A)
    return float(u[np.searchsorted(A.members, x)])


def extreme_exit_time(g, A):
    """(max_x E_x(A), argmax); ties resolved toward the smallest vertex id."""
    u = exit_time_vector(g, A)
    best = int(np.argmax(u))  # argmax returns the first, members are sorted
    return float(u[best]), int(A.members[best])


# -- exit profile ------------------------------------------------------------

@dataclass
class ExitProfile:
    """Table R -> E(x,R) with inverse and fitted walk-dimension exponents.

    beta is the least-squares slope of log E against log R over dyadic R,
    beta_prime the smallest observed dyadic slope (the lower exponent of the
    two-sided comparison), residual the max absolute log-misfit.
    """

    center: int
    q: float
    table: np.ndarray            # E(x,R) for R = 0..Rmax
    beta: float
    beta_prime: float
    residual: float
    dyadic_slopes: Dict[int, float] = field(default_factory=dict)

    @property
    def rmax(self):
        return len(self.table) - 1

    def E(self, R):
        R = int(R)
        if R < 0 or R > self.rmax:
            raise BeyondProfile(f"radius {R} outside 0..{self.rmax}")
        return float(self.table[R])

    def to_json_dict(self):
        return {
            "center": self.center,
            "q": self.q,
            "E": [float(v) for v in self.table],
            "beta": self.beta,
            "beta_prime": self.beta_prime,
            "residual": self.residual,
            "dyadic_slopes": {str(k): v for k, v in self.dyadic_slopes.items()},
        }


def exit_times_at(g, x, radii):
    """E(x,R) for the given radii, each from its own Dirichlet solve."""
    out = {}
    for R in radii:
        R = int(R)
        if R == 0:
            out[R] = 0.0
            continue
        B = ball(g, x, R)
        if B.touches(g.truncated):
            raise HorizonExceeded(f"B({x},{R}) touches the truncation boundary")
        out[R] = mean_exit_time(g, B, x)
    return out


def _fit_beta(table):
    rmax = len(table) - 1
    dyadic = [r for r in (2 ** k for k in range(0, 40)) if r <= rmax]
    slopes = {}
    for r in dyadic:
        if 2 * r <= rmax and table[r] > 0:
            slopes[r] = float(np.log2(table[2 * r] / table[r]))
    pts = [(np.log(r), np.log(table[r])) for r in dyadic if r >= 1 and table[r] > 0]
    if len(pts) >= 2:
        lr, le = np.array(pts).T
        beta, intercept = np.polyfit(lr, le, 1)
        residual = float(np.max(np.abs(le - (beta * lr + intercept))))
    else:
        beta, residual = float("nan"), float("nan")
    beta_prime = min(slopes.values()) if slopes else float("nan")
    return float(beta), float(beta_prime), residual, slopes


def exit_profile(g, x, Rmax, q=1.0):
    """Tabulate E(x,R) for R = 0..Rmax and fit the dyadic exponents.

    The profile is exact for the infinite graph the finite one stands in for,
    so B(x,Rmax) must avoid truncation-added vertices.  The table is strictly
    increasing; a failure of that is a solver bug and raises.
    """
    Rmax = int(Rmax)
    B = ball(g, x, Rmax)
    if B.touches(g.truncated):
        raise HorizonExceeded(f"B({x},{Rmax}) touches the truncation boundary")
    d = g.distances(x)
    order = np.argsort(d, kind="stable")
    dist_sorted = d[order]

    table = np.zeros(Rmax + 1)
    for R in range(1, Rmax + 1):
        count = int(np.searchsorted(dist_sorted, R, side="left"))
        members = np.sort(order[:count])
        u = solve.solve_dirichlet(g, members, np.ones(count))
        table[R] = u[np.searchsorted(members, x)]
    if np.any(np.diff(table) <= 0):
        raise AssertionError("exit profile must be strictly increasing")
    beta, beta_prime, residual, slopes = _fit_beta(table)
    return ExitProfile(int(x), float(q), table, beta, beta_prime, residual, slopes)


def inverse_exit(profile, n):
    """e(x,n) = min{r : E(x,r) >= n}; the spatial scale reached in time n."""
    if n <= 0:
        return 0
    if n > profile.table[-1]:
        raise BeyondProfile(
            f"n={n} beyond E(x,{profile.rmax}) = {profile.table[-1]}")
    return int(np.searchsorted(profile.table, n, side="left"))


def subgaussian_k(profile, n, R, q=None):
    """Largest integer k >= 1 with n/k <= q E(z, floor(R/k)); 0 if none.

    E(z,0) = 0, so candidates with floor(R/k) = 0 never qualify and the scan
    stops at k = R.
    """
    q = profile.q if q is None else q
    R = int(R)
    if R > profile.rmax:
        raise BeyondProfile(f"need E up to R={R}, profile stops at {profile.rmax}")
    best = 0
    for k in range(1, R + 1):
        if n / k <= q * profile.table[R // k]:
            best = k
    return best


def subgaussian_k_batch(profile, ns, R, q=None):
    """Vectorized :func:`subgaussian_k` over an array of times."""
    q = profile.q if q is None else q
    R = int(R)
    if R > profile.rmax:
        raise BeyondProfile(f"need E up to R={R}, profile stops at {profile.rmax}")
    ks = np.arange(1, R + 1)
    thresholds = ks * q * profile.table[R // ks]      # n <= t_k qualifies k
    ns = np.asarray(ns, dtype=np.float64)
    feasible = ns[:, None] <= thresholds[None, :]
    out = np.where(feasible.any(axis=1),
                   feasible.shape[1] - 1 - np.argmax(feasible[:, ::-1], axis=1) + 1,
                   0)
    return out.astype(np.int64)


class ProfileCache:
    """Per-vertex exit profiles computed on demand and grown as needed."""

    def __init__(self, g, q=1.0):
        self.g = g
        self.q = q
        self._profiles: Dict[int, ExitProfile] = {}

    def get(self, z, rmax):
        p = self._profiles.get(int(z))
        if p is None or p.rmax < rmax:
            p = exit_profile(self.g, int(z), int(rmax), q=self.q)
            self._profiles[int(z)] = p
        return p


def ball_k(g, x, n, R, q=1.0, cache=None):
    """k(x,n,R) = min over z in B(x,R) of k_z(n,R)."""
    cache = cache or ProfileCache(g, q)
    members = ball(g, x, R).members
    best = None
    for z in members:
        kz = subgaussian_k(cache.get(z, R), n, R, q=q)
        best = kz if best is None else min(best, kz)
        if best == 0:
            break
    return int(best or 0)


def ball_k_batch(g, x, ns, R, q=1.0, cache=None):
    """Vectorized :func:`ball_k` over an array of times."""
    cache = cache or ProfileCache(g, q)
    members = ball(g, x, R).members
    best = None
    for z in members:
        kz = subgaussian_k_batch(cache.get(z, R), ns, R, q=q)
        best = kz if best is None else np.minimum(best, kz)
    return best if best is not None else np.zeros(len(ns), dtype=np.int64)


def kappa(g, n, A, B, q=1.0, cache=None):
    """kappa(n,A,B) = max{k(n,A,B), k(n,B,A)} with k(n,A,B) = min_{z in A} k(z,n,d).

    d = d(A,B) and k(z,n,d) is the ball minimum :func:`ball_k`.
    """
    if np.intersect1d(A.members, B.members).size:
        raise SetsIntersect("kappa needs disjoint sets")
    cache = cache or ProfileCache(g, q)
    d = int(g.distance_to_set(A.members, B.members))
    if d < 1:
        raise SetsIntersect("sets must be at positive distance")

    def k_dir(S):
        vals = [ball_k(g, int(z), n, d, q=q, cache=cache) for z in S.members]
        return min(vals)

    return max(k_dir(A), k_dir(B))
