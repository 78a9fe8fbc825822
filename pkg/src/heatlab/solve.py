"""Sparse Dirichlet solvers shared by the kernel, spectral and potential modules.

Systems are solved by direct sparse factorization up to DIRECT_LIMIT unknowns
and by conjugate gradients on the symmetrized operator beyond that.  Both
paths are deterministic (fixed elimination order, fixed iteration order) so
repeated runs are bit-identical.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

DIRECT_LIMIT = 50_000
CG_TOL = 1e-12


def restricted_operator(g, members):
    """P^A: the transition matrix restricted to rows and columns in A."""
    members = np.asarray(members, dtype=np.int64)
    return g.P[members, :][:, members].tocsr()


def restricted_weights(g, members):
    members = np.asarray(members, dtype=np.int64)
    return g.W[members, :][:, members].tocsr()


def _cg_symmetrized(PA, mu_a, b, x0=None):
    """Solve (I - P^A) u = b through the symmetric form and CG."""
    root = np.sqrt(mu_a)
    M = sparse.diags(root) @ PA @ sparse.diags(1.0 / root)
    S = sparse.identity(PA.shape[0], format="csr") - M.tocsr()
    rhs = root * b
    x, info = spla.cg(S, rhs, x0=None if x0 is None else root * x0,
                      rtol=CG_TOL, atol=0.0, maxiter=20 * PA.shape[0])
    if info != 0:
        raise RuntimeError(f"conjugate gradient did not converge (info={info})")
    return x / root


def solve_dirichlet(g, members, rhs):
    """Solve (I - P^A) u = rhs on the index set A, returned in A-local order.

    rhs may be a vector or a matrix of stacked right-hand sides.
    """
    members = np.asarray(members, dtype=np.int64)
    PA = restricted_operator(g, members)
    m = members.size
    if m == 0:
        return np.zeros_like(np.asarray(rhs, dtype=np.float64))
    I = sparse.identity(m, format="csr")
    A = (I - PA).tocsc()
    rhs = np.asarray(rhs, dtype=np.float64)
    if m <= DIRECT_LIMIT:
        lu = spla.splu(A)
        return lu.solve(rhs)
    if rhs.ndim == 1:
        return _cg_symmetrized(PA, g.mu[members], rhs)
    return np.stack([_cg_symmetrized(PA, g.mu[members], col) for col in rhs.T], axis=1)


def solve_dirichlet_transpose(g, members, rhs):
    """Solve (I - P^A)^T u = rhs on the index set A."""
    members = np.asarray(members, dtype=np.int64)
    PA = restricted_operator(g, members)
    m = members.size
    I = sparse.identity(m, format="csr")
    A = (I - PA).T.tocsc()
    rhs = np.asarray(rhs, dtype=np.float64)
    if m <= DIRECT_LIMIT:
        return spla.splu(A).solve(rhs)
    mu_a = g.mu[members]
    # (I-P)^T = D (I-P) D^{-1} with D = diag(mu): reuse the symmetric path
    u = _cg_symmetrized(PA, mu_a, rhs / mu_a)
    return u * mu_a


def harmonic_interpolation(g, interior, boundary_ids, boundary_values):
    """Solve the discrete Dirichlet problem: harmonic on `interior`, given data.

    Returns the full-length potential, zero outside interior + boundary.
    """
    f = np.zeros(g.vertex_count)
    f[np.asarray(boundary_ids, dtype=np.int64)] = boundary_values
    interior = np.asarray(interior, dtype=np.int64)
    if interior.size:
        flux = g.P[interior, :] @ f  # boundary contribution; f is zero on interior
        P_ii = g.P[interior, :][:, interior]
        f[interior] = solve_dirichlet_from_operator(P_ii, flux)
    return f


def solve_dirichlet_from_operator(P_ii, rhs):
    m = P_ii.shape[0]
    A = (sparse.identity(m, format="csr") - P_ii).tocsc()
    if m <= 64:
        return np.linalg.solve(A.toarray(), rhs)
    return spla.splu(A).solve(np.asarray(rhs, dtype=np.float64))
