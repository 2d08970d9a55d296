"""Finite-difference reference implementation used as an independent oracle.

Partials come from tensor-product central stencils with Richardson
extrapolation in the step.  The invariants use formulas the jet pipeline
does not: the divergence form of the Laplacian for the affine normal, the
cubic form as -1/2 of the induced covariant derivative of the metric, and
the curvature from second derivatives of the metric.
"""
from __future__ import annotations

import itertools
from math import comb

import numpy as np


def central(f, u, mu, h):
    """Central-difference estimate of d^mu f at u with spacing h (error O(h^2))."""
    u = np.asarray(u, dtype=float)
    axes = []
    for i, k in enumerate(mu):
        if k:
            axes.append([(i, (k / 2 - j) * h, (-1) ** j * comb(k, j) / h ** k) for j in range(k + 1)])
    if not axes:
        return np.asarray(f(u), dtype=float)
    total = 0.0
    for combo in itertools.product(*axes):
        du = np.zeros_like(u)
        w = 1.0
        for i, off, wt in combo:
            du[i] += off
            w *= wt
        total = total + w * np.asarray(f(u + du), dtype=float)
    return total


def richardson(f, u, mu, h0, levels=3):
    """Richardson tableau over steps h0, h0/2, ... for the central stencil."""
    T = [[central(f, u, mu, h0 / 2 ** i)] for i in range(levels)]
    for i in range(1, levels):
        for j in range(1, i + 1):
            prev, cur = T[i - 1][j - 1], T[i][j - 1]
            T[i].append(cur + (cur - prev) / (4 ** j - 1))
    return T[-1][-1]


# default base steps per derivative order; high orders need larger steps to
# keep the h^-k roundoff amplification below the truncation error
STEPS = {1: 1e-2, 2: 2e-2, 3: 5e-2, 4: 8e-2}


def partial(f, u, mu, h0=None, levels=3):
    k = sum(mu)
    return richardson(f, u, mu, STEPS.get(k, 1e-2) if h0 is None else h0, levels)


def _unit(i, n):
    e = [0] * n
    e[i] = 1
    return tuple(e)


def _pair(i, j, n):
    e = [0] * n
    e[i] += 1
    e[j] += 1
    return tuple(e)


def first_partials(f, u, h0=1e-2):
    n = len(u)
    return np.array([partial(f, u, _unit(i, n), h0) for i in range(n)])


def second_partials(f, u, h0=2e-2):
    n = len(u)
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            out[i][j] = out[j][i] = partial(f, u, _pair(i, j, n), h0)
    return np.array(out)


def metric(spec, u):
    """Blaschke metric from det[x_1..x_n, x_ij]."""
    u = np.asarray(u, dtype=float)
    n = len(u)
    x1 = first_partials(spec, u)
    x2 = second_partials(spec, u)
    D = np.array([[np.linalg.det(np.column_stack([*x1, x2[i, j]])) for j in range(n)] for i in range(n)])
    if np.all(np.linalg.eigvalsh(D) < 0):
        D = -D
    return abs(np.linalg.det(D)) ** (-1.0 / (n + 2)) * D


def affine_normal(spec, u):
    """xi = (1/n) (1/sqrt G) d_i (sqrt G g^ij x_j)."""
    u = np.asarray(u, dtype=float)
    n = len(u)

    def flux(v):
        g = metric(spec, v)
        x1 = first_partials(spec, v)
        return np.sqrt(np.linalg.det(g)) * (np.linalg.inv(g) @ x1)  # (n, n+1)

    div = sum(partial(lambda v, i=i: flux(v)[i], u, _unit(i, n), 1e-2) for i in range(n))
    return div / (n * np.sqrt(np.linalg.det(metric(spec, u))))


def shape_operator(spec, u):
    """B from d_i xi = -x_*(B e_i); returns (B, L1)."""
    u = np.asarray(u, dtype=float)
    n = len(u)
    x1 = first_partials(spec, u)
    xi = affine_normal(spec, u)
    frame = np.column_stack([*x1, xi])
    dxi = np.array([partial(lambda v: affine_normal(spec, v), u, _unit(i, n), 1e-2) for i in range(n)])
    cols = np.linalg.solve(frame, dxi.T)  # (n+1, n)
    B = -cols[:n]
    return B, float(np.trace(B) / n)


def cubic_form(spec, u):
    """A = -1/2 (nabla g) with the induced connection of the affine normal."""
    u = np.asarray(u, dtype=float)
    n = len(u)
    x1 = first_partials(spec, u)
    x2 = second_partials(spec, u)
    xi = affine_normal(spec, u)
    frame = np.column_stack([*x1, xi])
    Gam = np.zeros((n, n, n))  # Gam[k, i, j]
    for i in range(n):
        for j in range(n):
            Gam[:, i, j] = np.linalg.solve(frame, x2[i, j])[:n]
    g = metric(spec, u)
    dg = np.array([partial(lambda v: metric(spec, v), u, _unit(k, n), 1e-2) for k in range(n)])  # dg[k,i,j]
    C = dg - np.einsum("lki,lj->kij", Gam, g) - np.einsum("lkj,il->kij", Gam, g)
    return -0.5 * C


def lowered_curvature(spec, u):
    """R_ijkl = g(R(e_k, e_l) e_i, e_j) from second derivatives of the metric."""
    u = np.asarray(u, dtype=float)
    n = len(u)
    gf = lambda v: metric(spec, v)  # noqa: E731
    g = gf(u)
    gi = np.linalg.inv(g)
    dg = np.array([partial(gf, u, _unit(k, n), 1e-2) for k in range(n)])  # dg[k,i,j] = d_k g_ij
    ddg = second_partials(gf, u, 5e-2)  # ddg[a,b,i,j]
    first = 0.5 * (np.einsum("jki->kij", dg) + np.einsum("ikj->kij", dg) - dg)  # [k,i,j]: Gamma_{k,ij}
    Gam = np.einsum("mk,kij->mij", gi, first)
    # R_{abcd} with (a,b,c,d) -> g(R(e_c,e_d)e_b, e_a) classical lowered form
    Rc = np.zeros((n,) * 4)
    for a, b, c, d in itertools.product(range(n), repeat=4):
        t = 0.5 * (ddg[b, c, a, d] + ddg[a, d, b, c] - ddg[a, c, b, d] - ddg[b, d, a, c])
        t += np.einsum("p,pq,q->", first[:, b, c], gi, first[:, a, d]) - np.einsum(
            "p,pq,q->", first[:, b, d], gi, first[:, a, c])
        Rc[a, b, c, d] = t
    # Rc[a,b,c,d] = <R(e_c, e_d) e_b, e_a>; our lowering R_ijkl = <R(e_k,e_l)e_i, e_j>
    return np.einsum("jikl->ijkl", Rc), Gam


def pick(A, g):
    n = g.shape[0]
    gi = np.linalg.inv(g)
    return float(np.einsum("ijk,abc,ia,jb,kc->", A, A, gi, gi, gi) / (n * (n - 1)))
