"""Equiaffine invariants of a hypersurface at a point.

Everything is computed from the order-4 Taylor jet of the immersion in the
Blaschke gauge:

* ``D_ij = det[x_1, ..., x_n, x_ij]`` and ``g = |det D|^{-1/(n+2)} D``;
* ``xi = (1/n) Laplacian_g x``;
* ``D_{e_i} xi = -x_*(B e_i)`` gives the shape operator ``B``;
* ``x_ij = Gamma^k_ij x_k + h_ij xi`` gives the induced connection, and the
  cubic form is ``A_ijk = g_kl (Gamma^l_ij - LeviCivita^l_ij)``.

Index conventions used throughout the package:

* ``A[i, j, k] = g(A(e_i, e_j), e_k)``, where ``A(X, Y) = nabla_X Y - hat-nabla_X Y``;
* ``curvature[x, y, z, m]`` is the ``m``-th component of ``R(e_x, e_y) e_z``;
* ``R[i, j, k, l] = g(R(e_k, e_l) e_i, e_j)`` so that a space form of
  curvature ``c`` has ``R_ijkl = c (g_il g_jk - g_ik g_jl)``;
* ``B[k, i]`` is the ``k``-th component of ``B(e_i)``;
* ``A_cov[i, j, k, l]`` is the Levi-Civita covariant derivative ``A_{ijk,l}``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateHessian,
    DegenerateImmersion,
    DimensionMismatch,
    DimensionTooSmall,
    NotLocallyConvex,
    SingularFrame,
)
from .jets import Jet, jdet, jeinsum, jet_variable, jinv, jstack
from .immersion import ImmersionSpec

DEFAULT_TOL = 1e-7

RESIDUAL_NAMES = (
    "apolarity",
    "gauss_general",
    "gauss_sphere",
    "codazzi_basic3",
    "trace_codazzi",
    "gauss_metric_form",
    "weingarten_tangency",
    "h_equals_g",
    "symmetry_A",
)


@dataclass
class TaylorData:
    n: int
    point: np.ndarray
    x: Jet  # shape (n + 1,), dim n, order 4

    @property
    def value(self) -> np.ndarray:
        return self.x.value


@dataclass
class PointInvariants:
    point: np.ndarray
    x: np.ndarray
    h: np.ndarray
    detH: float
    g: np.ndarray
    g_inv: np.ndarray
    xi: np.ndarray
    GammaInduced: np.ndarray
    GammaLC: np.ndarray
    A: np.ndarray
    A_cov: np.ndarray
    B: np.ndarray
    L1: float
    R: np.ndarray
    curvature: np.ndarray
    chi: float | None
    J: float | None
    h_gauss: np.ndarray
    tangency: np.ndarray
    residuals: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.g.shape[0]


class BlaschkeMetric(NamedTuple):
    h: np.ndarray
    detH: float
    g: np.ndarray
    g_jet: Jet


class AffineNormal(NamedTuple):
    xi: np.ndarray
    B: np.ndarray
    L1: float
    weingarten_tangency: float
    xi_jet: Jet


class Connections(NamedTuple):
    GammaInduced: np.ndarray
    GammaLC: np.ndarray
    A: np.ndarray
    h_gauss: np.ndarray
    A_jet: Jet
    GammaLC_jet: Jet


class Curvature(NamedTuple):
    R: np.ndarray
    chi: float | None
    J: float | None
    curvature: np.ndarray


# ---------------------------------------------------------------------------
# pipeline stages


def taylor4(spec: ImmersionSpec, point) -> TaylorData:
    p = spec.check_point(point)
    n = spec.dim
    coords = [jet_variable(i, p[i], n) for i in range(n)]
    comps = [c if isinstance(c, Jet) else Jet.constant(c, n) for c in spec.evaluate(coords)]
    if len(comps) != n + 1:
        raise DimensionMismatch(f"{spec!r} returned {len(comps)} components, expected {n + 1}")
    x = jstack(comps)
    dx = x.gradient().value
    sv = np.linalg.svd(dx, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        raise DegenerateImmersion(f"differential has rank < {n} at {p}")
    return TaylorData(n=n, point=p, x=x)


def _derivatives(td: TaylorData):
    n = td.n
    dx = td.x.gradient()  # (n, n+1), order 3
    ddx = jstack([jstack([dx[j].deriv(i) for j in range(n)]) for i in range(n)])
    return dx, ddx


def blaschke_metric(td: TaylorData, _cache=None) -> BlaschkeMetric:
    """Unimodular second fundamental form ``D`` and the Blaschke metric."""
    n = td.n
    dx, ddx = _cache if _cache is not None else _derivatives(td)
    dx2 = dx.truncate(2)
    # auxiliary transversal: unit normal of the tangent plane at the point
    _, _, vt = np.linalg.svd(dx2.value)
    e = vt[-1]
    fc = np.zeros((n + 1, n + 1, dx2.coeffs.shape[-1]))
    fc[:, :n, :] = np.transpose(dx2.coeffs, (1, 0, 2))
    fc[:, n, 0] = e
    frame = Jet(fc, td.n, 2)
    # det[x_1..x_n, w] = det(F) (F^-1 w)_n, a linear form nu in w
    nu = jdet(frame) * jinv(frame)[n]
    D = jeinsum("a,ija->ij", nu, ddx)
    D = (D + D.T) * 0.5
    d0 = D.value
    eig = np.linalg.eigvalsh(d0)
    scale = np.max(np.abs(eig))
    if scale == 0.0 or np.min(np.abs(eig)) <= 1e-12 * scale:
        raise DegenerateHessian(f"det D vanishes at {td.point}")
    if np.all(eig < 0):
        D = -D
        d0 = -d0
    elif not np.all(eig > 0):
        raise NotLocallyConvex(f"D has mixed signature {eig} at {td.point}")
    detD = jdet(D)
    g = D * detD.pow_real(-1.0 / (n + 2))
    return BlaschkeMetric(h=d0, detH=float(np.linalg.det(d0)), g=g.value, g_jet=g)


def affine_normal_shape(td: TaylorData, g_jet: Jet, _cache=None) -> AffineNormal:
    """Affine normal ``(1/n) Laplacian_g x`` and the affine shape operator."""
    n = td.n
    dx, _ = _cache if _cache is not None else _derivatives(td)
    sq = jdet(g_jet).sqrt()
    ginv = jinv(g_jet)
    V = jeinsum("ij,ja->ia", ginv, dx.truncate(2)) * sq  # (n, n+1)
    div = V[0].deriv(0)
    for i in range(1, n):
        div = div + V[i].deriv(i)
    xi = div * (sq.truncate(1).reciprocal() * (1.0 / n))  # order 1
    frame0 = np.column_stack([dx.value.T, xi.value])
    if abs(np.linalg.det(frame0)) <= 1e-14 * np.prod(np.linalg.norm(frame0, axis=0)):
        raise SingularFrame(f"[x_1 .. x_n, xi] is singular at {td.point}")
    dxi = np.array([xi.deriv(i).value for i in range(n)])  # (n, n+1)
    cols = np.linalg.solve(frame0, dxi.T)  # (n+1, n): column i expresses d_i xi
    B = -cols[:n, :]
    tangency = cols[n, :]
    L1 = float(np.trace(B) / n)
    return AffineNormal(xi=xi.value, B=B, L1=L1,
                        weingarten_tangency=float(np.max(np.abs(tangency))), xi_jet=xi)


def levi_civita(g_jet: Jet, directions=None) -> Jet:
    """Christoffel symbols ``G[l, i, j] = Gamma^l_ij`` of a metric given as jets.

    ``directions`` selects which jet variables are the coordinates of the
    metric (all of them by default), which lets a factor metric embedded in a
    product chart be treated on its own.
    """
    k = g_jet.shape[0]
    if directions is None:
        directions = range(k)
    directions = list(directions)
    if len(directions) != k:
        raise DimensionMismatch("need one jet variable per metric coordinate")
    dg = jstack([g_jet.deriv(d) for d in directions])  # dg[l, i, j] = d_l g_ij
    # first kind: Gamma_{l,ij} = 1/2 (d_i g_lj + d_j g_il - d_l g_ij)
    first = (dg.transpose(1, 0, 2) + dg.transpose(2, 1, 0) - dg) * 0.5
    ginv = jinv(g_jet)
    return jeinsum("ml,lij->mij", ginv.truncate(first.order), first)


def _curvature_from_christoffel(G: Jet, directions=None) -> np.ndarray:
    """``curv[x, y, z, m]``: component ``m`` of ``R(e_x, e_y) e_z``."""
    k = G.shape[0]
    if directions is None:
        directions = range(k)
    dG = np.array([G.deriv(d).value for d in directions])  # dG[x, m, y, z] = d_x Gamma^m_yz
    G0 = G.value
    term = np.einsum("xmyz->xyzm", dG) - np.einsum("ymxz->xyzm", dG)
    quad = np.einsum("mxp,pyz->xyzm", G0, G0) - np.einsum("myp,pxz->xyzm", G0, G0)
    return term + quad


def metric_curvature(g_jet: Jet, directions=None) -> np.ndarray:
    """Curvature endomorphism ``curv[x, y, z, m]`` of a metric given as jets."""
    if directions is not None:
        directions = list(directions)
    return _curvature_from_christoffel(levi_civita(g_jet, directions), directions)


def block_curvature(spec: ImmersionSpec, point, block: slice) -> np.ndarray:
    """Curvature of the Blaschke metric restricted to the chart coordinates in ``block``.

    On a Riemannian product this is the curvature of the factor metric.
    """
    bm = blaschke_metric(taylor4(spec, point))
    return metric_curvature(bm.g_jet[block, block], range(block.start, block.stop))


def lower_curvature(curv: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``R_ijkl = g(R(e_k, e_l) e_i, e_j)`` from the endomorphism form."""
    return np.einsum("klim,mj->ijkl", curv, g)


def raise_curvature(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Inverse of :func:`lower_curvature`."""
    return np.einsum("ijkl,jm->klim", R, np.linalg.inv(g))


def connections_cubic(td: TaylorData, g_jet: Jet, xi_jet: Jet, _cache=None) -> Connections:
    n = td.n
    dx, ddx = _cache if _cache is not None else _derivatives(td)
    frame = jstack([dx[i].truncate(1) for i in range(n)] + [xi_jet.truncate(1)], axis=1)  # (n+1, n+1)
    if abs(np.linalg.det(frame.value)) <= 1e-14 * np.prod(np.linalg.norm(frame.value, axis=0)):
        raise SingularFrame(f"[x_1 .. x_n, xi] is singular at {td.point}")
    coef = jeinsum("ca,ija->cij", jinv(frame), ddx.truncate(1))
    gamma = coef[:n]  # Gamma^k_ij as [k, i, j]
    h_gauss = coef[n].value
    lc = levi_civita(g_jet)
    A = jeinsum("kl,lij->ijk", g_jet.truncate(1), gamma - lc)
    return Connections(GammaInduced=gamma.value, GammaLC=lc.value, A=A.value,
                       h_gauss=h_gauss, A_jet=A, GammaLC_jet=lc)


def pick_invariant(A: np.ndarray, g: np.ndarray) -> float:
    n = g.shape[0]
    if n < 2:
        raise DimensionTooSmall("the Pick invariant needs n >= 2")
    gi = np.linalg.inv(g)
    return float(np.einsum("ijk,pqr,ip,jq,kr->", A, A, gi, gi, gi) / (n * (n - 1)))


def scalar_curvature(R: np.ndarray, g: np.ndarray) -> float:
    n = g.shape[0]
    if n < 2:
        raise DimensionTooSmall("normalized scalar curvature needs n >= 2")
    gi = np.linalg.inv(g)
    return float(np.einsum("il,jk,ijkl->", gi, gi, R) / (n * (n - 1)))


def curvature_scalars(g_jet: Jet, A: np.ndarray, GammaLC_jet: Jet | None = None) -> Curvature:
    """Riemann tensor of ``g`` plus ``chi`` and ``J`` (``None`` when ``n = 1``)."""
    G = GammaLC_jet if GammaLC_jet is not None else levi_civita(g_jet)
    g = g_jet.value
    curv = _curvature_from_christoffel(G)
    R = lower_curvature(curv, g)
    n = g.shape[0]
    if n < 2:
        return Curvature(R=R, chi=None, J=None, curvature=curv)
    return Curvature(R=R, chi=scalar_curvature(R, g), J=pick_invariant(A, g), curvature=curv)


def covariant_derivative_cubic(A_jet: Jet, GammaLC: np.ndarray) -> np.ndarray:
    """``A_cov[i, j, k, l] = A_{ijk,l}``."""
    n = A_jet.shape[0]
    dA = np.array([A_jet.deriv(l).value for l in range(n)])  # [l, i, j, k]
    A = A_jet.value
    G = GammaLC  # [m, l, i]
    out = np.einsum("lijk->ijkl", dA)
    out -= np.einsum("mli,mjk->ijkl", G, A)
    out -= np.einsum("mlj,imk->ijkl", G, A)
    out -= np.einsum("mlk,ijm->ijkl", G, A)
    return out


# ---------------------------------------------------------------------------
# identities


def _commutator_term(A: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    """``g([A(e_k), A(e_l)] e_i, e_j)`` as an array indexed ``[i, j, k, l]``."""
    Aup = np.einsum("abk,km->abm", A, g_inv)  # A^m_ab
    return np.einsum("lim,kmj->ijkl", Aup, A) - np.einsum("kim,lmj->ijkl", Aup, A)


def gauss_rhs(g: np.ndarray, B_low: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Lowered right side of the general affine Gauss equation."""
    gi = np.linalg.inv(g)
    # R(e_k,e_l)e_i = 1/2 (g_li B(e_k) + B_li e_k - g_ki B(e_l) - B_ki e_l) - [A(e_k),A(e_l)]e_i
    shape = (
        np.einsum("li,kj->ijkl", g, B_low)
        + np.einsum("li,kj->ijkl", B_low, g)
        - np.einsum("ki,lj->ijkl", g, B_low)
        - np.einsum("ki,lj->ijkl", B_low, g)
    ) * 0.5
    return shape - _commutator_term(A, gi)


def residual_suite(inv: PointInvariants) -> dict:
    g, gi, A, n = inv.g, inv.g_inv, inv.A, inv.n
    B_low = np.einsum("ki,kj->ij", inv.B, g)  # g(B e_i, e_j)
    out = {}
    out["apolarity"] = float(np.max(np.abs(np.einsum("ij,ijk->k", gi, A))))
    out["symmetry_A"] = float(max(np.max(np.abs(A - np.transpose(A, p)))
                                  for p in itertools.permutations(range(3))))
    out["h_equals_g"] = float(np.max(np.abs(inv.h_gauss - g)))
    out["weingarten_tangency"] = float(np.max(np.abs(inv.tangency)))
    out["gauss_general"] = float(np.max(np.abs(inv.R - gauss_rhs(g, B_low, A))))
    out["gauss_sphere"] = float(np.max(np.abs(inv.R - gauss_rhs(g, inv.L1 * g, A))))
    Ac = inv.A_cov
    skew = Ac - np.transpose(Ac, (0, 1, 3, 2))  # A_ijk,l - A_ijl,k
    codazzi_rhs = 0.5 * (
        np.einsum("ik,jl->ijkl", g, B_low)
        + np.einsum("jk,il->ijkl", g, B_low)
        - np.einsum("jl,ik->ijkl", g, B_low)
        - np.einsum("il,jk->ijkl", g, B_low)
    )
    out["codazzi_basic3"] = float(np.max(np.abs(skew - codazzi_rhs)))
    div = np.einsum("ijml,lm->ij", Ac, gi)  # sum_l A^l_{ij,l}
    out["trace_codazzi"] = float(np.max(np.abs(div - 0.5 * n * (inv.L1 * g - B_low))))
    if n >= 2:
        chi = inv.chi if inv.chi is not None else scalar_curvature(inv.R, g)
        J = inv.J if inv.J is not None else pick_invariant(A, g)
        Aup = np.einsum("abk,km->abm", A, gi)
        rhs = (
            skew
            + (chi - J) * (np.einsum("il,jk->ijkl", g, g) - np.einsum("ik,jl->ijkl", g, g))
            + (2.0 / n) * (np.einsum("ik,jl->ijkl", g, div) - np.einsum("il,jk->ijkl", g, div))
            + np.einsum("ikm,jlm->ijkl", Aup, A)
            - np.einsum("ilm,jkm->ijkl", Aup, A)
        )
        out["gauss_metric_form"] = float(np.max(np.abs(inv.R - rhs)))
    else:
        out["gauss_metric_form"] = 0.0
    return out


# ---------------------------------------------------------------------------
# orchestration


def point_invariants(spec: ImmersionSpec, point) -> PointInvariants:
    td = taylor4(spec, point)
    cache = _derivatives(td)
    bm = blaschke_metric(td, cache)
    an = affine_normal_shape(td, bm.g_jet, cache)
    cc = connections_cubic(td, bm.g_jet, an.xi_jet, cache)
    cs = curvature_scalars(bm.g_jet, cc.A, cc.GammaLC_jet)
    inv = PointInvariants(
        point=td.point,
        x=td.value,
        h=bm.h,
        detH=bm.detH,
        g=bm.g,
        g_inv=np.linalg.inv(bm.g),
        xi=an.xi,
        GammaInduced=cc.GammaInduced,
        GammaLC=cc.GammaLC,
        A=cc.A,
        A_cov=covariant_derivative_cubic(cc.A_jet, cc.GammaLC),
        B=an.B,
        L1=an.L1,
        R=cs.R,
        curvature=cs.curvature,
        chi=cs.chi,
        J=cs.J,
        h_gauss=cc.h_gauss,
        tangency=np.array([an.weingarten_tangency]),
    )
    inv.residuals = residual_suite(inv)
    return inv


# ---------------------------------------------------------------------------
# membership in the sets of admissible cubic data


@dataclass
class MembershipReport:
    c: float
    symmetry: float
    gauss: float
    apolarity: float | None
    tol: float
    scale: float

    @property
    def flags(self) -> dict:
        lim = self.tol * (1.0 + self.scale)
        out = {"symmetry": self.symmetry <= lim, "gauss": self.gauss <= lim}
        if self.apolarity is not None:
            out["apolarity"] = self.apolarity <= lim
        return out

    @property
    def member(self) -> bool:
        return all(self.flags.values())

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "symmetry": self.symmetry,
            "gauss": self.gauss,
            "apolarity": self.apolarity,
            "flags": self.flags,
            "member": self.member,
        }


def gauss_sphere_defect(g: np.ndarray, A: np.ndarray, curvature: np.ndarray, c: float) -> np.ndarray:
    """``R(X,Y)Z - c(g(Y,Z)X - g(X,Z)Y) + [A(X),A(Y)]Z`` in endomorphism form."""
    k = g.shape[0]
    gi = np.linalg.inv(g)
    eye = np.eye(k)
    space_form = np.einsum("yz,xm->xyzm", g, eye) - np.einsum("xz,ym->xyzm", g, eye)
    Aup = np.einsum("abk,km->abm", A, gi)
    comm = np.einsum("yzp,xpm->xyzm", Aup, Aup) - np.einsum("xzp,ypm->xyzm", Aup, Aup)
    return curvature - c * space_form + comm


def check_S_membership(g_samples, A_samples, R_samples, c: float, with_apolarity: bool = True,
                       tol: float = DEFAULT_TOL) -> MembershipReport:
    """Test cubic data against the Gauss equation at constant ``c``.

    ``R_samples`` holds curvature endomorphisms ``curv[x, y, z, m]`` (see the
    module docstring); one array per sample, or a single array.
    """
    g_s = np.asarray(g_samples, dtype=float)
    A_s = np.asarray(A_samples, dtype=float)
    R_s = np.asarray(R_samples, dtype=float)
    if g_s.ndim == 2:
        g_s, A_s, R_s = g_s[None], A_s[None], R_s[None]
    if not (len(g_s) == len(A_s) == len(R_s)):
        raise DimensionMismatch("sample counts differ")
    k = g_s.shape[-1]
    if g_s.shape[1:] != (k, k) or A_s.shape[1:] != (k, k, k) or R_s.shape[1:] != (k, k, k, k):
        raise DimensionMismatch(
            f"inconsistent shapes g{g_s.shape[1:]} A{A_s.shape[1:]} R{R_s.shape[1:]}")
    sym = gauss = apol = scale = 0.0
    for g, A, R in zip(g_s, A_s, R_s):
        sym = max(sym, max(float(np.max(np.abs(A - np.transpose(A, p))))
                           for p in itertools.permutations(range(3))) if k else 0.0)
        if k:
            gauss = max(gauss, float(np.max(np.abs(gauss_sphere_defect(g, A, R, c)))))
            apol = max(apol, float(np.max(np.abs(np.einsum("ij,ijk->k", np.linalg.inv(g), A)))))
            scale = max(scale, float(np.max(np.abs(A))), float(np.max(np.abs(R))))
    return MembershipReport(c=float(c), symmetry=sym, gauss=gauss,
                            apolarity=apol if with_apolarity else None, tol=tol, scale=scale)
