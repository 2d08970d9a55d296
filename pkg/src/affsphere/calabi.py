"""Calabi compositions: points and hyperbolic affine hyperspheres joined by exponential warping.

Coordinates on the composed hypersurface are ``(t^1, ..., t^{K-1}, p_1, ...,
p_s)`` with ``K = r + s``; the map is

    x = (c_1 e_1, ..., c_r e_r, c_{r+1} e_{r+1} x_1(p_1), ..., c_K e_K x_s(p_s))

where ``e_a = exp(-t^{a-1}/(n_a+1) + t^a/f_a + ... + t^{K-1}/f_{K-1})`` and
``n_a = 0`` for point factors.

All indices in this module's public tables are 1-based, as in the usual
component notation; arrays are 0-based.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import jets
from .errors import InvalidParameter
from .immersion import ImmersionSpec


@dataclass(frozen=True)
class FTable:
    f: tuple  # f_1 .. f_K
    n_of: tuple  # n_1 .. n_K (0 for point factors)
    offsets: tuple  # 0-based start of each factor block in the chart
    n: int


class CompositionSpec(ImmersionSpec):
    """Calabi composition; also a hyperbolic affine sphere centred at the origin."""

    is_hyperbolic_sphere = True

    def __init__(self, points: int, constants, factors=()):
        points = int(points)
        factors = tuple(factors)
        if points < 0:
            raise InvalidParameter("number of point factors must be >= 0")
        K = points + len(factors)
        if K < 2:
            raise InvalidParameter(f"a composition needs r + s >= 2, got r={points}, s={len(factors)}")
        constants = tuple(float(c) for c in constants)
        if len(constants) != K:
            raise InvalidParameter(f"expected {K} constants, got {len(constants)}")
        if any(not np.isfinite(c) or c <= 0 for c in constants):
            raise InvalidParameter("composition constants must be positive")
        for fac in factors:
            if not isinstance(fac, ImmersionSpec) or not fac.is_hyperbolic_sphere:
                raise InvalidParameter(f"factor {fac!r} is not a hyperbolic affine sphere")
        self.r = points
        self.factors = factors
        self.constants = constants
        super().__init__(sum(fac.dim for fac in factors) + K - 1)

    @property
    def s(self) -> int:
        return len(self.factors)

    @property
    def K(self) -> int:
        return self.r + self.s

    @property
    def q(self) -> int:
        return self.K - 1

    @property
    def factor_dims(self) -> tuple:
        return tuple(fac.dim for fac in self.factors)

    @cached_property
    def ftable(self) -> FTable:
        return f_table(self)

    @cached_property
    def factor_L1(self) -> tuple:
        out = tuple(factor_mean_curvature(fac) for fac in self.factors)
        for a, L in enumerate(out, 1):
            if not L < 0:
                raise InvalidParameter(f"factor {a} has affine mean curvature {L} >= 0")
        return out

    def split(self, point) -> tuple:
        """Split a chart point into ``(t, [p_1, ..., p_s])``."""
        p = np.asarray(point, dtype=float)
        t = p[: self.q]
        parts, k = [], self.q
        for d in self.factor_dims:
            parts.append(p[k:k + d])
            k += d
        return t, parts

    def in_domain(self, point):
        _, parts = self.split(point)
        return all(fac.in_domain(p) for fac, p in zip(self.factors, parts))

    def check_point(self, point):
        p = super().check_point(point)
        _, parts = self.split(p)
        for fac, part in zip(self.factors, parts):
            fac.check_point(part)
        return p

    def exponent(self, a: int, t) -> object:
        """Argument of ``e_a`` (1-based ``a``) for a list of t-coordinates."""
        ft = self.ftable
        K = self.K
        acc = 0.0
        if a >= 2:
            acc = acc - t[a - 2] * (1.0 / (ft.n_of[a - 1] + 1))
        for b in range(a, K):
            acc = acc + t[b - 1] * (1.0 / ft.f[b - 1])
        return acc

    def evaluate(self, coords):
        coords = list(coords)
        t = coords[: self.q]
        out = []
        k = self.q
        for a in range(1, self.K + 1):
            ea = jets.exp(self.exponent(a, t)) * self.constants[a - 1]
            if a <= self.r:
                out.append(ea)
            else:
                fac = self.factors[a - self.r - 1]
                sub = fac.evaluate(coords[k:k + fac.dim])
                k += fac.dim
                out.extend(ea * xa for xa in sub)
        return out

    def __repr__(self):
        return f"CompositionSpec(r={self.r}, dims={self.factor_dims}, constants={self.constants})"

    def to_dict(self):
        return {
            "kind": "composition",
            "points": self.r,
            "constants": list(self.constants),
            "factors": [fac.to_dict() for fac in self.factors],
        }


def compose(points: int, constants, factors=()) -> CompositionSpec:
    return CompositionSpec(points, constants, factors)


def f_table(spec: CompositionSpec) -> FTable:
    """``f_a``, the per-slot factor dimensions and the chart offsets of the factor blocks."""
    r = spec.r
    dims = spec.factor_dims
    f = [a for a in range(1, r + 1)]
    acc = 0
    for alpha, d in enumerate(dims, 1):
        acc += d
        f.append(acc + r + alpha)
    n_of = [0] * r + list(dims)
    offsets = []
    k = spec.K - 1
    for d in dims:
        offsets.append(k)
        k += d
    n = sum(dims) + spec.K - 1
    return FTable(f=tuple(f), n_of=tuple(n_of), offsets=tuple(offsets), n=n)


_L1_CACHE: dict = {}


def factor_mean_curvature(fac: ImmersionSpec) -> float:
    """Affine mean curvature of a hyperbolic sphere factor.

    Closed form for compositions; otherwise evaluated once by the pipeline at
    the chart origin (it is constant on an affine sphere).
    """
    if isinstance(fac, CompositionSpec):
        return composition_constants(fac)[1]
    key = id(fac)
    if key not in _L1_CACHE:
        from .geometry import point_invariants

        base = getattr(fac, "base_point", np.zeros(fac.dim))
        _L1_CACHE[key] = (fac, point_invariants(fac, base).L1)
    return _L1_CACHE[key][1]


def composition_constants(spec: CompositionSpec) -> tuple:
    """``(C, L1)`` with ``L1 = -1 / ((n + 1) C)``."""
    n = spec.dim
    prod = 1.0 / (n + 1)
    for a in range(spec.r):
        prod *= spec.constants[a] ** 2
    for alpha, (fac, L) in enumerate(zip(spec.factors, spec.factor_L1)):
        na = fac.dim
        c = spec.constants[spec.r + alpha]
        prod *= c ** (2 * (na + 1)) / ((na + 1) ** (na + 1) * (-L) ** (na + 2))
    C = prod ** (1.0 / (n + 2))
    return C, -1.0 / ((n + 1) * C)


@dataclass
class ClosedFormInvariants:
    C: float
    L1: float
    n: int
    r: int
    factor_dims: tuple
    factor_L1: tuple
    g_lambda_mu: np.ndarray
    factor_conformal: tuple
    A_table: list = field(default_factory=list)
    H_closed: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "L1": self.L1,
            "n": self.n,
            "r": self.r,
            "factor_dims": list(self.factor_dims),
            "factor_L1": list(self.factor_L1),
            "g_lambda_mu": self.g_lambda_mu.tolist(),
            "factor_conformal": list(self.factor_conformal),
            "A_table": [dict(rec) for rec in self.A_table],
            "H_closed": [h.tolist() for h in self.H_closed],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClosedFormInvariants":
        return cls(
            C=d["C"], L1=d["L1"], n=d["n"], r=d["r"],
            factor_dims=tuple(d["factor_dims"]), factor_L1=tuple(d["factor_L1"]),
            g_lambda_mu=np.array(d["g_lambda_mu"], dtype=float).reshape(
                len(d["g_lambda_mu"]), len(d["g_lambda_mu"])),
            factor_conformal=tuple(d["factor_conformal"]),
            A_table=[dict(rec) for rec in d["A_table"]],
            H_closed=[np.array(h, dtype=float) for h in d["H_closed"]],
        )


def _g_lambda(lam: int, ft: FTable, r: int, C: float) -> float:
    f, n_of = ft.f, ft.n_of
    if lam <= r - 1:
        return (lam + 1) / lam * C
    if lam == r:
        n1 = n_of[r]
        return (n1 + r + 1) / (r * (n1 + 1)) * C
    # lam = r + alpha with a following factor alpha + 1
    return f[lam] / ((n_of[lam] + 1) * f[lam - 1]) * C


def _A_lll(lam: int, ft: FTable, r: int, C: float) -> float:
    f, n_of = ft.f, ft.n_of
    if lam <= r - 1:
        return (1 - lam ** 2) / lam ** 2 * C
    if lam == r:
        n1 = n_of[r]
        return (1.0 / r ** 2 - 1.0 / (n1 + 1) ** 2) * C
    return f[lam] * C / ((n_of[lam] + 1) * f[lam - 1]) * (1.0 / f[lam - 1] - 1.0 / (n_of[lam] + 1))


def _A_llm(lam: int, mu: int, ft: FTable, r: int, C: float) -> float:
    f, n_of = ft.f, ft.n_of
    if mu <= r:
        return (lam + 1) / (lam * mu) * C
    if lam <= r - 1:
        return (lam + 1) * C / (lam * f[mu - 1])
    if lam == r:
        # the (n_1 + 1) in the denominator makes this the g_rr / f_mu pattern
        # shared by the neighbouring cases; the pipeline confirms it
        n1 = n_of[r]
        return (n1 + r + 1) * C / (r * (n1 + 1) * f[mu - 1])
    return f[lam] * C / ((n_of[lam] + 1) * f[lam - 1] * f[mu - 1])


def closed_form_invariants(spec: CompositionSpec) -> ClosedFormInvariants:
    """Point-independent tables of metric and cubic-form components.

    Factor families are stored as coefficients multiplying the factor's own
    metric (``"multiplies": "factor_metric"``) or cubic form
    (``"factor_cubic"``); :func:`closed_form_tensors` evaluates them at a point.
    """
    ft = spec.ftable
    r, K, q = spec.r, spec.K, spec.q
    C, L1 = composition_constants(spec)
    g_t = np.diag([_g_lambda(lam, ft, r, C) for lam in range(1, K)]) if q else np.zeros((0, 0))
    conformal = tuple((na + 1) * (-La) * C for na, La in zip(spec.factor_dims, spec.factor_L1))
    table = []
    for lam in range(1, K):
        table.append({"family": "t_diagonal", "indices": [lam, lam, lam],
                      "value": _A_lll(lam, ft, r, C), "multiplies": None})
        for mu in range(lam + 1, K):
            table.append({"family": "t_pair", "indices": [lam, lam, mu],
                          "value": _A_llm(lam, mu, ft, r, C), "multiplies": None})
    for alpha, (na, La) in enumerate(zip(spec.factor_dims, spec.factor_L1), 1):
        at = r + alpha
        if at - 1 >= 1:
            table.append({"family": "factor_previous_t", "alpha": alpha, "indices": [at - 1],
                          "value": La * C, "multiplies": "factor_metric"})
        for beta in range(alpha, spec.s):
            bt = r + beta
            table.append({"family": "factor_later_t", "alpha": alpha, "indices": [bt],
                          "value": (na + 1) * (-La) * C / ft.f[bt - 1], "multiplies": "factor_metric"})
        table.append({"family": "factor_cubic", "alpha": alpha, "indices": [],
                      "value": (na + 1) * (-La) * C, "multiplies": "factor_cubic"})
    cfi = ClosedFormInvariants(
        C=C, L1=L1, n=spec.dim, r=r, factor_dims=spec.factor_dims,
        factor_L1=spec.factor_L1, g_lambda_mu=g_t, factor_conformal=conformal, A_table=table,
    )
    if spec.s >= 1:
        cfi.H_closed = closed_form_H(spec).H
    return cfi


@dataclass
class ClosedFormH:
    H: list  # per-factor vectors in the d/dt frame
    gram: np.ndarray  # g(H_alpha, H_beta) from the metric table
    predicted: np.ndarray  # diagonal ((n - n_a)/(n_a + 1))(-L1), off-diagonal L1


def closed_form_H(spec: CompositionSpec) -> ClosedFormH:
    """Mean transversal vectors of the factors and their Gram matrix."""
    if spec.s < 1:
        raise InvalidParameter("mean transversals need at least one positive-dimensional factor")
    ft = spec.ftable
    r, s, q = spec.r, spec.s, spec.q
    C, L1 = composition_constants(spec)
    f, n_of = ft.f, ft.n_of
    g_t = np.diag([_g_lambda(lam, ft, r, C) for lam in range(1, spec.K)])
    H = []
    for alpha in range(1, s + 1):
        at = r + alpha
        v = np.zeros(q)
        if at - 1 >= 1:
            v[at - 2] = -f[at - 2] / (f[at - 1] * C)
        for beta in range(alpha, s):
            bt = r + beta
            v[bt - 1] += (n_of[bt] + 1) / (f[bt] * C)
        H.append(v)
    Hm = np.array(H)
    gram = Hm @ g_t @ Hm.T
    n = spec.dim
    pred = np.full((s, s), L1)
    for a, na in enumerate(spec.factor_dims):
        pred[a, a] = (n - na) / (na + 1) * (-L1)
    return ClosedFormH(H=H, gram=gram, predicted=pred)


def factor_point_data(fac: ImmersionSpec, p) -> tuple:
    """``(g, A, L1)`` of a factor at its chart point ``p``."""
    if isinstance(fac, CompositionSpec):
        g, A, L1 = closed_form_tensors(fac, p)
        return g, A, L1
    from .geometry import point_invariants

    inv = point_invariants(fac, p)
    return inv.g, inv.A, factor_mean_curvature(fac)


def closed_form_tensors(spec: CompositionSpec, point) -> tuple:
    """Full ``(g, A, L1)`` arrays at ``point`` assembled from the tables.

    Cubic-form entries are completed over all index permutations; entries not
    listed in the table are zero.
    """
    p = spec.check_point(point)
    cfi = closed_form_invariants(spec)
    n, q = spec.dim, spec.q
    ft = spec.ftable
    _, parts = spec.split(p)
    fdata = [factor_point_data(fac, part) for fac, part in zip(spec.factors, parts)]
    g = np.zeros((n, n))
    g[:q, :q] = cfi.g_lambda_mu
    blocks = []
    for alpha, ((gf, Af, _), conf) in enumerate(zip(fdata, cfi.factor_conformal), 1):
        sl = slice(ft.offsets[alpha - 1], ft.offsets[alpha - 1] + spec.factor_dims[alpha - 1])
        g[sl, sl] = conf * gf
        blocks.append(sl)
    A = np.zeros((n, n, n))

    def put(idx, val):
        for perm in set(itertools.permutations(idx)):
            A[perm] = val

    for rec in cfi.A_table:
        fam = rec["family"]
        if fam in ("t_diagonal", "t_pair"):
            put(tuple(i - 1 for i in rec["indices"]), rec["value"])
            continue
        alpha = rec["alpha"]
        sl = blocks[alpha - 1]
        gf, Af, _ = fdata[alpha - 1]
        idx = np.arange(sl.start, sl.stop)
        if fam == "factor_cubic":
            for (a, b, c) in itertools.product(range(len(idx)), repeat=3):
                A[idx[a], idx[b], idx[c]] = rec["value"] * Af[a, b, c]
        else:
            lam = rec["indices"][0] - 1
            for a, b in itertools.product(range(len(idx)), repeat=2):
                put((idx[a], idx[b], lam), rec["value"] * gf[a, b])
    return g, A, cfi.L1


def iter_components(spec: CompositionSpec, point, atol: float = 0.0):
    """Yield ``(i, j, k, value)`` for ``i <= j <= k`` (0-based) with ``|value| > atol``."""
    _, A, _ = closed_form_tensors(spec, point)
    n = spec.dim
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                v = A[i, j, k]
                if abs(v) > atol:
                    yield i, j, k, float(v)
