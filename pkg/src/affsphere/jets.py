"""Truncated multivariate Taylor jets of order four.

A :class:`Jet` stores the Taylor coefficients of a function of ``dim`` real
variables around a base point, using the convention

    f(u0 + d) = sum_mu coeffs[mu] * d**mu,     |mu| <= 4

so that the partial derivative ``d^mu f(u0)`` equals ``mu! * coeffs[mu]``.
Coefficients are stored densely in graded order (all ``C(dim + 4, 4)``
multi-indices).  A jet may carry a leading batch shape, which lets a whole
matrix of jets be manipulated with one numpy call; ``Jet.coeffs`` then has
shape ``batch_shape + (N,)``.

Jets also track a validity ``order``: differentiating a jet lowers it by one
and coefficients above the order are kept at exactly zero.
"""
from __future__ import annotations

import itertools
import math
import string
from functools import lru_cache
from numbers import Integral, Real

import numpy as np

from .errors import DimensionMismatch, DivisionByZero, NonpositiveArgument

MAX_ORDER = 4

__all__ = [
    "MAX_ORDER",
    "Jet",
    "MultiIndex",
    "jet_variable",
    "jet_constant",
    "jet_arith",
    "extract_partial",
    "exp",
    "log",
    "sqrt",
    "jstack",
    "jeinsum",
    "jinv",
    "jdet",
]


class MultiIndex(tuple):
    """Exponent tuple of a monomial; ``order`` is the total degree."""

    def __new__(cls, exponents):
        exps = tuple(int(e) for e in exponents)
        if any(e < 0 for e in exps):
            raise ValueError("multi-index exponents must be nonnegative")
        return super().__new__(cls, exps)

    @property
    def order(self) -> int:
        return sum(self)

    def factorial(self) -> int:
        return math.prod(math.factorial(e) for e in self)


class _Basis:
    def __init__(self, dim: int):
        exps = []
        for d in range(MAX_ORDER + 1):
            for combo in itertools.combinations_with_replacement(range(dim), d):
                e = [0] * dim
                for v in combo:
                    e[v] += 1
                exps.append(tuple(e))
        self.dim = dim
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), dim)
        self.size = len(exps)
        self.deg = self.exps.sum(axis=1)
        self.index = {e: k for k, e in enumerate(exps)}
        self.factorial = np.array([MultiIndex(e).factorial() for e in exps], dtype=float)
        # number of multi-indices of degree <= k
        self.count = [int(np.sum(self.deg <= k)) for k in range(MAX_ORDER + 1)]

        # product tables, one per truncation order
        self.pairs = []
        for order in range(MAX_ORDER + 1):
            pa, pb, tgt = [], [], []
            nk = self.count[order]
            for ia in range(nk):
                ea = exps[ia]
                for ib in range(self.count[order - self.deg[ia]]):
                    eb = exps[ib]
                    pa.append(ia)
                    pb.append(ib)
                    tgt.append(self.index[tuple(x + y for x, y in zip(ea, eb))])
            pa, pb, tgt = (np.array(v, dtype=np.int64) for v in (pa, pb, tgt))
            perm = np.argsort(tgt, kind="stable")
            pa, pb, tgt = pa[perm], pb[perm], tgt[perm]
            starts = np.searchsorted(tgt, np.arange(nk))
            self.pairs.append((pa, pb, starts))

        # derivative maps: coefficient of mu in d_i f is (mu_i + 1) c[mu + e_i]
        self.deriv_src = []
        self.deriv_fac = []
        n3 = self.count[MAX_ORDER - 1]
        for i in range(dim):
            src = np.empty(n3, dtype=np.int64)
            fac = np.empty(n3)
            for k in range(n3):
                e = list(exps[k])
                fac[k] = e[i] + 1
                e[i] += 1
                src[k] = self.index[tuple(e)]
            self.deriv_src.append(src)
            self.deriv_fac.append(fac)


@lru_cache(maxsize=None)
def _basis(dim: int) -> _Basis:
    return _Basis(dim)


def _as_array(x):
    return np.asarray(x, dtype=float)


class Jet:
    """Order-4 truncated Taylor expansion (optionally batched)."""

    __slots__ = ("coeffs", "dim", "order")
    __array_priority__ = 1000

    def __init__(self, coeffs, dim: int, order: int = MAX_ORDER):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.dim = int(dim)
        self.order = int(order)
        basis = _basis(self.dim)
        if self.coeffs.shape[-1:] != (basis.size,):
            raise DimensionMismatch(
                f"expected {basis.size} coefficients for dim={dim}, got {self.coeffs.shape}"
            )

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, dim: int, order: int = MAX_ORDER) -> "Jet":
        value = _as_array(value)
        coeffs = np.zeros(value.shape + (_basis(dim).size,))
        coeffs[..., 0] = value
        return cls(coeffs, dim, order)

    @property
    def basis(self) -> _Basis:
        return _basis(self.dim)

    @property
    def shape(self) -> tuple:
        return self.coeffs.shape[:-1]

    @property
    def value(self):
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    def __repr__(self) -> str:
        return f"Jet(dim={self.dim}, order={self.order}, shape={self.shape})"

    def __len__(self) -> int:
        return self.shape[0]

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.coeffs[idx + (Ellipsis, slice(None))] if Ellipsis not in idx
                   else self.coeffs[idx + (slice(None),)], self.dim, self.order)

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def copy(self) -> "Jet":
        return Jet(self.coeffs.copy(), self.dim, self.order)

    # -- helpers ------------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.dim != self.dim:
                raise DimensionMismatch(f"jet dims differ: {self.dim} vs {other.dim}")
            return other
        return Jet.constant(other, self.dim, MAX_ORDER)

    def truncate(self, order: int) -> "Jet":
        order = min(order, self.order)
        c = self.coeffs.copy()
        c[..., self.basis.count[order]:] = 0.0
        return Jet(c, self.dim, order)

    def reshape(self, *shape) -> "Jet":
        return Jet(self.coeffs.reshape(tuple(shape) + (self.basis.size,)), self.dim, self.order)

    def transpose(self, *axes) -> "Jet":
        nd = len(self.shape)
        axes = axes or tuple(reversed(range(nd)))
        return Jet(np.transpose(self.coeffs, tuple(axes) + (nd,)), self.dim, self.order)

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def sum(self, axis=None) -> "Jet":
        nd = len(self.shape)
        if axis is None:
            axis = tuple(range(nd))
        return Jet(self.coeffs.sum(axis=axis), self.dim, self.order)

    # -- ring operations ----------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        return Jet(self.coeffs + other.coeffs, self.dim, min(self.order, other.order))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.dim, self.order)

    def __sub__(self, other):
        other = self._coerce(other)
        return Jet(self.coeffs - other.coeffs, self.dim, min(self.order, other.order))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            val = _as_array(other)
            return Jet(self.coeffs * val[..., None], self.dim, self.order)
        other = self._coerce(other)
        order = min(self.order, other.order)
        return Jet(_mul(self.coeffs, other.coeffs, self.basis, order), self.dim, order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            val = _as_array(other)
            if np.any(val == 0):
                raise DivisionByZero("division by a zero constant")
            return Jet(self.coeffs / val[..., None], self.dim, self.order)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Integral):
            p = int(p)
            if p < 0:
                return (self ** (-p)).reciprocal()
            out = Jet.constant(np.ones(self.shape), self.dim, self.order)
            base = self
            while p:
                if p & 1:
                    out = out * base
                base = base * base
                p >>= 1
            return out
        return self.pow_real(float(p))

    # -- transcendental functions ------------------------------------------
    def _compose(self, derivs) -> "Jet":
        """Evaluate ``sum_k derivs[k] / k! * (self - value)**k``."""
        order = self.order
        delta = self.copy()
        delta.coeffs[..., 0] = 0.0
        out = Jet.constant(derivs[0], self.dim, order)
        power = None
        for k in range(1, order + 1):
            power = delta if power is None else power * delta
            out = out + power * (_as_array(derivs[k]) / math.factorial(k))
        return out

    def _value_array(self):
        return self.coeffs[..., 0]

    def exp(self) -> "Jet":
        e = np.exp(self._value_array())
        return self._compose([e] * (MAX_ORDER + 1))

    def log(self) -> "Jet":
        v = self._value_array()
        if np.any(v <= 0):
            raise NonpositiveArgument("log of a jet with nonpositive value part")
        derivs = [np.log(v)] + [(-1.0) ** (k - 1) * math.factorial(k - 1) * v ** (-k)
                                for k in range(1, MAX_ORDER + 1)]
        return self._compose(derivs)

    def pow_real(self, p: float) -> "Jet":
        v = self._value_array()
        if float(p).is_integer():
            return self ** int(p)
        if np.any(v <= 0):
            raise NonpositiveArgument("non-integer power of a jet with nonpositive value part")
        derivs = []
        coef = 1.0
        for k in range(MAX_ORDER + 1):
            derivs.append(coef * v ** (p - k))
            coef *= p - k
        return self._compose(derivs)

    def sqrt(self) -> "Jet":
        return self.pow_real(0.5)

    def reciprocal(self) -> "Jet":
        v = self._value_array()
        if np.any(v == 0):
            raise DivisionByZero("reciprocal of a jet with zero value part")
        derivs = [(-1.0) ** k * math.factorial(k) * v ** (-k - 1) for k in range(MAX_ORDER + 1)]
        return self._compose(derivs)

    # -- calculus -----------------------------------------------------------
    def deriv(self, i: int) -> "Jet":
        """Partial derivative in variable ``i``; the result has order one less."""
        if not 0 <= i < self.dim:
            raise IndexError(f"variable index {i} out of range for dim={self.dim}")
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        b = self.basis
        c = np.zeros_like(self.coeffs)
        n = b.count[self.order - 1]
        c[..., :n] = self.coeffs[..., b.deriv_src[i][:n]] * b.deriv_fac[i][:n]
        return Jet(c, self.dim, self.order - 1)

    def gradient(self) -> "Jet":
        """Stack of all first partials along a new leading axis."""
        return jstack([self.deriv(i) for i in range(self.dim)])

    def partial(self, mu) -> float:
        return extract_partial(self, mu)


def _mul(a, b, basis: _Basis, order: int):
    pa, pb, starts = basis.pairs[order]
    prod = a[..., pa] * b[..., pb]
    out = np.zeros(np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (basis.size,))
    out[..., : basis.count[order]] = np.add.reduceat(prod, starts, axis=-1)
    return out


def jet_variable(i: int, u0: float, m: int) -> Jet:
    """Jet of the coordinate function ``u^i`` at base value ``u0``."""
    if not 0 <= i < m:
        raise IndexError(f"variable index {i} out of range for dim={m}")
    b = _basis(m)
    c = np.zeros(b.size)
    c[0] = u0
    e = [0] * m
    e[i] = 1
    c[b.index[tuple(e)]] = 1.0
    return Jet(c, m)


def jet_constant(value, m: int) -> Jet:
    return Jet.constant(value, m)


def extract_partial(j: Jet, mu) -> float:
    """``d^mu j`` at the base point (``mu!`` times the stored coefficient)."""
    mu = MultiIndex(mu)
    if len(mu) != j.dim:
        raise DimensionMismatch(f"multi-index length {len(mu)} != jet dim {j.dim}")
    if mu.order > j.order:
        raise ValueError(f"order {mu.order} exceeds jet order {j.order}")
    k = j.basis.index[tuple(mu)]
    c = j.coeffs[..., k] * mu.factorial()
    return float(c) if np.ndim(c) == 0 else c


def jet_arith(op: str, *args):
    """Dispatch table over the jet operations by name."""
    if op == "add":
        a, b = args
        return a + b
    if op == "sub":
        a, b = args
        return a - b
    if op == "mul":
        a, b = args
        return a * b
    if op == "scale":
        a, s = args
        return a * float(s)
    if op == "reciprocal":
        return args[0].reciprocal()
    if op == "exp":
        return args[0].exp()
    if op == "ln":
        return args[0].log()
    if op == "pow_real":
        a, p = args
        return a.pow_real(float(p))
    if op == "sqrt":
        return args[0].sqrt()
    raise ValueError(f"unknown jet operation {op!r}")


# Scalar-or-jet helpers so that immersion formulas can be evaluated on plain
# floats (finite-difference checks, mesh export) and on jets alike.

def exp(x):
    if isinstance(x, Jet):
        return x.exp()
    return np.exp(x)


def log(x):
    if isinstance(x, Jet):
        return x.log()
    if np.any(np.asarray(x) <= 0):
        raise NonpositiveArgument("log of nonpositive value")
    return np.log(x)


def sqrt(x):
    if isinstance(x, Jet):
        return x.sqrt()
    if np.any(np.asarray(x) < 0):
        raise NonpositiveArgument("sqrt of negative value")
    return np.sqrt(x)


def jstack(jets, axis: int = 0) -> Jet:
    jets = list(jets)
    dim = jets[0].dim
    if any(j.dim != dim for j in jets):
        raise DimensionMismatch("cannot stack jets of different dims")
    order = min(j.order for j in jets)
    nd = len(jets[0].shape)
    if axis < 0:
        axis += nd + 1
    return Jet(np.stack([j.coeffs for j in jets], axis=axis), dim, order)


_LETTERS = string.ascii_letters


def jeinsum(subscripts: str, a, b) -> Jet:
    """Two-operand einsum where either operand may be a (batched) jet.

    Plain arrays are treated as constants.  The contraction is done on the
    batch axes; the Taylor product is applied coefficient-wise.
    """
    lhs, out = subscripts.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    used = set(sa + sb + out)
    z = next(ch for ch in _LETTERS if ch not in used)
    a_jet, b_jet = isinstance(a, Jet), isinstance(b, Jet)
    if a_jet and b_jet:
        if a.dim != b.dim:
            raise DimensionMismatch("jet dims differ")
        order = min(a.order, b.order)
        basis = a.basis
        pa, pb, starts = basis.pairs[order]
        prod = np.einsum(f"{sa}{z},{sb}{z}->{out}{z}", a.coeffs[..., pa], b.coeffs[..., pb])
        c = np.zeros(prod.shape[:-1] + (basis.size,))
        c[..., : basis.count[order]] = np.add.reduceat(prod, starts, axis=-1)
        return Jet(c, a.dim, order)
    if a_jet:
        return Jet(np.einsum(f"{sa}{z},{sb}->{out}{z}", a.coeffs, _as_array(b)), a.dim, a.order)
    if b_jet:
        return Jet(np.einsum(f"{sa},{sb}{z}->{out}{z}", _as_array(a), b.coeffs), b.dim, b.order)
    raise TypeError("jeinsum needs at least one jet operand")


def _split(mat: Jet):
    """Value part and nilpotent remainder of a square jet matrix."""
    m0 = mat.coeffs[..., 0].copy()
    rest = mat.copy()
    rest.coeffs[..., 0] = 0.0
    return m0, rest


def jinv(mat: Jet) -> Jet:
    """Inverse of a square matrix of jets.

    With ``M = M0 + E`` and ``E`` vanishing at the base point,
    ``M^-1 = sum_k (-M0^-1 E)^k M0^-1``; the series terminates at the jet order.
    """
    m0, e = _split(mat)
    m0_inv = np.linalg.inv(m0)
    x = jeinsum("ij,jk->ik", -m0_inv, e)
    term = Jet.constant(m0_inv, mat.dim, mat.order)
    out = term
    for _ in range(mat.order):
        term = jeinsum("ij,jk->ik", x, term)
        out = out + term
    return out


def jdet(mat: Jet) -> Jet:
    """Determinant of a square jet matrix via ``det M0 * exp(tr log(I + M0^-1 E))``."""
    m0, e = _split(mat)
    d0 = np.linalg.det(m0)
    if d0 == 0:
        raise DivisionByZero("singular value part in jet determinant")
    x = jeinsum("ij,jk->ik", np.linalg.inv(m0), e)
    power = x
    trace_log = Jet.constant(0.0, mat.dim, mat.order)
    for k in range(1, mat.order + 1):
        if k > 1:
            power = jeinsum("ij,jk->ik", power, x)
        tr = Jet(np.trace(power.coeffs, axis1=0, axis2=1), mat.dim, power.order)
        trace_log = trace_log + tr * ((-1.0) ** (k + 1) / k)
    return trace_log.exp() * d0
