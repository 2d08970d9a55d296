"""Built-in hyperbolic affine hyperspheres with known invariants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calabi import CompositionSpec
from .errors import InvalidParameter, ManifestError
from .immersion import ImmersionSpec, QuadricHypersphere


class FlatHypersphere(CompositionSpec):
    """The hypersurface ``x^1 x^2 ... x^{n0+1} = C0`` with flat affine metric.

    Parametrized as the composition of ``n0 + 1`` points with constants
    ``(1, ..., 1, C0)``, so the chart is all of ``R^{n0}``.
    """

    def __init__(self, n0: int, c0: float):
        n0 = int(n0)
        c0 = float(c0)
        if n0 < 1:
            raise InvalidParameter(f"flat hypersphere needs n0 >= 1, got {n0}")
        if not np.isfinite(c0) or c0 <= 0:
            raise InvalidParameter(f"flat hypersphere needs C0 > 0, got {c0}")
        self.c0 = c0
        super().__init__(n0 + 1, [1.0] * n0 + [c0])

    def __repr__(self):
        return f"FlatHypersphere(n0={self.dim}, C0={self.c0})"

    def to_dict(self):
        return {"kind": "flat", "dim": self.dim, "c0": self.c0}


def flat_hypersphere(n0: int, c0: float = 1.0) -> FlatHypersphere:
    return FlatHypersphere(n0, c0)


def quadric_hypersphere(n: int) -> QuadricHypersphere:
    return QuadricHypersphere(n)


@dataclass(frozen=True)
class FlatClosedForms:
    g: np.ndarray
    L1: float
    A: np.ndarray
    J: float
    s0: float


def flat_closed_forms(n0: int, c0: float = 1.0) -> FlatClosedForms:
    """Metric, mean curvature, cubic form and Pick invariant of the flat example.

    With ``s0 = (C0^2/(n0+1))^{1/(n0+2)}``:
    ``g = diag((l+1)/l * s0)``, ``A_lll = -(l^2-1)/l^2 * s0``,
    ``A_llv = (l+1)/(l v) * s0`` for ``l < v``, and ``J = -L1``.
    """
    n0 = int(n0)
    c0 = float(c0)
    if n0 < 1 or not np.isfinite(c0) or c0 <= 0:
        raise InvalidParameter(f"flat closed forms need n0 >= 1 and C0 > 0, got ({n0}, {c0})")
    s0 = (c0 ** 2 / (n0 + 1)) ** (1.0 / (n0 + 2))
    lam = np.arange(1, n0 + 1, dtype=float)
    g = np.diag((lam + 1) / lam * s0)
    L1 = -((n0 + 1) ** (-(n0 + 1) / (n0 + 2))) * c0 ** (-2.0 / (n0 + 2))
    A = np.zeros((n0, n0, n0))
    for i in range(n0):
        l = i + 1
        A[i, i, i] = -(l * l - 1) / (l * l) * s0
        for k in range(i + 1, n0):
            v = (l + 1) / (l * (k + 1)) * s0
            A[i, i, k] = A[i, k, i] = A[k, i, i] = v
    return FlatClosedForms(g=g, L1=L1, A=A, J=-L1, s0=s0)


@dataclass(frozen=True)
class CatalogEntry:
    kind: str
    dim: int
    c0: float | None = None

    def __post_init__(self):
        if self.kind not in ("flat", "quadric"):
            raise InvalidParameter(f"unknown catalog kind {self.kind!r}")
        if int(self.dim) < 1:
            raise InvalidParameter("catalog entries need dim >= 1")
        if self.kind == "flat" and (self.c0 is None or not self.c0 > 0):
            raise InvalidParameter("flat entries need c0 > 0")

    def build(self) -> ImmersionSpec:
        if self.kind == "flat":
            return flat_hypersphere(self.dim, self.c0)
        return quadric_hypersphere(self.dim)


CATALOG = (
    {
        "kind": "flat",
        "parameters": {"dim": "n0 >= 1", "c0": "C0 > 0"},
        "description": "x^1 ... x^(n0+1) = C0; flat affine metric, composition of n0+1 points",
        "closed_forms": True,
    },
    {
        "kind": "quadric",
        "parameters": {"dim": "n >= 1"},
        "description": "upper hyperboloid sheet x_(n+1)^2 - |u|^2 = 1; vanishing cubic form",
        "closed_forms": False,
    },
)


def catalog() -> list:
    """Descriptions of the built-in entries."""
    return [dict(e) for e in CATALOG]


def spec_from_dict(d) -> ImmersionSpec:
    """Build a spec from its JSON form; inverse of ``to_dict``."""
    from .calabi import compose

    if not isinstance(d, dict) or "kind" not in d:
        raise ManifestError(f"spec must be an object with a 'kind' field, got {d!r}")
    kind = d["kind"]
    try:
        if kind == "flat":
            return flat_hypersphere(d["dim"], d.get("c0", 1.0))
        if kind == "quadric":
            return quadric_hypersphere(d["dim"])
        if kind == "composition":
            return compose(d["points"], d["constants"], [spec_from_dict(f) for f in d.get("factors", [])])
    except KeyError as exc:
        raise ManifestError(f"spec of kind {kind!r} is missing field {exc}") from None
    raise ManifestError(f"unknown spec kind {kind!r}")
