"""Declarative hypersurface immersions evaluable on floats or jets."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import jets
from .errors import ChartDomainViolation, InvalidParameter


class ImmersionSpec:
    """A chart ``u -> x(u)`` of an ``n``-dimensional hypersurface in ``R^{n+1}``.

    Subclasses implement :meth:`evaluate`, which must only use ring operations
    and the helpers of :mod:`affsphere.jets` so that the same formula runs on
    floats and on Taylor jets.
    """

    #: set by subclasses that are hyperbolic affine spheres centred at the origin
    is_hyperbolic_sphere = False

    def __init__(self, dim: int):
        if int(dim) < 1:
            raise InvalidParameter(f"immersion dimension must be >= 1, got {dim}")
        self.dim = int(dim)

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    def evaluate(self, coords: Sequence) -> list:
        raise NotImplementedError

    def in_domain(self, point: np.ndarray) -> bool:
        return True

    def check_point(self, point) -> np.ndarray:
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if p.shape != (self.dim,):
            raise ChartDomainViolation(f"expected a point with {self.dim} coordinates, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ChartDomainViolation(f"non-finite chart coordinates {p}")
        if not self.in_domain(p):
            raise ChartDomainViolation(f"point {p} lies outside the chart of {self!r}")
        return p

    def __call__(self, point) -> np.ndarray:
        p = self.check_point(point)
        return np.array([float(v) for v in self.evaluate(list(p))])

    def to_dict(self) -> dict:
        raise NotImplementedError(f"{type(self).__name__} has no manifest representation")


class QuadricHypersphere(ImmersionSpec):
    """Upper sheet of the hyperboloid ``x_{n+1}^2 - |u|^2 = 1``.

    Chart ``u -> (u, sqrt(1 + |u|^2))``; a hyperbolic affine sphere with centre
    at the origin and vanishing cubic form.
    """

    is_hyperbolic_sphere = True

    def evaluate(self, coords):
        r2 = 1.0
        for c in coords:
            r2 = r2 + c * c
        return list(coords) + [jets.sqrt(r2)]

    def __repr__(self):
        return f"QuadricHypersphere(dim={self.dim})"

    def to_dict(self):
        return {"kind": "quadric", "dim": self.dim}


class GraphImmersion(ImmersionSpec):
    """Graph ``u -> (u, f(u))`` of a user supplied height function.

    ``func`` receives the list of coordinates (floats or jets).  ``domain`` is
    an optional predicate on the numeric point.
    """

    def __init__(self, func: Callable, dim: int, domain: Callable | None = None, name: str = "graph"):
        super().__init__(dim)
        self.func = func
        self.domain = domain
        self.name = name

    def evaluate(self, coords):
        return list(coords) + [self.func(list(coords))]

    def in_domain(self, point):
        return True if self.domain is None else bool(self.domain(point))

    def __repr__(self):
        return f"GraphImmersion({self.name!r}, dim={self.dim})"


class LinearImage(ImmersionSpec):
    """``M @ x(u)`` for a fixed linear map ``M`` of the ambient space."""

    def __init__(self, base: ImmersionSpec, matrix):
        super().__init__(base.dim)
        self.base = base
        self.matrix = np.asarray(matrix, dtype=float)
        if self.matrix.shape != (base.ambient_dim, base.ambient_dim):
            raise InvalidParameter("linear map has the wrong shape")
        self.is_hyperbolic_sphere = base.is_hyperbolic_sphere

    def evaluate(self, coords):
        x = self.base.evaluate(coords)
        out = []
        for row in self.matrix:
            acc = 0.0
            for a, xa in zip(row, x):
                if a != 0.0:
                    acc = acc + xa * float(a)
            out.append(acc)
        return out

    def in_domain(self, point):
        return self.base.in_domain(point)

    def __repr__(self):
        return f"LinearImage({self.base!r})"
