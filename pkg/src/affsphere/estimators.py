"""scikit-learn style wrappers around the invariant pipeline and the characterization."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .characterize import DEFAULT_TOL, DecompositionData, characterize, sample_blocks
from .errors import DimensionMismatch, InvalidParameter
from .geometry import RESIDUAL_NAMES, point_invariants
from .immersion import ImmersionSpec

SCALAR_FEATURES = ("L1", "J", "chi", "detH")


def _as_spec(spec) -> ImmersionSpec:
    from .catalog import spec_from_dict

    if isinstance(spec, ImmersionSpec):
        return spec
    if isinstance(spec, dict):
        return spec_from_dict(spec)
    raise InvalidParameter(f"spec must be an ImmersionSpec or a spec mapping, got {type(spec).__name__}")


class AffineInvariantTransformer(TransformerMixin, BaseEstimator):
    """Map chart points of a fixed hypersurface to scalar equiaffine invariants.

    Parameters
    ----------
    spec : ImmersionSpec or dict
        The hypersurface; mappings use the manifest spec format.
    features : tuple of str
        Any of ``L1``, ``J``, ``chi``, ``detH`` and the residual names of
        :func:`affsphere.geometry.residual_suite`.  ``J`` and ``chi`` are NaN
        for curves.
    """

    def __init__(self, spec=None, features=("L1", "J")):
        self.spec = spec
        self.features = features

    def fit(self, X, y=None):
        if self.spec is None:
            raise InvalidParameter("AffineInvariantTransformer needs a spec")
        spec = _as_spec(self.spec)
        bad = [f for f in self.features if f not in SCALAR_FEATURES + RESIDUAL_NAMES]
        if bad:
            raise InvalidParameter(f"unknown features {bad}")
        X = check_array(X, dtype=float)
        if X.shape[1] != spec.dim:
            raise DimensionMismatch(f"X has {X.shape[1]} columns, the immersion has dimension {spec.dim}")
        self.spec_ = spec
        self.n_features_in_ = X.shape[1]
        return self

    def _row(self, p) -> list:
        inv = point_invariants(self.spec_, p)
        out = []
        for f in self.features:
            v = getattr(inv, f) if f in SCALAR_FEATURES else inv.residuals.get(f)
            out.append(np.nan if v is None else float(v))
        return out

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        return np.array([self._row(p) for p in X], dtype=float).reshape(len(X), len(self.features))

    def get_feature_names_out(self, input_features=None):
        return np.array(list(self.features), dtype=object)


class CalabiCharacterizer(BaseEstimator):
    """Estimator face of :func:`affsphere.characterize.characterize`.

    ``fit`` accepts block data, a spec (sampled with ``count``/``seed``/``box``),
    a dataset mapping or a path.  ``predict`` maps a sequence of such sources to
    1 (accepted) or 0 (rejected).
    """

    def __init__(self, tol=DEFAULT_TOL, count=5, seed=0, box=1.0):
        self.tol = tol
        self.count = count
        self.seed = seed
        self.box = box

    def _data(self, X) -> DecompositionData:
        if not (isinstance(self.count, (int, np.integer)) and self.count >= 1):
            raise InvalidParameter(f"count must be a positive integer, got {self.count!r}")
        if not float(self.tol) > 0:
            raise InvalidParameter(f"tol must be positive, got {self.tol!r}")
        if isinstance(X, ImmersionSpec):
            return sample_blocks(X, count=self.count, seed=self.seed, box=self.box)
        return sample_blocks(X)

    def fit(self, X, y=None):
        data = self._data(X)
        rep = characterize(data, tol=self.tol)
        self.data_ = data
        self.report_ = rep
        self.verdict_ = rep.verdict
        self.H_ = None if rep.H is None else np.array(rep.H)
        self.gram_ = None if rep.gram is None else np.array(rep.gram)
        self.r_hat_ = rep.r_hat
        self.reconstructed_ = rep.reconstructed
        return self

    def predict(self, X):
        if isinstance(X, (ImmersionSpec, DecompositionData, dict, str)):
            X = [X]
        return np.array([int(characterize(self._data(x), tol=self.tol).accepted) for x in X])
