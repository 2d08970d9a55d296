"""Equiaffine invariants of hypersurfaces and Calabi compositions of hyperbolic affine spheres."""

__version__ = "0.1.0"

from .calabi import (  # noqa: E402
    ClosedFormInvariants,
    CompositionSpec,
    closed_form_H,
    closed_form_invariants,
    closed_form_tensors,
    compose,
    composition_constants,
    f_table,
)
from .catalog import catalog, flat_closed_forms, flat_hypersphere, quadric_hypersphere  # noqa: E402
from .characterize import (  # noqa: E402
    CharacterizationReport,
    DecompositionData,
    characterize,
    plant_violation,
    sample_blocks,
)
from .estimators import AffineInvariantTransformer, CalabiCharacterizer  # noqa: E402
from .geometry import PointInvariants, check_S_membership, point_invariants, residual_suite  # noqa: E402
from .immersion import GraphImmersion, ImmersionSpec, LinearImage, QuadricHypersphere  # noqa: E402
from .jets import Jet, MultiIndex, jet_arith, jet_variable, extract_partial  # noqa: E402

__all__ = [
    "AffineInvariantTransformer",
    "CalabiCharacterizer",
    "CharacterizationReport",
    "ClosedFormInvariants",
    "CompositionSpec",
    "DecompositionData",
    "GraphImmersion",
    "ImmersionSpec",
    "Jet",
    "LinearImage",
    "MultiIndex",
    "PointInvariants",
    "QuadricHypersphere",
    "catalog",
    "characterize",
    "check_S_membership",
    "closed_form_H",
    "closed_form_invariants",
    "closed_form_tensors",
    "compose",
    "composition_constants",
    "extract_partial",
    "f_table",
    "flat_closed_forms",
    "flat_hypersphere",
    "jet_arith",
    "jet_variable",
    "plant_violation",
    "point_invariants",
    "quadric_hypersphere",
    "residual_suite",
    "sample_blocks",
]
