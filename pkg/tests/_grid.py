"""Seeded grid of Calabi compositions shared by the acceptance and module tests."""
from __future__ import annotations

import itertools

import numpy as np

from affsphere import compose, flat_hypersphere, quadric_hypersphere

GRID_SEED = 20240611
FACTOR_KINDS = ("flat1", "flat2", "quadric2")


def _factor(kind: str, rng):
    if kind == "flat1":
        return flat_hypersphere(1, float(rng.uniform(0.5, 2.0)))
    if kind == "flat2":
        return flat_hypersphere(2, float(rng.uniform(0.5, 2.0)))
    return quadric_hypersphere(2)


def grid_cases():
    """(label, spec) pairs over r in {0,1,2}, s in {1,2} with r + s >= 2."""
    rng = np.random.default_rng(GRID_SEED)
    out = []
    for r in (0, 1, 2):
        for s in (1, 2):
            if r + s < 2:
                continue
            for kinds in itertools.combinations_with_replacement(FACTOR_KINDS, s):
                factors = [_factor(k, rng) for k in kinds]
                constants = rng.uniform(0.5, 2.0, size=r + s).tolist()
                out.append((f"r{r}-" + "+".join(kinds), compose(r, constants, factors)))
    return out


def sample_points(spec, count: int, seed: int = 0, box: float = 0.8) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-box, box, size=(count, spec.dim))


def center_fixtures():
    """Compositions with r >= 3 points, used for the center-block checks."""
    return [
        ("r3-flat1", compose(3, [1.0, 1.3, 0.7, 1.1], [flat_hypersphere(1, 1.5)])),
        ("r3-quadric2", compose(3, [0.9, 1.2, 1.0, 0.8], [quadric_hypersphere(2)])),
        ("r4-quadric1", compose(4, [1.0, 1.1, 0.9, 1.2, 1.4], [quadric_hypersphere(1)])),
        ("r3-s2", compose(3, [1.0, 0.8, 1.2, 1.1, 0.9], [flat_hypersphere(1, 1.0), quadric_hypersphere(2)])),
    ]
