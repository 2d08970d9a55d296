import itertools

import numpy as np
import pytest

from affsphere import (
    ClosedFormInvariants,
    closed_form_H,
    closed_form_invariants,
    closed_form_tensors,
    compose,
    composition_constants,
    f_table,
    flat_closed_forms,
    flat_hypersphere,
    point_invariants,
    quadric_hypersphere,
)
from affsphere.calabi import iter_components
from affsphere.catalog import spec_from_dict
from affsphere.errors import ChartDomainViolation, InvalidParameter
from affsphere.immersion import GraphImmersion

from _grid import grid_cases, sample_points

GRID = grid_cases()
GRID_IDS = [label for label, _ in GRID]


# --- bookkeeping -----------------------------------------------------------


def test_f_table_two_points_one_curve():
    ft = f_table(compose(2, [1, 1, 1], [quadric_hypersphere(1)]))
    assert ft.f == (1, 2, 4)
    assert ft.n == 3
    assert ft.f[-1] == ft.n + 1


def test_f_table_two_surfaces():
    ft = f_table(compose(0, [1, 1], [quadric_hypersphere(2), quadric_hypersphere(2)]))
    assert ft.f == (3, 6)
    assert ft.n == 5


@pytest.mark.parametrize("n0", [1, 2, 3, 4])
def test_f_table_flat_example(n0):
    assert f_table(flat_hypersphere(n0, 1.0)).f == tuple(range(1, n0 + 2))


@pytest.mark.parametrize("n0,c0", [(1, 1.0), (2, 1.0), (2, 3.0), (3, 0.5)])
def test_points_only_composition_is_flat_example(n0, c0):
    comp = compose(n0 + 1, [1.0] * n0 + [c0])
    flat = flat_hypersphere(n0, c0)
    for p in np.random.default_rng(0).uniform(-1, 1, (4, n0)):
        np.testing.assert_array_equal(comp(p), flat(p))
    assert composition_constants(comp)[1] == pytest.approx(flat_closed_forms(n0, c0).L1, rel=1e-14)


def test_value_at_zero_t():
    q = quadric_hypersphere(2)
    spec = compose(2, [1.5, 0.7, 2.0], [q])
    p = np.array([0.3, -0.2])
    x = spec(np.concatenate([[0.0, 0.0], p]))
    np.testing.assert_allclose(x, np.concatenate([[1.5, 0.7], 2.0 * q(p)]), rtol=1e-15)


def test_quadric_factor_composition_is_sphere():
    spec = compose(1, [1.0, 1.3], [quadric_hypersphere(2)])
    inv = point_invariants(spec, [0.2, 0.4, -0.1])
    assert inv.L1 < 0
    np.testing.assert_allclose(inv.B, inv.L1 * np.eye(3), atol=1e-9)


@pytest.mark.parametrize("label,spec", GRID, ids=GRID_IDS)
def test_block_structure(label, spec):
    # flat t-block, no cross terms, q >= s - 1 with equality iff r = 0
    q = spec.q
    for p in sample_points(spec, 2, seed=7):
        inv = point_invariants(spec, p)
        assert np.max(np.abs(inv.g[:q, q:])) < 1e-12 * np.max(np.abs(inv.g))
        off = spec.ftable.offsets
        for a, b in itertools.combinations(range(spec.s), 2):
            sa = slice(off[a], off[a] + spec.factor_dims[a])
            sb = slice(off[b], off[b] + spec.factor_dims[b])
            assert np.max(np.abs(inv.g[sa, sb])) < 1e-12 * np.max(np.abs(inv.g))
    cfi = closed_form_invariants(spec)
    assert np.count_nonzero(cfi.g_lambda_mu - np.diag(np.diag(cfi.g_lambda_mu))) == 0
    assert np.all(np.diag(cfi.g_lambda_mu) > 0)
    assert q >= spec.s - 1
    assert (q == spec.s - 1) == (spec.r == 0)


def test_composition_validation():
    q = quadric_hypersphere(1)
    with pytest.raises(InvalidParameter):
        compose(1, [1.0], [])
    with pytest.raises(InvalidParameter):
        compose(1, [1.0], [q])
    with pytest.raises(InvalidParameter):
        compose(1, [1.0, -2.0], [q])
    with pytest.raises(InvalidParameter):
        compose(1, [1.0, 1.0], [GraphImmersion(lambda u: u[0] * u[0], 1)])


def test_factor_domain_propagates():
    class Disc(type(quadric_hypersphere(2))):
        def in_domain(self, point):
            return float(point @ point) < 1.0

    spec = compose(1, [1.0, 1.0], [Disc(2)])
    with pytest.raises(ChartDomainViolation):
        point_invariants(spec, [0.0, 0.9, 0.9])


# --- constants ---------------------------------------------------------------


def _closed_C(spec):
    n = spec.dim
    prod = 1.0 / (n + 1)
    for a in range(spec.r):
        prod *= spec.constants[a] ** 2
    for alpha, (d, L) in enumerate(zip(spec.factor_dims, spec.factor_L1)):
        c = spec.constants[spec.r + alpha]
        prod *= c ** (2 * (d + 1)) / ((d + 1) ** (d + 1) * (-L) ** (d + 2))
    return prod ** (1.0 / (n + 2))


@pytest.mark.parametrize("label,spec", GRID, ids=GRID_IDS)
def test_constants_formula(label, spec):
    C, L1 = composition_constants(spec)
    assert C == pytest.approx(_closed_C(spec), rel=1e-13)
    assert L1 == pytest.approx(-1.0 / ((spec.dim + 1) * C), rel=1e-14)


@pytest.mark.parametrize("lam", [0.5, 1.7, 3.0])
def test_uniform_scaling_of_constants(lam):
    spec = compose(2, [1.0, 0.6, 1.4], [flat_hypersphere(1, 1.2)])
    scaled = compose(2, [lam * c for c in spec.constants], list(spec.factors))
    n = spec.dim
    C0, C1 = composition_constants(spec)[0], composition_constants(scaled)[0]
    # every constant enters squared with total weight 2(r + sum(n_a + 1)) = 2(n + 1)
    assert C1 / C0 == pytest.approx(lam ** (2 * (n + 1) / (n + 2)), rel=1e-13)
    inv = point_invariants(scaled, [0.1, 0.2, 0.3])
    assert inv.L1 == pytest.approx(composition_constants(scaled)[1], rel=1e-6)


def test_rescaled_compositions_share_scalar_invariants():
    # x, c(e_1, ..) and (e_1, .., c' e_K x_s) with c, c' chosen so that the
    # diagonal map between them is unimodular
    factors = [flat_hypersphere(1, 1.3), quadric_hypersphere(2)]
    consts = [0.8, 1.5, 0.6, 1.2]
    r = 2
    n_of = [0] * r + [f.dim for f in factors]
    weight = sum(n + 1 for n in n_of)
    log_det = sum((n + 1) * np.log(c) for n, c in zip(n_of, consts))
    c = np.exp(log_det / weight)
    c_last = np.exp(log_det / (n_of[-1] + 1))
    x = compose(r, consts, factors)
    x_bar = compose(r, [c] * len(consts), factors)
    x_tilde = compose(r, [1.0] * (len(consts) - 1) + [c_last], factors)
    for p in sample_points(x, 3, seed=4):
        invs = [point_invariants(sp, p) for sp in (x, x_bar, x_tilde)]
        for a, b in itertools.combinations(invs, 2):
            assert a.L1 == pytest.approx(b.L1, rel=1e-6)
            assert a.J == pytest.approx(b.J, rel=1e-6)


# --- closed-form tables ------------------------------------------------------


@pytest.mark.parametrize("label,spec", GRID, ids=GRID_IDS)
def test_tables_match_pipeline(label, spec):
    for p in sample_points(spec, 3, seed=1):
        inv = point_invariants(spec, p)
        g, A, L1 = closed_form_tensors(spec, p)
        np.testing.assert_allclose(inv.g, g, rtol=1e-6, atol=1e-6 * np.max(np.abs(g)))
        assert np.max(np.abs(inv.A - A)) <= 1e-6 * (1 + np.max(np.abs(A)))
        assert inv.L1 == pytest.approx(L1, rel=1e-6)
        res = inv.residuals
        assert res["apolarity"] <= 1e-7 * (1 + np.max(np.abs(inv.A)))
        assert res["gauss_sphere"] <= 1e-6 * (1 + np.max(np.abs(inv.R)))
        assert np.max(np.abs(inv.B - inv.L1 * np.eye(spec.dim))) <= 1e-7 * (1 + abs(inv.L1))


@pytest.mark.parametrize("n0", [2, 3, 4])
def test_points_only_tables_reproduce_flat_example(n0):
    spec = compose(n0 + 1, [1.0] * n0 + [1.7])
    g, A, L1 = closed_form_tensors(spec, np.zeros(n0))
    cf = flat_closed_forms(n0, 1.7)
    np.testing.assert_allclose(g, cf.g, rtol=1e-13)
    np.testing.assert_allclose(A, cf.A, atol=1e-13)
    assert L1 == pytest.approx(cf.L1, rel=1e-13)


def test_cross_metric_entries_are_exact_zero():
    spec = compose(1, [1.0, 1.0, 2.0], [quadric_hypersphere(2), flat_hypersphere(1, 1.0)])
    g, _, _ = closed_form_tensors(spec, np.full(spec.dim, 0.1))
    assert np.all(g[: spec.q, spec.q:] == 0.0)


def test_iter_components_lists_nonzero_orbits():
    spec = compose(1, [1.0, 1.2], [quadric_hypersphere(1)])
    comps = list(iter_components(spec, [0.1, 0.2], atol=1e-14))
    assert comps
    assert all(i <= j <= k for i, j, k, _ in comps)
    _, A, _ = closed_form_tensors(spec, [0.1, 0.2])
    assert len(comps) == sum(1 for i, j, k in itertools.combinations_with_replacement(range(2), 3)
                             if abs(A[i, j, k]) > 1e-14)


def test_table_round_trip():
    cfi = closed_form_invariants(compose(2, [1.0, 0.5, 1.1], [flat_hypersphere(2, 1.0)]))
    again = ClosedFormInvariants.from_dict(cfi.to_dict())
    assert again.to_dict() == cfi.to_dict()


def test_nested_composition_spec_round_trip():
    inner = compose(1, [1.0, 2.0], [quadric_hypersphere(1)])
    outer = compose(1, [0.5, 1.5], [inner])
    again = spec_from_dict(outer.to_dict())
    p = np.array([0.1, 0.2, -0.3])
    np.testing.assert_array_equal(again(p), outer(p))
    g, A, L1 = closed_form_tensors(outer, p)
    inv = point_invariants(outer, p)
    assert np.max(np.abs(inv.A - A)) < 1e-8
    assert inv.L1 == pytest.approx(L1, rel=1e-8)


# --- mean transversals -------------------------------------------------------


def test_two_curves_gram():
    spec = compose(0, [1.0, 1.4], [quadric_hypersphere(1), flat_hypersphere(1, 2.0)])
    ch = closed_form_H(spec)
    L1 = composition_constants(spec)[1]
    np.testing.assert_allclose(np.diag(ch.gram), [-L1, -L1], rtol=1e-12)
    assert ch.gram[0, 1] == pytest.approx(L1, rel=1e-12)


@pytest.mark.parametrize("label,spec", GRID, ids=GRID_IDS)
def test_H_gram_prediction(label, spec):
    ch = closed_form_H(spec)
    np.testing.assert_allclose(ch.gram, ch.predicted, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("label,spec", GRID, ids=GRID_IDS)
def test_H_matches_traced_table(label, spec):
    ch = closed_form_H(spec)
    q = spec.q
    p = sample_points(spec, 1, seed=3)[0]
    g, A, _ = closed_form_tensors(spec, p)
    for alpha, (off, d) in enumerate(zip(spec.ftable.offsets, spec.factor_dims)):
        sl = slice(off, off + d)
        gi = np.linalg.inv(g[sl, sl])
        traced = np.einsum("ij,ijl->l", gi, A[sl, sl, :q]) / d  # lowered components
        H_low = g[:q, :q] @ np.asarray(ch.H[alpha])
        np.testing.assert_allclose(traced, H_low, atol=1e-12 * (1 + np.max(np.abs(A))))


def test_single_factor_norm():
    spec = compose(2, [1.0, 1.0, 1.0], [quadric_hypersphere(2)])
    ch = closed_form_H(spec)
    L1 = composition_constants(spec)[1]
    n, d = spec.dim, 2
    assert ch.gram[0, 0] == pytest.approx((n - d) / (d + 1) * (-L1), rel=1e-12)
