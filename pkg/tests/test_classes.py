"""Primary and secondary characteristic classes."""

import math

import numpy as np
import pytest

import algebroidlab as al
from algebroidlab.classes import (
    InvariantPolynomial,
    _matchings,
    _simplex_integrals,
    _t_integrals,
    invariant_polynomial,
)
from algebroidlab.connections import bundle_rank
from algebroidlab.errors import (
    AlgebroidMismatchError,
    BadOrderError,
    ShapeMismatchError,
)
from algebroidlab.fields import parse_field
from conftest import (
    AFF1_CONSTANTS,
    SL2_CONSTANTS,
    form_coeff_max,
    form_diff_max,
    random_symbols,
    sl3_constants,
)

TWO_PI = 2.0 * math.pi


def test_sigma_matches_characteristic_polynomial():
    rng = np.random.default_rng(np.random.Philox(3))
    x = rng.uniform(-1.0, 1.0, size=(5, 5))
    # det(mu I + X/2pi) = mu^5 + sigma_1 mu^4 + sigma_2 mu^3 + ...
    coeffs = np.poly(-x / TWO_PI)
    for k in range(1, 6):
        got = InvariantPolynomial(k, 5).sigma(x)
        assert abs(got - coeffs[k]) < 1e-12


def test_polarization_diagonal_and_symmetry():
    rng = np.random.default_rng(np.random.Philox(4))
    a = rng.uniform(-1.0, 1.0, size=(4, 4))
    b = rng.uniform(-1.0, 1.0, size=(4, 4))
    c = rng.uniform(-1.0, 1.0, size=(4, 4))
    p2 = invariant_polynomial(2, 4)
    assert abs(p2(a, a) - p2.sigma(a)) < 1e-14
    assert abs(p2(a, b) - p2(b, a)) < 1e-14
    # linear in each slot
    assert abs(p2(a + b, c) - p2(a, c) - p2(b, c)) < 1e-13
    assert abs(p2(2.0 * a, b) - 2.0 * p2(a, b)) < 1e-13
    p3 = invariant_polynomial(3, 4)
    assert abs(p3(a, a, a) - p3.sigma(a)) < 1e-13
    assert abs(p3(a, b, c) - p3(b, c, a)) < 1e-13


def test_invariant_polynomial_order_bounds():
    with pytest.raises(BadOrderError):
        InvariantPolynomial(0, 3)
    with pytest.raises(BadOrderError):
        InvariantPolynomial(4, 3)
    p = InvariantPolynomial(2, 3)
    with pytest.raises(ShapeMismatchError):
        p(np.eye(3))


def test_matchings_count_double_factorial():
    for n, want in ((0, 1), (2, 1), (4, 3), (6, 15)):
        found = list(_matchings(range(n)))
        assert len(found) == want
        for matching in found:
            flat = sorted(x for pair in matching for x in pair)
            assert flat == list(range(n))


def test_quadrature_moments_exact():
    t = _t_integrals(6, 8)
    assert t[0] == 1.0
    for d in range(1, 7):
        assert abs(t[d] - 1.0 / (d + 1)) < 1e-15
    s = _simplex_integrals(2, 8)
    for i in range(3):
        for j in range(3):
            want = math.factorial(i) * math.factorial(j) \
                / math.factorial(i + j + 2)
            assert abs(s[(i, j)] - want) < 1e-15


def test_chern_weil_k1_is_curvature_trace(catalog):
    a = catalog["so3_action"]
    conn = al.basic_connection(a)
    q = bundle_rank(a, "E")
    form = al.chern_weil(a, conn, InvariantPolynomial(1, q))
    omega = al.local_curvature(conn)
    for s in range(a.rank):
        for t in range(s + 1, a.rank):
            mat = omega.coeff((s, t))
            tr = mat[0, 0]
            for i in range(1, q):
                tr = tr + mat[i, i]
            want = (1.0 / TWO_PI) * tr
            assert (form.coeff((s, t)) - want).max_abs_coeff() < 1e-12


def test_chern_weil_overflow_and_checks(catalog):
    a = catalog["so3_action"]
    conn = al.basic_connection(a)
    q = bundle_rank(a, "E")
    form = al.chern_weil(a, conn, InvariantPolynomial(2, q))
    assert form.overflow and not form.coeffs and form.degree == 4
    with pytest.raises(AlgebroidMismatchError):
        al.chern_weil(catalog["tangent2"], conn, InvariantPolynomial(1, q))
    with pytest.raises(ShapeMismatchError):
        al.chern_weil(a, conn, InvariantPolynomial(1, 3))


def test_flat_metric_primaries_vanish_exactly(catalog):
    for a in catalog.values():
        conn = al.flat_metric_connection(a)
        form = al.chern_weil(a, conn, InvariantPolynomial(1, conn.q))
        assert form_coeff_max(form) == 0.0


def test_basic_primaries_vanish(catalog):
    # the order-1 class of the canonical connection is a pure boundary
    for a in catalog.values():
        conn = al.basic_connection(a)
        form = al.chern_weil(a, conn, InvariantPolynomial(1, conn.q))
        assert form_coeff_max(form) < 1e-8


@pytest.fixture(scope="module")
def sl3_conns(sl3):
    return tuple(al.build_connection(sl3, "E", random_symbols(sl3, "E", key))
                 for key in (7, 8, 9))


def test_transgression_boundary_identity(sl3, sl3_conns):
    c0, c1, _ = sl3_conns
    for k in (2, 3):
        poly = InvariantPolynomial(k, 8)
        lam = al.transgression_form(c1, c0, poly)
        lhs = al.differential(lam)
        rhs = al.chern_weil(sl3, c1, poly) \
            + (-1.0) * al.chern_weil(sl3, c0, poly)
        assert form_diff_max(lhs, rhs) < 1e-7


def test_triple_boundary_identity(sl3, sl3_conns):
    c0, c1, c2 = sl3_conns
    poly = InvariantPolynomial(3, 8)
    trip = al.secondary_triple(sl3, c2, c1, c0, poly)
    lhs = al.differential(trip)
    rhs = al.transgression_form(c1, c0, poly) \
        + (-1.0) * al.transgression_form(c2, c0, poly) \
        + al.transgression_form(c2, c1, poly)
    assert form_diff_max(lhs, rhs) < 1e-7


def test_transgression_quadrature_insensitive(sl3, sl3_conns):
    c0, c1, _ = sl3_conns
    poly = InvariantPolynomial(3, 8)
    a8 = al.transgression_form(c1, c0, poly, n_nodes=8)
    a64 = al.transgression_form(c1, c0, poly, n_nodes=64)
    assert form_diff_max(a8, a64) < 1e-12


def test_secondary_triple_order_checks(sl3, sl3_conns):
    c0, c1, c2 = sl3_conns
    with pytest.raises(BadOrderError):
        al.secondary_triple(sl3, c2, c1, c0, InvariantPolynomial(2, 8))
    out = al.secondary_triple(sl3, c2, c1, c0, InvariantPolynomial(1, 8))
    assert out.degree == 0 and not out.coeffs


def test_m3_vanishes_both_routes(catalog, sl3):
    # rank 3 truncates the degree-5 form, so both routes are zero tensors
    m3 = al.secondary_class(catalog["sl2"], 3)
    assert m3.overflow and not m3.form.coeffs
    v3 = al.lie_algebra_secondary(SL2_CONSTANTS, 3)
    assert v3.shape == (3,) * 5 and np.all(v3 == 0.0)
    # rank 8 leaves room; the value is a genuine cancellation
    m3_full = al.secondary_class(sl3, 3)
    assert not m3_full.overflow
    assert form_coeff_max(m3_full.form) < 1e-12
    assert m3_full.closedness_residual < 1e-8
    v3_full = al.lie_algebra_secondary(sl3_constants(), 3)
    assert np.max(np.abs(v3_full)) < 1e-12


def test_lie_algebra_secondary_values_and_checks():
    v1 = al.lie_algebra_secondary(AFF1_CONSTANTS, 1)
    assert abs(v1[0] - 1.0 / TWO_PI) < 1e-15
    assert v1[1] == 0.0
    with pytest.raises(BadOrderError):
        al.lie_algebra_secondary(AFF1_CONSTANTS, 2)
    with pytest.raises(ShapeMismatchError):
        al.lie_algebra_secondary(np.zeros((2, 3, 2)), 1)


def test_modular_cocycle_values(catalog):
    for name in ("sl2", "so3", "heisenberg"):
        theta = al.modular_cocycle(catalog[name]).form
        worst = max(theta.coeff((s,)).max_abs_coeff()
                    for s in range(catalog[name].rank))
        assert worst < 1e-12
    theta = al.modular_cocycle(catalog["aff1"]).form
    assert theta.coeff((0,)).to_string() == "1"
    assert theta.coeff((1,)).is_zero()
    theta = al.modular_cocycle(catalog["scaling"]).form
    assert theta.coeff((0,)).to_string() == "1"
    # twice the trace of the adjoint on the Lie-Poisson dual
    theta = al.modular_cocycle(catalog["dual_aff1"]).form
    assert theta.coeff((0,)).to_string() == "2"
    assert theta.coeff((1,)).is_zero()


def test_modular_cocycles_are_closed(catalog):
    for a in catalog.values():
        assert al.modular_cocycle(a).closedness_residual < 1e-8


def test_modular_theorem_all_catalog(catalog):
    for a in catalog.values():
        rep = al.modular_theorem_check(a)
        assert rep["max_deviation"] < 1e-8
        assert rep["n_points"] == 20
        assert rep["closedness_residual"] < 1e-8


def test_modular_values_weight_rescale(catalog):
    a = catalog["scaling"]
    plain = al.modular_values(a, (2.0,))
    assert np.allclose(plain, [1.0])
    shifted = al.modular_values(a, (2.0,), weight=parse_field(a.chart, "x1"))
    assert np.allclose(shifted, [2.0])


def test_transformation_m1_matches_modular(catalog):
    data = catalog["so3_action"].metadata["data"]
    fields = al.transformation_m1(data)
    assert max(f.max_abs_coeff() for f in fields) < 1e-12
    data = catalog["scaling"].metadata["data"]
    fields = al.transformation_m1(data)
    assert abs(fields[0].evaluate((0.7,)) - 1.0 / TWO_PI) < 1e-15


def test_conformal_shift_changes_transgression_by_trace(catalog):
    # adding (anchor derivative of h) times the identity to the symbols
    # moves the order-1 difference form by q d_A h / 2 pi
    a = catalog["so3_action"]
    base = al.basic_connection(a)
    q = bundle_rank(a, "E")
    h = parse_field(a.chart, "x1")
    sym = np.array(base.symbols, dtype=object, copy=True)
    for s in range(a.rank):
        hs = a.anchor_row(s).apply(h)
        for u in range(q):
            sym[s, u, u] = sym[s, u, u] + hs
    shifted = al.build_connection(a, "E", sym)
    lam = al.transgression_form(shifted, base, InvariantPolynomial(1, q))
    for s in range(a.rank):
        want = (q / TWO_PI) * a.anchor_row(s).apply(h)
        assert (lam.coeff((s,)) - want).max_abs_coeff() < 1e-12


def test_secondary_class_api(catalog):
    with pytest.raises(BadOrderError):
        al.secondary_class(catalog["so3"], 2)
    with pytest.raises(BadOrderError):
        al.secondary_class(catalog["so3"], 0)
    m3 = al.secondary_class(catalog["so3"], 3)
    assert m3.overflow and m3.order == 3
    assert m3.form.degree == 5 and not m3.form.coeffs
    m1 = al.secondary_class(catalog["so3_action"], 1)
    assert m1.connections == ("basic", "flat_metric")
    assert not m1.overflow
    assert m1.closedness_residual < 1e-8
