import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jacobi_markov.errors import ParameterDomainError, SingularInputError, UsageError
from jacobi_markov.orthopoly import Normalization
from jacobi_markov.simplex import (
    BiangleIndex,
    BianglePoint,
    TriangleIndex,
    TrianglePoint,
    biangle_evaluation_limit,
    biangle_indices,
    biangle_inner,
    biangle_operator,
    biangle_operator_selfadjoint,
    biangle_poly,
    biangle_preservation,
    biangle_values,
    biangle_product_measure,
    biangle_symmetry_matrix,
    helper_C,
    helper_D,
    helper_E,
    helper_G,
    helper_H,
    random_biangle_pairs,
    random_triangle_pairs,
    triangle_inner,
    triangle_poly,
    triangle_product_measure,
    verify_biangle_product,
    verify_triangle_product,
)

unit = st.floats(-1.0, 1.0)
open_unit = st.floats(0.05, 0.95)


def test_helper_D_examples():
    assert helper_D(1.0, 0.3, 0.7, -0.2) == pytest.approx(0.3)
    assert helper_D(0.4, 0.5, 0.0, 0.9) == pytest.approx(0.2)
    assert helper_D(0.0, 0.0, 0.6, 0.5) == pytest.approx(0.3)


def test_helper_E_reduces_to_D_at_r_one():
    # with r = t = 1 the radicand is a perfect square, so E = |D(x1, y1; 1, 1)|
    assert helper_E(0.6, 0.8, 1.0, 1.0) == pytest.approx(abs(helper_D(0.6, 0.8, 1.0, 1.0)))
    assert helper_E(0.6, 0.8, 0.0, 0.3) == pytest.approx(0.48)


@given(unit, unit, st.floats(0, 1), unit)
def test_E_and_C_bounded(x1, y1, r, t):
    E = helper_E(x1, y1, r, t)
    assert 0.0 <= E <= 1.0 + 1e-12
    if E > 1e-8:
        assert abs(helper_C(x1, y1, r, t)) <= 1.0


@given(open_unit, st.floats(-1, 1), open_unit, st.floats(-1, 1), st.floats(0, 1), unit, unit, unit)
def test_G_bounded(x1, s, y1, u, r, t1, t2, t3):
    G = helper_G(x1, s * x1, y1, u * y1, r, t1, t2, t3)
    assert abs(G) <= 1.0


@given(open_unit, st.floats(0, 1), open_unit, st.floats(0, 1), st.floats(0, 1), unit, st.floats(0, 1), st.floats(0, 1), unit, st.floats(0, 1), unit)
def test_H_in_unit_interval(x1, s, y1, u, r1, t1, r2, r3, t2, r4, t3):
    H = helper_H(x1, s * x1, y1, u * y1, r1, t1, r2, r3, t2, r4, t3)
    assert 0.0 <= H <= 1.0


def test_helper_singular_and_domain():
    with pytest.raises(SingularInputError):
        helper_C(0.0, 0.5, 0.0, 0.3)
    with pytest.raises(ParameterDomainError):
        helper_D(1.5, 0.0, 0.0, 0.0)
    with pytest.raises(SingularInputError):
        helper_G(0.0, 0.0, 0.5, 0.1, 0.3, 0.1, 0.1, 0.1)


def test_region_membership():
    with pytest.raises(ParameterDomainError):
        BianglePoint(0.25, 0.6)
    with pytest.raises(ParameterDomainError):
        BianglePoint(float("nan"), 0.0)
    with pytest.raises(ParameterDomainError):
        TrianglePoint(0.3, 0.5)
    with pytest.raises(UsageError):
        TriangleIndex(1, 2)
    with pytest.raises(UsageError):
        BiangleIndex(-1, 0)


def test_biangle_constant_and_extension():
    assert biangle_poly(2.0, 0.75, BiangleIndex(0, 0), BianglePoint(0.3, 0.1)) == pytest.approx(1.0)
    assert biangle_poly(2.0, 0.75, BiangleIndex(1, 1), BianglePoint(0.0, 0.0)) == 0.0
    # n = 0 at x1 = 0 is the one-variable value at -1
    near = biangle_poly(2.0, 0.75, BiangleIndex(0, 2), BianglePoint(1e-10, 0.0))
    assert biangle_poly(2.0, 0.75, BiangleIndex(0, 2), BianglePoint(0.0, 0.0)) == pytest.approx(near, rel=1e-8)


def test_biangle_corner_nonzero():
    for idx in biangle_indices(6):
        v = biangle_poly(2.0, 0.75, idx, BianglePoint(1.0, 1.0), Normalization.VALUE_ONE_AT_ONE)
        assert v == pytest.approx(1.0)
        assert biangle_poly(2.0, 0.75, idx, BianglePoint(1.0, 1.0)) != 0.0


def test_biangle_orthonormal_gram():
    idx = biangle_indices(3)
    fs = [lambda x1, x2, i=i: biangle_values(2.0, 0.75, i, x1, x2) for i in idx]
    G = np.array([[biangle_inner(2.0, 0.75, f, g, npoints=10) for g in fs] for f in fs])
    np.testing.assert_allclose(G, np.eye(len(idx)), atol=1e-10)


def test_triangle_orthogonality():
    R = lambda n, k: lambda x1, w: np.vectorize(
        lambda a, b: triangle_poly(4.0, 1.0, 0.5, TriangleIndex(n, k), a, b)
    )(x1, w)
    assert abs(triangle_inner(4.0, 1.0, 0.5, R(1, 0), R(1, 1), npoints=12)) < 1e-9
    assert abs(triangle_inner(4.0, 1.0, 0.5, R(2, 1), R(1, 0), npoints=12)) < 1e-9
    assert triangle_inner(4.0, 1.0, 0.5, R(1, 1), R(1, 1), npoints=12) > 0


def test_triangle_corner_values():
    for n in range(5):
        for k in range(n + 1):
            assert triangle_poly(4.0, 1.0, 0.5, TriangleIndex(n, k), 1.0, 1.0) == pytest.approx(1.0)


def test_product_measures_are_probability():
    one = lambda *c: np.ones_like(c[0])
    assert biangle_product_measure(2.0, 0.75).tensor_rule(6).integrate(one) == pytest.approx(1.0)
    assert triangle_product_measure(4.0, 1.0, 0.5).tensor_integrate(one, 4) == pytest.approx(1.0)
    with pytest.raises(ParameterDomainError):
        triangle_product_measure(2.0, 1.0, 0.5)


def test_biangle_product_formula():
    pairs = random_biangle_pairs(2, seed=1)
    rep = verify_biangle_product(2.0, 0.75, biangle_indices(4), pairs)
    assert rep.passed, rep.summary_line()
    assert rep.max_abs_err < 1e-12


def test_biangle_product_wrong_angle_measure_fails():
    pairs = random_biangle_pairs(2, seed=1)
    rep = verify_biangle_product(2.0, 0.75, biangle_indices(4), pairs, angle_param=0.75)
    assert not rep.passed


def test_biangle_product_at_corner():
    x = BianglePoint(0.5, 0.2)
    rep = verify_biangle_product(2.0, 0.75, biangle_indices(3), x, BianglePoint(1.0, 1.0))
    assert rep.max_abs_err < 1e-12


def test_biangle_operator_preserves_one():
    Kh = biangle_operator(2.0, 0.75, BianglePoint(0.4, -0.3), lambda a, b: np.ones_like(a), npoints=8)
    np.testing.assert_allclose(Kh(np.array([0.2, 0.9]), np.array([0.1, -0.5])), 1.0, atol=1e-13)


def test_biangle_selfadjoint_with_constant():
    h1 = lambda a, b: a**2 - b
    one = lambda a, b: np.ones_like(a)
    rep = biangle_operator_selfadjoint(2.0, 0.75, h1, one, BianglePoint(0.5, 0.3))
    assert rep.passed


def test_biangle_symmetry_and_negative_control():
    y = BianglePoint(0.6, 0.2)
    good = biangle_symmetry_matrix(2.0, 0.75, y, max_degree=3, npoints_outer=8, npoints_inner=8)
    bad = biangle_symmetry_matrix(2.0, 0.75, y, max_degree=3, npoints_outer=8, npoints_inner=8, angle_param=0.75)
    assert good.passed
    assert not bad.passed


@pytest.mark.parametrize("degree", [0, 1, 2])
def test_biangle_preservation(degree):
    assert biangle_preservation(2.0, 0.75, BianglePoint(0.7, -0.4), degree, npoints=10).passed


def test_evaluation_limit_tends_to_h_at_y():
    y = BianglePoint(0.5, 0.3)
    h = lambda a, b: a + 2 * b**2 - b
    _, vals, h_y, h_corner = biangle_evaluation_limit(2.0, 0.75, y, h)
    assert abs(vals[-1] - h_y) < 1e-4
    assert abs(vals[-1] - h_y) < abs(vals[0] - h_y)
    assert abs(h_y - h_corner) > 0.1


def test_random_pairs_interior():
    for px, py in random_biangle_pairs(5, seed=3):
        assert px.x2**2 < px.x1 < 1
    for px, py in random_triangle_pairs(5, seed=3):
        assert 0 < px.x2 < px.x1 < 1


def test_triangle_product_low_degree():
    pairs = random_triangle_pairs(1, seed=0)
    idx = [TriangleIndex(n, k) for n in range(2) for k in range(n + 1)]
    rep = verify_triangle_product(4.0, 1.0, 0.5, idx, pairs, npoints=8)
    assert rep.passed, rep.summary_line()
    assert any("regime" in n for n in rep.notes)


def test_triangle_cap_falls_back_to_qmc():
    pairs = random_triangle_pairs(1, seed=0)
    rep = verify_triangle_product(4.0, 1.0, 0.5, TriangleIndex(1, 0), pairs, npoints=8, cap=1000, log2_points=14)
    assert rep.params["integrator"] == "qmc"
    assert any("fell back" in n for n in rep.notes)
    assert rep.passed


def test_triangle_usage():
    p = random_triangle_pairs(1, seed=0)
    with pytest.raises(UsageError):
        verify_triangle_product(4.0, 1.0, 0.5, TriangleIndex(0, 0), p, integrator="mc")
