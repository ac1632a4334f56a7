import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import betaln

from jacobi_markov.errors import ParameterDomainError, ResourceError, UsageError
from jacobi_markov.orthopoly import JacobiParams, jacobi_norm_constant
from jacobi_markov.quadrature import (
    Axis,
    MarkovSequenceCoefficients,
    ProductMeasure,
    QuadratureRule,
    SphereSampler,
    ball_rule,
    convolve_sequences,
    disk_axes,
    disk_rule,
    gauss_jacobi_rule,
    log_sphere_area,
    nu_exponent,
    sphere_rule,
    tensor_rule,
    ultraspherical_rule,
)


@pytest.mark.parametrize("a,b", [(0.0, 0.0), (2.0, 0.5), (-0.5, -0.5), (0.3, -0.7)])
def test_gauss_jacobi_moments_against_quad(a, b):
    rule = gauss_jacobi_rule(JacobiParams(a, b), 12)
    c = jacobi_norm_constant(a, b)
    for k in range(23):
        exact, _ = quad(lambda x: c * x**k * (1 - x) ** a * (1 + x) ** b, -1, 1, limit=200)
        assert rule.integrate(lambda x: x**k) == pytest.approx(exact, abs=1e-9)


def test_gauss_jacobi_mean_closed_form():
    # E[x] = (b - a) / (a + b + 2)
    rule = gauss_jacobi_rule(JacobiParams(2.0, 0.5), 5)
    assert rule.nodes[:, 0] @ rule.weights == pytest.approx(-1.5 / 4.5)


def test_symmetric_rule_is_exactly_symmetric():
    rule = ultraspherical_rule(1.3, 9)
    x = rule.nodes[:, 0]
    np.testing.assert_array_equal(x, -x[::-1])
    assert abs(rule.nodes[:, 0] ** 3 @ rule.weights) < 1e-16


def test_rule_json_roundtrip():
    rule = disk_rule(2.0, 0.5, 4, 3)
    back = QuadratureRule.from_json(rule.to_json())
    np.testing.assert_array_equal(back.nodes, rule.nodes)
    np.testing.assert_array_equal(back.weights, rule.weights)


def test_disk_rule_against_direct_integral():
    # E[r^2] under m_{alpha,beta}: u = r^2 ~ Beta(beta + 1, alpha - beta)
    al, be = 2.0, 0.5
    rule = disk_rule(al, be, 16, 16)
    assert rule.mass == pytest.approx(1.0)
    r, c = rule.nodes.T
    assert rule.weights @ r**2 == pytest.approx((be + 1) / (al + 1))
    assert rule.weights @ c == pytest.approx(0.0, abs=1e-15)
    assert rule.weights @ c**2 == pytest.approx(1 / (2 * be + 2))


def test_disk_needs_ordered_parameters():
    with pytest.raises(ParameterDomainError):
        disk_axes(0.5, 0.5)


@given(st.floats(-0.8, 3.0), st.floats(-0.8, 3.0), st.floats(0.01, 0.99))
def test_axis_ppf_inverts_cdf(a, b, u):
    ax = Axis(a, b, "half")
    x = float(ax.ppf(u))
    # P(X <= x) for X = (1 + y)/2 with y ~ mu^{a,b} is a Beta(b+1, a+1) cdf
    dens = lambda t: math.exp((b) * math.log(t) + a * math.log1p(-t) - betaln(b + 1, a + 1))
    cdf, _ = quad(dens, 0, x, limit=200)
    assert cdf == pytest.approx(u, abs=1e-6)


def test_tensor_integrate_matches_materialised_rule():
    meas = ProductMeasure((Axis(1.0, 0.5, "sqrt_half"), Axis(0.0, 0.0), Axis(-0.5, -0.5, "half")))
    f = lambda x, y, z: np.exp(x * y) + z**3 * x
    rule = meas.tensor_rule(7)
    direct = rule.integrate(f)
    assert meas.tensor_integrate(f, 7, split=1) == pytest.approx(direct, rel=1e-13)
    assert meas.tensor_integrate(f, 7, split=0) == pytest.approx(direct, rel=1e-13)


def test_qmc_integrate_seeded_and_accurate():
    meas = ProductMeasure((Axis(1.0, 0.5, "half"), Axis(0.0, 0.0)))
    f = lambda x, y: x + y * y
    exact = meas.tensor_integrate(f, 8)
    m1, s1 = meas.qmc_integrate(f, 14, seed=3)
    m2, s2 = meas.qmc_integrate(f, 14, seed=3)
    assert m1 == m2 and s1 == s2
    assert abs(m1 - exact) < 6 * s1 + 1e-12


def test_tensor_cap():
    r = gauss_jacobi_rule(JacobiParams(0, 0), 30)
    with pytest.raises(ResourceError):
        tensor_rule([r, r, r, r, r], cap=10**6)
    with pytest.raises(ResourceError):
        ProductMeasure((Axis(0, 0),) * 5).tensor_integrate(lambda *c: c[0], 30, cap=10**6)
    with pytest.raises(UsageError):
        ProductMeasure((Axis(0, 0),)).qmc_integrate(lambda x: x, 4, seed=0, replicates=1)


def test_sphere_rule_moments():
    rule = sphere_rule(4, 6)
    x = rule.nodes
    np.testing.assert_allclose(np.sum(x * x, axis=1), 1.0)
    assert rule.weights @ x[:, 0] ** 2 == pytest.approx(0.25)
    assert rule.weights @ x[:, 0] ** 4 == pytest.approx(3 / 24)


def test_sphere_sampler_moments_and_seed():
    a = SphereSampler(5, 11).sample(200_000)
    b = SphereSampler(5, 11).sample(200_000)
    np.testing.assert_array_equal(a, b)
    assert np.mean(a[:, 2] ** 2) == pytest.approx(0.2, abs=4e-3)


def test_ball_rule_radial_moment():
    m, kappa = 3, nu_exponent(3, 4)
    rule = ball_rule(m, kappa, 6)
    # |v|^2 ~ Beta(m/2, kappa + 1)
    assert rule.weights @ np.sum(rule.nodes**2, axis=1) == pytest.approx((m / 2) / (m / 2 + kappa + 1))


def test_nu_exponent_and_area():
    assert nu_exponent(3, 4) == 3.5
    assert math.exp(log_sphere_area(3)) == pytest.approx(4 * math.pi)


def test_markov_sequence_coefficients():
    a = MarkovSequenceCoefficients(np.array([1.0, 0.5, -0.2]))
    b = MarkovSequenceCoefficients(np.array([1.0, -0.4, 0.9]))
    np.testing.assert_allclose(convolve_sequences(a, b).lambdas, [1.0, -0.2, -0.18])
    with pytest.raises(ParameterDomainError):
        MarkovSequenceCoefficients(np.array([0.9, 0.1]))
    with pytest.raises(UsageError):
        convolve_sequences(a, MarkovSequenceCoefficients(np.ones(2)))
