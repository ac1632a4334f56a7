import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import dblquad

from jacobi_markov.errors import ParameterDomainError, SingularInputError, UsageError
from jacobi_markov.operators import (
    OperatorKind,
    OperatorSpec,
    RadialFunction,
    apply_ball_op,
    apply_Ka,
    apply_Ka0,
    apply_Kal,
    geometric_params,
    geometric_params_one_fewer,
    kernel_Ka,
    markov_sequence,
    operator_matrix,
    ratio_sequence,
)
from jacobi_markov.orthopoly import JacobiParams, Normalization, jacobi_family, ultraspherical_family
from jacobi_markov.quadrature import gauss_jacobi_rule, ultraspherical_rule
from jacobi_markov.verify import _mc_pairs

T = np.linspace(-0.95, 0.95, 9)


@pytest.mark.parametrize("gamma", [0.6, 1.0, 2.5])
def test_Ka_eigenfunctions(gamma):
    a = 0.35
    spec = OperatorSpec(OperatorKind.ULTRASPHERICAL_KA, a, gamma=gamma)
    fam = ultraspherical_family(gamma, Normalization.VALUE_ONE_AT_ONE)
    for n in range(8):
        got = apply_Ka(spec, lambda x: fam(n, x), T)
        np.testing.assert_allclose(got, fam(n, a) * fam(n, T), atol=1e-13)


@pytest.mark.parametrize("alpha,beta,ell", [(2.0, 0.5, 0), (1.5, 0.5, 2), (3.25, 0.75, 1)])
def test_Kal_eigenfunctions(alpha, beta, ell):
    a = -0.4
    fam = jacobi_family(alpha, beta + ell)
    lam = markov_sequence(OperatorSpec(OperatorKind.GENERALIZED_KAL, a, alpha=alpha, beta=beta, ell=ell), 8).lambdas
    for n in range(8):
        got = apply_Kal(alpha, beta, ell, a, lambda x: fam(n, x), T)
        np.testing.assert_allclose(got, lam[n] * fam(n, T), atol=1e-12)


@given(st.floats(-0.99, 0.99), st.floats(-1.0, 1.0), st.integers(0, 3))
def test_Ka0_markov_properties(a, t, k):
    # preserves 1 and maps non-negative functions to non-negative functions
    assert apply_Ka0(2.0, 0.5, a, lambda x: np.ones_like(x), t) == pytest.approx(1.0)
    assert apply_Ka0(2.0, 0.5, a, lambda x: (x - 0.3) ** (2 * k), t) >= -1e-14


def test_Ka_rule_is_checked():
    spec = OperatorSpec(OperatorKind.ULTRASPHERICAL_KA, 0.3, gamma=1.0)
    with pytest.raises(UsageError):
        apply_Ka(spec, np.cos, 0.2, rule=ultraspherical_rule(2.0, 8))
    assert apply_Ka(spec, np.cos, 0.2, rule=ultraspherical_rule(0.5, 20)) == pytest.approx(apply_Ka(spec, np.cos, 0.2))


def test_Kal_singular_at_minus_one():
    with pytest.raises(SingularInputError):
        apply_Kal(2.0, 0.5, 1, 0.3, np.cos, -1.0)
    # ell = 0 has no singular factor, so the endpoint is the limit from inside
    near = apply_Kal(2.0, 0.5, 0, 0.3, np.cos, -1.0 + 1e-9)
    assert apply_Kal(2.0, 0.5, 0, 0.3, np.cos, -1.0) == pytest.approx(near, abs=1e-6)


def test_kernel_product_normalisation():
    gamma, a, t = 1.5, 0.4, 0.2
    rule = ultraspherical_rule(gamma, 200)
    u = rule.nodes[:, 0]
    mass = rule.weights @ kernel_Ka(gamma, a, t, u, relative_to="product")
    assert mass == pytest.approx(1.0, abs=1e-3)


def test_kernel_lebesgue_total_mass():
    gamma, a = 1.5, 0.4
    val, _ = dblquad(lambda u, t: kernel_Ka(gamma, a, t, u), -1, 1, -1, 1, epsabs=1e-10)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_kernel_reproduces_operator():
    gamma, a, t = 2.0, -0.3, 0.5
    spec = OperatorSpec(OperatorKind.ULTRASPHERICAL_KA, a, gamma=gamma)
    h = lambda x: x**3 - x
    u = np.linspace(-1, 1, 400001)
    ker = kernel_Ka(gamma, a, t, u, relative_to="lebesgue")
    # the Lebesgue kernel divided by the t-density gives K_a h(t)
    from jacobi_markov.orthopoly import ultraspherical_norm_constant

    dens_t = ultraspherical_norm_constant(gamma) * (1 - t * t) ** (gamma - 0.5)
    approx = np.trapezoid(ker * h(u), u) / dens_t
    assert approx == pytest.approx(apply_Ka(spec, h, t), abs=1e-6)


def test_kernel_reference_validation():
    with pytest.raises(UsageError):
        kernel_Ka(1.0, 0.2, 0.1, 0.1, relative_to="other")
    with pytest.raises(ParameterDomainError):
        kernel_Ka(1.0, 1.0, 0.1, 0.1)


def test_geometric_map_values():
    p = geometric_params(3, 4)
    assert (p.alpha, p.beta) == (3.5, 0.5)
    q = geometric_params(2, 3)
    assert (q.alpha, q.beta) == (1.0, 0.0)
    shifted = geometric_params_one_fewer(3, 4)
    assert (shifted.alpha, shifted.beta) == (2.0, 0.5)


def _second_moment_prediction(params, a):
    # E[f(v1) f(v2)] for f = 2|v|^2 - 1 equals mean^2 + lambda_1 var under mu^{alpha,beta}
    rule = gauss_jacobi_rule(params, 4)
    x = rule.nodes[:, 0]
    mean = rule.weights @ x
    var = rule.weights @ (x - mean) ** 2
    lam = markov_sequence(OperatorSpec(OperatorKind.GASPER_KA0, a, alpha=params.alpha, beta=params.beta), 1).lambdas[1]
    return mean**2 + lam * var


def test_geometric_map_against_sphere_monte_carlo():
    a = 0.6
    f = lambda v: 2 * np.sum(v * v, axis=-1) - 1
    mean, err = _mc_pairs((3, 4), a, [(f, f)], 400_000, seed=5)
    good = _second_moment_prediction(geometric_params(3, 4), a)
    bad = _second_moment_prediction(geometric_params_one_fewer(3, 4), a)
    assert abs(mean[0] - good) < 4 * err[0]
    assert abs(mean[0] - bad) > 20 * err[0]


def test_ball_operator_modes_agree():
    m, N, a = 3, 4, 0.5
    f = RadialFunction(lambda x: x**2 + 0.5 * x)
    v = np.array([0.3, -0.2, 0.4])
    exact = apply_ball_op(m, N, a, f, v)
    mc = apply_ball_op(m, N, a, f, v, mode="MonteCarlo", samples=200_000, seed=1)
    assert mc == pytest.approx(exact, abs=5e-3)
    with pytest.raises(UsageError):
        apply_ball_op(m, N, a, lambda w: w[..., 0], v, mode="RadialReduction")


def test_spec_validation():
    with pytest.raises(ParameterDomainError):
        OperatorSpec(OperatorKind.GASPER_KA0, 0.5, alpha=0.4, beta=0.5)
    with pytest.raises(ParameterDomainError):
        OperatorSpec(OperatorKind.ULTRASPHERICAL_KA, 1.5, gamma=1.0)
    with pytest.raises(UsageError):
        OperatorSpec(OperatorKind.GASPER_KA0, 0.5, alpha=2.0, beta=0.5, ell=1)
    with pytest.raises(ParameterDomainError):
        OperatorSpec(OperatorKind.BALL_KA, 0.5, m=1, N=4)


def test_non_markov_sequence_label():
    spec = OperatorSpec(OperatorKind.GENERALIZED_KAL, 0.5, alpha=2.0, beta=0.5, ell=2)
    seq = markov_sequence(spec, 5)
    assert seq.label.startswith("eigenvalue sequence")
    assert seq.lambdas[0] == pytest.approx(0.25)
    assert not spec.is_markov


@pytest.mark.parametrize(
    "spec",
    [
        OperatorSpec(OperatorKind.ULTRASPHERICAL_KA, -0.7, gamma=1.5),
        OperatorSpec(OperatorKind.GASPER_KA0, 0.3, alpha=2.0, beta=0.5),
        OperatorSpec(OperatorKind.GENERALIZED_KAL, 0.8, alpha=1.5, beta=0.5, ell=1),
        OperatorSpec(OperatorKind.BALL_KA, 0.6, m=3, N=4),
    ],
    ids=lambda s: s.kind.value,
)
def test_operator_matrix_diagonal(spec):
    M = operator_matrix(spec, 8)
    lam = markov_sequence(spec, 7).lambdas
    assert M.symmetry_defect < 1e-12
    assert M.off_diagonal_max < 1e-12
    np.testing.assert_allclose(np.diag(M.entries), lam, atol=1e-12)
    assert M.to_csv().startswith("# kind=")


@pytest.mark.parametrize("a", [-1.0, 1.0])
def test_operator_matrix_endpoints_exact(a):
    M = operator_matrix(OperatorSpec(OperatorKind.ULTRASPHERICAL_KA, a, gamma=1.0), 5)
    np.testing.assert_array_equal(np.diag(M.entries), [1, a, 1, a, 1])


def test_ratio_sequence_starts_at_one():
    r = ratio_sequence(JacobiParams(2.0, 0.5), 5, 0.3)
    assert r[0] == 1.0
    assert np.all(np.abs(r) <= 1)


def test_matrix_source_matches_formula():
    spec = OperatorSpec(OperatorKind.GASPER_KA0, 0.45, alpha=3.25, beta=0.75)
    np.testing.assert_allclose(markov_sequence(spec, 6, "Matrix").lambdas, markov_sequence(spec, 6).lambdas, atol=1e-12)
    with pytest.raises(UsageError):
        markov_sequence(spec, 6, "Other")
