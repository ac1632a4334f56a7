import numpy as np
import pytest

from jacobi_markov.errors import ParameterDomainError, UsageError
from jacobi_markov.verify import (
    geometric_basis,
    symmetric_triple_integral,
    symmetrized_form,
    verify_gasper_product,
    verify_gegenbauer,
    verify_geometric_form,
    verify_geometric_pairs,
    verify_koornwinder,
    verify_laplace,
    verify_selfadjoint_symmetrized_form,
)


def test_gegenbauer_small():
    rep = verify_gegenbauer(1.5, 8, np.linspace(-0.9, 0.9, 5), np.linspace(-0.9, 0.9, 5))
    assert rep.passed
    assert rep.max_abs_err < 1e-12
    assert len(rep.rows) == 9 * 25


def test_gegenbauer_chebyshev_closed_form():
    # gamma = 1 gives Chebyshev U_n normalised by n+1
    rep = verify_gegenbauer(1.0, 4, [0.3], [0.0])
    n, a, t, lhs, _ = rep.rows[2]
    assert lhs == pytest.approx((4 * 0.3**2 - 1) / 3 * (-1 / 3))


def test_gegenbauer_gamma_below_half_is_noted():
    rep = verify_gegenbauer(0.3, 6, [0.2, 0.5], [0.1, -0.4])
    assert rep.passed
    assert rep.notes


def test_gegenbauer_domain():
    with pytest.raises(ParameterDomainError):
        verify_gegenbauer(0.0, 3)
    with pytest.raises(UsageError):
        verify_gegenbauer(1.0, 3, [], [0.1])


@pytest.mark.parametrize("ell", [0, 1, 3])
def test_gasper_product(ell):
    rep = verify_gasper_product(2.0, 0.5, ell, 8)
    assert rep.passed, rep.summary_line()


def test_gasper_domain():
    with pytest.raises(ParameterDomainError):
        verify_gasper_product(0.4, 0.5, 0, 4)


def test_gasper_detects_wrong_sequence():
    # the report must fail when the tolerance is below the quadrature floor
    rep = verify_gasper_product(2.0, 0.5, 1, 8, tolerance=0.0)
    assert not rep.passed


@pytest.mark.parametrize("alpha,beta,ell", [(1.5, 0.5, 0), (3.25, 0.75, 2)])
def test_koornwinder(alpha, beta, ell):
    rep = verify_koornwinder(alpha, beta, ell, 10)
    assert rep.passed
    assert rep.checks[0].value <= 1e-10


def test_laplace():
    rep = verify_laplace(0.75, 8)
    assert rep.passed
    assert rep.checks[0].name == "max_imag"


def test_geometric_basis_sizes():
    assert len(geometric_basis(4)[1]) == 4
    labels, funcs = geometric_basis((3, 4))
    assert len(funcs) == 7
    assert labels[0] == "1"


def test_geometric_scalar_second_moment():
    # f = g = t on S^3: both sides equal a E[t^2] = a / 4
    rep = verify_geometric_form(4, 0.5, lambda t: t, lambda t: t, sample_count=200_000, seed=3)
    assert rep.passed
    assert rep.rows[0][2] == pytest.approx(0.5 / 4)


def test_geometric_constant_is_degenerate():
    one = lambda v: np.ones(np.shape(v)[:-1])
    rep = verify_geometric_pairs((3, 4), 0.3, [(one, one)], sample_count=10_000)[0]
    assert rep.passed
    assert any("degenerate" in n for n in rep.notes)


def test_geometric_seed_determinism():
    f = lambda t: t**2
    r1 = verify_geometric_form(4, 0.2, f, f, sample_count=50_000, seed=11)
    r2 = verify_geometric_form(4, 0.2, f, f, sample_count=50_000, seed=11)
    assert r1.rows == r2.rows


def test_geometric_rejects_a():
    with pytest.raises(ParameterDomainError):
        verify_geometric_form(4, 1.0, np.cos, np.cos)


H1 = lambda x: x**3 - 0.5 * x + 0.2
H2 = lambda x: x**2 + 0.3 * x


@pytest.mark.parametrize("ell", [0, 1, 2])
def test_selfadjoint_two_routes(ell):
    rep = verify_selfadjoint_symmetrized_form(2.0, 0.5, ell, 0.6, H1, H2)
    assert rep.passed, rep.to_json()


def test_symmetrized_form_of_constants():
    # q(1, 1) reduces to a^ell times the mass of the s-weight
    q0 = symmetrized_form(2.0, 0.5, 0, 0.4, np.ones_like, np.ones_like)
    q2 = symmetrized_form(2.0, 0.5, 2, 0.4, np.ones_like, np.ones_like)
    assert q0 > 0
    t1 = symmetric_triple_integral(2.0, 0.5, 0, 0.4, np.ones_like, np.ones_like)
    assert t1 == pytest.approx(q0, rel=1e-10)
    assert np.isfinite(q2)


def test_symmetrized_form_mean_of_K_t():
    # q(1, t) is the mu^{(alpha, beta+ell)} mean of K_{a,ell} t, up to the constant in q
    from jacobi_markov.operators import _jacobi_rule, apply_Kal

    alpha, beta, ell, a = 2.0, 0.5, 1, 0.4
    rule = _jacobi_rule(alpha, beta + ell, 32)
    t = rule.nodes[:, 0]
    mean_Kt = rule.weights @ apply_Kal(alpha, beta, ell, a, lambda x: x, t)
    ratio_t = symmetrized_form(alpha, beta, ell, a, np.ones_like, lambda x: x) / mean_Kt
    ratio_t2 = symmetrized_form(alpha, beta, ell, a, np.ones_like, lambda x: x * x) / (
        rule.weights @ apply_Kal(alpha, beta, ell, a, lambda x: x * x, t)
    )
    assert ratio_t == pytest.approx(ratio_t2, rel=1e-12)


def test_selfadjoint_monomials_degree_six():
    mons = [lambda x, k=k: x**k for k in range(7)]
    worst = 0.0
    for i in range(7):
        for j in range(i + 1, 7):
            q12 = symmetrized_form(1.5, 0.5, 0, 0.6, mons[i], mons[j])
            q21 = symmetrized_form(1.5, 0.5, 0, 0.6, mons[j], mons[i])
            worst = max(worst, abs(q12 - q21))
    assert worst <= 1e-9
