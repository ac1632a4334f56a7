"""Numeric checks of the product formulas and eigenvalue identities.

Each verifier compares a closed-form side (polynomial values from the
three-term recurrence) with an integral side (quadrature or Monte Carlo)
and returns a VerificationReport.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import ParameterDomainError, UsageError
from .operators import (
    OperatorKind,
    OperatorSpec,
    _disk,
    _family,
    _jacobi_rule,
    apply_Ka,
    apply_Kal,
    geometric_params,
)
from .orthopoly import (
    Normalization,
    jacobi_norm_constant,
    ultraspherical_family,
    ultraspherical_norm_constant,
)
from .quadrature import SphereSampler, ball_rule, nu_exponent, spawn_seeds
from .report import Check, Timer, VerificationReport, build_report

__all__ = [
    "verify_gegenbauer",
    "verify_gasper_product",
    "verify_koornwinder",
    "verify_laplace",
    "verify_geometric_form",
    "verify_geometric_pairs",
    "geometric_basis",
    "verify_selfadjoint_symmetrized_form",
    "symmetrized_form",
    "symmetric_triple_integral",
    "DEFAULT_GRID",
]

DEFAULT_GRID = np.linspace(-0.9, 0.9, 11)
ULTRASPHERICAL_TOL = 1e-10
JACOBI_TOL = 1e-8
IMAG_TOL = 1e-10


def _grid_text(name, g):
    g = np.asarray(g, dtype=float)
    if g.size == 0:
        raise UsageError(f"empty {name} grid")
    return f"{name}[{g.size}] in [{g.min():.6g}, {g.max():.6g}]"


def verify_gegenbauer(
    gamma: float,
    n_max: int,
    a_grid=DEFAULT_GRID,
    t_grid=DEFAULT_GRID,
    tolerance: float = ULTRASPHERICAL_TOL,
    npoints: int | None = None,
) -> VerificationReport:
    """P_n(a) P_n(t) against the average of P_n(a t + s sqrt(1-a^2) sqrt(1-t^2)) over mu^{(gamma-1/2)}."""
    if not gamma > 0:
        raise ParameterDomainError(f"the identity needs gamma > 0, got {gamma}")
    timer = Timer()
    a_grid = np.asarray(a_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    grid = _grid_text("a", a_grid) + " x " + _grid_text("t", t_grid)
    fam = ultraspherical_family(gamma, Normalization.VALUE_ONE_AT_ONE)
    n = npoints or max(32, n_max + 8)
    Pa = fam.table(n_max, a_grid)  # (n+1, A)
    Pt = fam.table(n_max, t_grid)  # (n+1, T)
    lhs = Pa[:, :, None] * Pt[:, None, :]
    rhs = np.empty_like(lhs)
    h = lambda x: fam.table(n_max, x)  # noqa: E731
    for i, a in enumerate(a_grid):
        spec = OperatorSpec(OperatorKind.ULTRASPHERICAL_KA, float(a), gamma=gamma)
        rhs[:, i, :] = apply_Ka(spec, h, t_grid, npoints=n)
    notes = []
    if gamma <= 0.5:
        notes.append("gamma <= 1/2: extended regime (inner measure exponent gamma - 1 < -1/2)")
    return build_report(
        "gegenbauer",
        {"gamma": gamma, "n_max": n_max},
        grid,
        lhs,
        rhs,
        tolerance,
        timer,
        notes=notes,
        row_header=["n", "a", "t", "lhs", "rhs"],
        rows=_rows(lhs, rhs, a_grid, t_grid),
    )


def _rows(lhs, rhs, a_grid, t_grid):
    out = []
    for k in range(lhs.shape[0]):
        for i, a in enumerate(a_grid):
            for j, t in enumerate(t_grid):
                out.append([k, a, t, lhs[k, i, j], rhs[k, i, j]])
    return out


def _check_jacobi_regime(alpha, beta, ell):
    if not alpha > beta > -0.5:
        raise ParameterDomainError(f"need alpha > beta > -1/2, got ({alpha}, {beta})")
    if int(ell) != ell or ell < 0:
        raise ParameterDomainError(f"ell must be a non-negative integer, got {ell}")


def _t_grid_open_left(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= -1) or np.any(t > 1):
        raise ParameterDomainError("t grid must lie in (-1, 1]")
    return t


def verify_gasper_product(
    alpha: float,
    beta: float,
    ell: int,
    n_max: int,
    a_grid=DEFAULT_GRID,
    t_grid=None,
    tolerance: float = JACOBI_TOL,
    npoints: int | None = None,
) -> VerificationReport:
    """a^ell [p_n(t)/p_n(1)] p_n(2a^2-1) against the disk integral of p_n times the binomial bracket.

    p_n are orthonormal for mu^{(alpha, beta+ell)}.
    """
    _check_jacobi_regime(alpha, beta, ell)
    timer = Timer()
    if t_grid is None:
        t_grid = np.append(DEFAULT_GRID, 1.0)
    t_grid = _t_grid_open_left(t_grid)
    a_grid = np.asarray(a_grid, dtype=float)
    grid = _grid_text("a", a_grid) + " x " + _grid_text("t", t_grid)
    fam = _family(float(alpha), float(beta + ell), Normalization.ORTHONORMAL)
    at_one = np.array([fam.value_at_one(k) for k in range(n_max + 1)])
    pt = fam.table(n_max, t_grid) / at_one[:, None]
    pa = fam.table(n_max, 2 * a_grid**2 - 1)
    lhs = (a_grid**ell * pa)[:, :, None] * pt[:, None, :]
    n = npoints or max(32, n_max + ell + 8)
    rule = _disk(float(alpha), float(beta), n, n)
    h = lambda x: fam.table(n_max, x)  # noqa: E731
    rhs = np.empty_like(lhs)
    for i, a in enumerate(a_grid):
        rhs[:, i, :] = apply_Kal(alpha, beta, ell, float(a), h, t_grid, rule)
    return build_report(
        "gasper",
        {"alpha": alpha, "beta": beta, "ell": ell, "n_max": n_max},
        grid,
        lhs,
        rhs,
        tolerance,
        timer,
        row_header=["n", "a", "t", "lhs", "rhs"],
        rows=_rows(lhs, rhs, a_grid, t_grid),
    )


def koornwinder_integral(alpha, beta, ell, n_max, t_grid, npoints: int | None = None):
    """Complex disk integrals for n = 0..n_max; shape (n_max+1, len(t_grid))."""
    t = np.asarray(t_grid, dtype=float)
    n = npoints or max(32, n_max + ell + 8)
    rule = _disk(float(alpha), float(beta), n, n)
    r, c = rule.nodes[:, 0], rule.nodes[:, 1]
    tt = t[:, None]
    z = ((1 + tt) - (1 - tt) * r * r) / 2 + 1j * np.sqrt(np.maximum(1 - tt * tt, 0.0)) * r * c
    P = ultraspherical_family(beta, Normalization.VALUE_ONE_AT_ONE).table(ell, c)
    if ell:
        q = np.sqrt((1 - tt) / (1 + tt))
        bracket = sum(math.comb(ell, k) * (q * 1j * r) ** k * P[k] for k in range(ell + 1))
    else:
        bracket = np.ones_like(z)
    w = rule.weights * bracket
    out = np.empty((n_max + 1, t.size), dtype=complex)
    zk = np.ones_like(z)
    for k in range(n_max + 1):
        out[k] = np.sum(zk * w, axis=-1)
        zk = zk * z
    return out


def verify_koornwinder(
    alpha: float,
    beta: float,
    ell: int,
    n_max: int,
    t_grid=None,
    tolerance: float = JACOBI_TOL,
    imag_tolerance: float = IMAG_TOL,
    npoints: int | None = None,
) -> VerificationReport:
    """p_n(t)/p_n(1) for (alpha, beta+ell) against the complex-argument disk integral.

    The report passes only if the real parts agree within ``tolerance`` and
    every imaginary part is below ``imag_tolerance``.
    """
    _check_jacobi_regime(alpha, beta, ell)
    timer = Timer()
    if t_grid is None:
        t_grid = np.append(DEFAULT_GRID, 1.0)
    t = _t_grid_open_left(t_grid)
    fam = _family(float(alpha), float(beta + ell), Normalization.VALUE_ONE_AT_ONE)
    lhs = fam.table(n_max, t)
    rhs = koornwinder_integral(alpha, beta, ell, n_max, t, npoints)
    max_imag = float(np.max(np.abs(rhs.imag)))
    rows = [[k, tj, lhs[k, j], rhs[k, j].real, rhs[k, j].imag] for k in range(n_max + 1) for j, tj in enumerate(t)]
    return build_report(
        "koornwinder",
        {"alpha": alpha, "beta": beta, "ell": ell, "n_max": n_max},
        _grid_text("t", t),
        lhs,
        rhs.real,
        tolerance,
        timer,
        checks=[Check("max_imag", max_imag, imag_tolerance)],
        row_header=["n", "t", "lhs", "rhs_real", "rhs_imag"],
        rows=rows,
    )


def verify_laplace(
    beta: float,
    ell_max: int,
    x_grid=None,
    tolerance: float = ULTRASPHERICAL_TOL,
    npoints: int | None = None,
) -> VerificationReport:
    """P_ell^{(beta)}(x) against the integral of (x + sqrt(x^2-1) cos(phi))^ell sin^(2beta-1)(phi).

    With c = cos(phi) the normalised angular measure is mu^{(beta-1/2)}; the
    square root is taken in complex arithmetic so |x| < 1 is allowed.
    """
    if not beta > 0:
        raise ParameterDomainError(f"the integral representation needs beta > 0, got {beta}")
    timer = Timer()
    if x_grid is None:
        x_grid = np.linspace(-0.95, 0.95, 39)
    x = np.asarray(x_grid, dtype=float)
    fam = ultraspherical_family(beta, Normalization.VALUE_ONE_AT_ONE)
    lhs = fam.table(ell_max, x)
    rule = _jacobi_rule(beta - 1.0, beta - 1.0, npoints or max(32, ell_max + 4))
    c = rule.nodes[:, 0]
    root = np.sqrt((x * x - 1).astype(complex))[:, None]
    base = x[:, None] + root * c
    rhs = np.empty((ell_max + 1, x.size), dtype=complex)
    pk = np.ones_like(base)
    for k in range(ell_max + 1):
        rhs[k] = pk @ rule.weights
        pk = pk * base
    max_imag = float(np.max(np.abs(rhs.imag)))
    return build_report(
        "laplace",
        {"beta": beta, "ell_max": ell_max},
        _grid_text("x", x),
        lhs,
        rhs.real,
        tolerance,
        timer,
        checks=[Check("max_imag", max_imag, IMAG_TOL)],
    )


# ---------------------------------------------------------------------------
# geometric (sphere) forms


def _sphere_chunks(d, samples, seed, chunks):
    sizes = [samples // chunks + (1 if i < samples % chunks else 0) for i in range(chunks)]
    for seq, k in zip(spawn_seeds(seed, chunks), sizes):
        yield SphereSampler(d, seq).sample(k)


def _mc_pairs(dims, a, pairs, samples, seed, chunks=16):
    """Monte Carlo means and standard errors of f([x]u1) g([x]u2) for each pair."""
    m, N = dims
    b = math.sqrt(1 - a * a)
    sums = np.zeros(len(pairs))
    sq = np.zeros(len(pairs))
    for x in _sphere_chunks(m * N, samples, seed, chunks):
        X = x.reshape(-1, m, N)
        v1 = X[:, :, 0]
        v2 = a * X[:, :, 0] + b * X[:, :, 1]
        if m == 1:
            v1, v2 = v1[:, 0], v2[:, 0]
        for i, (f, g) in enumerate(pairs):
            val = np.asarray(f(v1), dtype=float) * np.asarray(g(v2), dtype=float)
            sums[i] += val.sum()
            sq[i] += (val * val).sum()
    mean = sums / samples
    var = np.maximum(sq / samples - mean * mean, 0.0)
    return mean, np.sqrt(var / (samples - 1))


def _quadrature_form_scalar(N, a, f, g, n=48):
    gamma = (N - 2) / 2.0
    spec = OperatorSpec(OperatorKind.ULTRASPHERICAL_KA, a, gamma=gamma)
    outer = _jacobi_rule(gamma - 0.5, gamma - 0.5, n)
    t = outer.nodes[:, 0]
    return float(np.sum(outer.weights * np.asarray(f(t)) * apply_Ka(spec, g, t, npoints=n)))


def _ball_operator_at_nodes(m, N, a, g, n=8):
    """(outer rule for nu_{m,N}, K_a g at its nodes) with deterministic ball rules.

    The integrand is polynomial in y after odd powers of sqrt(1-|v|^2) cancel,
    so n nodes per axis are exact for total degree below 2n.
    """
    b = math.sqrt(1 - a * a)
    outer = ball_rule(m, nu_exponent(m, N), n)
    inner = ball_rule(m, nu_exponent(m, N - 1), n)
    scale = b * np.sqrt(np.maximum(0.0, 1 - np.sum(outer.nodes**2, axis=1)))
    w = a * outer.nodes[:, None, :] + scale[:, None, None] * inner.nodes[None, :, :]
    return outer, np.asarray(g(w), dtype=float) @ inner.weights


def _quadrature_form_ball(m, N, a, f, g, n=8, cache=None):
    """<f, K_a g> in L^2(nu_{m,N})."""
    key = id(g)
    if cache is not None and key in cache:
        outer, kg = cache[key]
    else:
        outer, kg = _ball_operator_at_nodes(m, N, a, g, n)
        if cache is not None:
            cache[key] = (outer, kg)
    return float(np.sum(outer.weights * np.asarray(f(outer.nodes), dtype=float) * kg))


def _parse_dims(spec):
    if np.isscalar(spec):
        N = int(spec)
        if N < 2:
            raise ParameterDomainError("the scalar sphere form needs N > 1")
        return 1, N
    m, N = spec
    if not (m > 1 and N > 2):
        raise ParameterDomainError(f"the ball form needs m > 1 and N > 2, got ({m}, {N})")
    return int(m), int(N)


def geometric_basis(spec, degree: int = 3):
    """(labels, functions) of polynomial test functions of total degree <= ``degree``.

    For N: powers t^k of the scalar x.u.  For (m, N): powers v1^k of the
    first coordinate together with v_m, |v|^2 and v1 v2 (degree permitting).
    """
    m, _ = _parse_dims(spec)
    if degree < 0:
        raise UsageError("degree must be non-negative")
    if m == 1:
        labels = [f"t^{k}" for k in range(degree + 1)]
        funcs = [lambda t, k=k: np.asarray(t, dtype=float) ** k for k in range(degree + 1)]
        return labels, funcs
    labels = ["1"] + [f"v1^{k}" for k in range(1, degree + 1)]
    funcs = [lambda v: np.ones(np.shape(v)[:-1])] + [lambda v, k=k: v[..., 0] ** k for k in range(1, degree + 1)]
    if degree >= 1:
        labels.append(f"v{m}")
        funcs.append(lambda v: v[..., -1])
    if degree >= 2:
        labels += ["|v|^2", "v1*v2"]
        funcs += [lambda v: np.sum(v * v, axis=-1), lambda v: v[..., 0] * v[..., 1]]
    return labels, funcs


def verify_geometric_pairs(
    spec,
    a: float,
    pairs: Sequence[tuple[Callable, Callable]],
    sample_count: int = 10**6,
    seed: int = 0,
    sigmas: float = 4.0,
    labels: Sequence[str] | None = None,
) -> list[VerificationReport]:
    """Sphere Monte Carlo against quadrature of <f, K g>, sharing one sample stream.

    ``spec`` is N (functions of x.u on S^{N-1}) or (m, N) (functions of
    [x]u in the unit ball of R^m, x uniform on S^{mN-1}).
    """
    if not -1 < a < 1:
        raise ParameterDomainError("a must lie in (-1, 1)")
    timer = Timer()
    m, N = _parse_dims(spec)
    mean, err = _mc_pairs((m, N), a, pairs, sample_count, seed)
    reports = []
    cache = {}
    for i, (f, g) in enumerate(pairs):
        if m == 1:
            exact = _quadrature_form_scalar(N, a, f, g)
        else:
            exact = _quadrature_form_ball(m, N, a, f, g, cache=cache)
        tol = sigmas * err[i]
        notes = []
        if err[i] < 1e-14:
            tol = 1e-12
            notes.append("degenerate Monte Carlo variance: tolerance widened to 1e-12 absolute")
        params = {"m": m, "N": N, "a": a, "samples": sample_count, "seed": seed}
        if labels is not None:
            params["pair"] = labels[i]
        if m > 1:
            p = geometric_params(m, N)
            params.update(alpha=p.alpha, beta=p.beta)
        else:
            params["gamma"] = (N - 2) / 2.0
        rep = build_report("geometric", params, f"{sample_count} sphere samples", [mean[i]], [exact], tol, timer, notes=notes)
        rep.rows = [[mean[i], err[i], exact]]
        rep.row_header = ["monte_carlo", "std_error", "quadrature"]
        reports.append(rep)
    return reports


def verify_geometric_form(spec, a, f, g, sample_count=10**6, seed=0) -> VerificationReport:
    """Single-pair version of verify_geometric_pairs."""
    return verify_geometric_pairs(spec, a, [(f, g)], sample_count, seed)[0]


# ---------------------------------------------------------------------------
# self-adjointness of K_{a,ell}


def symmetrized_form(alpha, beta, ell, a, h1, h2, npoints: int = 48) -> float:
    """q(h1, h2) = 2 c_{alpha,beta} int_0^1 h1(2s^2-1) (K_{a,ell} h2)(2s^2-1) (1-s^2)^alpha s^(2beta+2ell+1) ds.

    With t = 2s^2 - 1 the s-weight becomes a multiple of mu^{(alpha, beta+ell)}.
    """
    _check_jacobi_regime(alpha, beta, ell)
    outer = _jacobi_rule(float(alpha), float(beta + ell), npoints)
    t = outer.nodes[:, 0]
    kh = apply_Kal(alpha, beta, ell, a, h2, t, _disk(float(alpha), float(beta), npoints, npoints))
    const = jacobi_norm_constant(alpha, beta) / jacobi_norm_constant(alpha, beta + ell) * 2.0 ** (-(alpha + beta + ell + 1))
    return const * float(np.sum(outer.weights * np.asarray(h1(t)) * kh))


def _disk_constant(alpha, beta):
    """Normalisation of dm_{alpha,beta} in (r, theta)."""
    return 2 * math.exp(gammaln(alpha + 1) - gammaln(beta + 0.5) - gammaln(alpha - beta)) / math.sqrt(math.pi)


def symmetric_triple_integral(alpha, beta, ell, a, h1, h2, npoints: int = 48) -> float:
    """The manifestly symmetric triple-integral form of q(h1, h2).

    Integrand over (s, rho, phi):
        h1(2s^2-1) h2(2rho^2-1) (b^2 - s^2 - rho^2 + 2 a rho s cos(phi))_+^(alpha-beta-1)
        P_ell(cos phi) rho^(2beta+ell+1) s^(2beta+ell+1) sin^(2beta)(phi),
    times 2 c_{alpha,beta} b^(-2alpha) and the normalising constant of
    dm_{alpha,beta}.  It is evaluated in coordinates s = R cos(psi),
    rho = R sin(psi): for fixed (psi, phi) the positive part is
    (1 - a sin(2psi) cos(phi)) (R_max^2 - R^2), so the R-integral is an exact
    Gauss-Jacobi rule in R^2.
    """
    _check_jacobi_regime(alpha, beta, ell)
    if not -1 < a < 1:
        raise ParameterDomainError("a must lie in (-1, 1)")
    b2 = 1 - a * a
    c = alpha - beta - 1
    p = 2 * beta + ell + 1
    rx = _jacobi_rule(float(c), float(p), npoints)
    rz = _jacobi_rule((p - 1) / 2.0, (p - 1) / 2.0, npoints)
    ry = _jacobi_rule(beta - 0.5, beta - 0.5, npoints)
    x = rx.nodes[:, 0]
    z = rz.nodes[:, 0][:, None, None]
    y = ry.nodes[:, 0][None, :, None]
    sigma = np.sqrt(1 - z * z)
    d = 1 - a * sigma * y
    xm = b2 / d
    X = xm * (1 + x) / 2
    inner = np.asarray(h1(X * (1 + z) - 1)) * np.asarray(h2(X * (1 - z) - 1))
    inner = inner @ rx.weights
    Pl = ultraspherical_family(beta, Normalization.VALUE_ONE_AT_ONE).table(ell, y[..., 0])[ell]
    F = d[..., 0] ** c * Pl * xm[..., 0] ** (p + c + 1) * inner
    val = rz.weights @ F @ ry.weights
    const = (
        2 * jacobi_norm_constant(alpha, beta) * _disk_constant(alpha, beta) * b2 ** (-alpha)
        * 2.0 ** (-p - 1) / ultraspherical_norm_constant(p / 2.0)
        / ultraspherical_norm_constant(beta)
        * 0.5 * 2.0 ** (-(p + c + 1)) / jacobi_norm_constant(c, p)
    )
    return const * float(val)


def verify_selfadjoint_symmetrized_form(
    alpha: float,
    beta: float,
    ell: int,
    a: float,
    h1: Callable,
    h2: Callable,
    tolerance: float = 1e-9,
    triple_tolerance: float = 1e-8,
    npoints: int = 48,
) -> VerificationReport:
    """|q(h1,h2) - q(h2,h1)| from two independent quadratures, plus agreement with the triple integral."""
    timer = Timer()
    q12 = symmetrized_form(alpha, beta, ell, a, h1, h2, npoints)
    q21 = symmetrized_form(alpha, beta, ell, a, h2, h1, npoints)
    q3 = symmetric_triple_integral(alpha, beta, ell, a, h1, h2, 2 * npoints)
    dev = max(abs(q12 - q3), abs(q21 - q3))
    rep = build_report(
        "selfadjoint",
        {"alpha": alpha, "beta": beta, "ell": ell, "a": a},
        "two orderings + symmetric triple integral",
        [q12],
        [q21],
        tolerance,
        timer,
        checks=[Check("triple_integral_deviation", dev, triple_tolerance)],
        row_header=["q12", "q21", "triple"],
        rows=[[q12, q21, q3]],
    )
    return rep
