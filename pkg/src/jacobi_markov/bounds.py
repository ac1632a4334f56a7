"""Decay bounds for eigenvalue ratios, superlevel-set measures, trace diagnostics and kernel sums."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import betainc

from .errors import ParameterDomainError, UsageError
from .operators import OperatorKind, OperatorSpec, _family, markov_sequence
from .orthopoly import Normalization, jacobi_norm_constant, ultraspherical_norm_constant
from .report import Check, Timer, VerificationReport, build_report, csv_text

__all__ = [
    "BoundResult",
    "KernelSumState",
    "ultraspherical_bound",
    "jacobi_bound",
    "jacobi_bound_constant",
    "ultraspherical_ratio",
    "jacobi_ratio",
    "ultraspherical_bound_table",
    "jacobi_bound_table",
    "c_lambda_measure",
    "ultraspherical_c_lambda",
    "jacobi_c_lambda",
    "trace_class_diagnostic",
    "TraceDiagnostic",
    "triple_sum_kernel",
    "kernel_scan",
    "nem_bound_check",
    "nem_constant",
    "a_zero_anchor",
    "bound_rows_csv",
]

SLACK_TOL = 1e-12


@dataclass(frozen=True)
class BoundResult:
    n: int
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def ok(self) -> bool:
        return self.slack >= -SLACK_TOL


def _open_a(a):
    if not -1 < a < 1:
        raise ParameterDomainError(f"the bound needs -1 < a < 1, got {a}")


def ultraspherical_bound(gamma: float, a: float, n) -> float:
    """2 c_{gamma-1/2} (1-a^2)^(-gamma) (n/2)^(-gamma)."""
    if not gamma > 0:
        raise ParameterDomainError(f"need gamma > 0, got {gamma}")
    _open_a(a)
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ParameterDomainError("bounds are stated for n >= 1")
    out = 2 * ultraspherical_norm_constant(gamma - 0.5) * (1 - a * a) ** (-gamma) * (n / 2) ** (-gamma)
    return float(out) if out.ndim == 0 else out


def jacobi_bound_constant(alpha: float, beta: float, a: float) -> float:
    """K_{alpha,beta}(a) = c_{alpha,beta} pi^-1 2^(2(alpha-beta+2)) (1-a)^-(2alpha-beta+1) (1+a)^-(beta+1/2)."""
    _open_a(a)
    return (
        jacobi_norm_constant(alpha, beta) / math.pi * 2.0 ** (2 * (alpha - beta + 2))
        * (1 - a) ** (-(2 * alpha - beta + 1)) * (1 + a) ** (-(beta + 0.5))
    )


def jacobi_bound(alpha: float, beta: float, ell: int, a: float, n) -> float:
    """Bound on |p_n(a)/p_n(1)| for the (alpha, beta+ell) family; decays like n^-(alpha+1/2)."""
    if not alpha > beta > -0.5:
        raise ParameterDomainError(f"need alpha > beta > -1/2, got ({alpha}, {beta})")
    _open_a(a)
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ParameterDomainError("bounds are stated for n >= 1")
    pref = (1 + math.sqrt((1 - a) / (1 + a))) ** ell * jacobi_bound_constant(alpha, beta, a)
    out = pref * math.gamma(alpha + 1.5) * (n / 2) ** (-(alpha + 0.5))
    return float(out) if out.ndim == 0 else out


def _ratios(alpha, beta, x, nmax):
    fam = _family(float(alpha), float(beta), Normalization.VALUE_ONE_AT_ONE)
    return fam.table(nmax, x)


def ultraspherical_ratio(gamma, a, nmax):
    """|p_n(a)/p_n(1)| for n = 0..nmax."""
    return np.abs(_ratios(gamma - 0.5, gamma - 0.5, a, nmax))


def jacobi_ratio(alpha, beta, ell, a, nmax):
    return np.abs(_ratios(alpha, beta + ell, a, nmax))


def ultraspherical_bound_table(gamma, a, nmax) -> list[BoundResult]:
    lhs = ultraspherical_ratio(gamma, a, nmax)
    n = np.arange(1, nmax + 1)
    rhs = ultraspherical_bound(gamma, a, n)
    return [BoundResult(int(k), float(lhs[k]), float(r)) for k, r in zip(n, rhs)]


def jacobi_bound_table(alpha, beta, ell, a, nmax) -> list[BoundResult]:
    lhs = jacobi_ratio(alpha, beta, ell, a, nmax)
    n = np.arange(1, nmax + 1)
    rhs = jacobi_bound(alpha, beta, ell, a, n)
    return [BoundResult(int(k), float(lhs[k]), float(r)) for k, r in zip(n, rhs)]


def bound_rows_csv(rows: list[BoundResult]) -> str:
    return csv_text(["n", "lhs", "rhs", "slack"], ([r.n, r.lhs, r.rhs, r.slack] for r in rows))


def a_zero_anchor(gamma: float, n_lo: int = 20, n_hi: int = 200):
    """(n, |lambda_2n(0)| n^gamma, median) over n_lo..n_hi.

    At a = 0 there is no phase cancellation and the rescaled values approach
    a positive constant.
    """
    r = ultraspherical_ratio(gamma, 0.0, 2 * n_hi)
    n = np.arange(n_lo, n_hi + 1)
    vals = r[2 * n] * n**gamma
    return n, vals, float(np.median(vals))


# ---------------------------------------------------------------------------
# superlevel-set measures


def ultraspherical_c_lambda(gamma: float, t: float, lam: float) -> tuple[float, float]:
    """(mu^{(gamma-1/2)}{s : (1-t^2)(1-s^2) <= lam}, 2 c_{gamma-1/2} (lam/(1-t^2))^gamma).

    (1 + s)/2 has a Beta(gamma, gamma) law under mu^{(gamma-1/2)}, so the
    measure is a regularised incomplete Beta value.
    """
    if not gamma > 0:
        raise ParameterDomainError(f"need gamma > 0, got {gamma}")
    _open_a(t)
    if not 0 < lam < 1:
        raise ParameterDomainError("lambda must lie in (0, 1)")
    kappa = lam / (1 - t * t)
    if kappa >= 1:
        measured = 1.0
    else:
        s0 = math.sqrt(1 - kappa)
        measured = 2 * float(betainc(gamma, gamma, (1 - s0) / 2))
    bound = 2 * ultraspherical_norm_constant(gamma - 0.5) * kappa**gamma
    return measured, bound


def jacobi_c_lambda(alpha: float, beta: float, a: float, lam: float) -> tuple[float, float]:
    """(m_{alpha,beta}{R^2 > 1 - lam}, K_{alpha,beta}(a) lam^(alpha+1/2)).

    R^2 = A^2 + B^2 u^2 + 2ABu cos(2 theta) with u = r^2, A = (1+a)/2,
    B = (1-a)/2.  For fixed theta the set is where a convex quadratic in u
    exceeds 1 - lam; u has a Beta(beta+1, alpha-beta) law, so the inner
    measure is exact and only the theta integral is numerical.
    """
    if not alpha > beta > -0.5:
        raise ParameterDomainError(f"need alpha > beta > -1/2, got ({alpha}, {beta})")
    _open_a(a)
    if not 0 < lam < 1:
        raise ParameterDomainError("lambda must lie in (0, 1)")
    A, B = (1 + a) / 2, (1 - a) / 2
    cb = ultraspherical_norm_constant(beta)

    def cdf(u):
        return float(betainc(beta + 1, alpha - beta, min(max(u, 0.0), 1.0)))

    def inner(th):
        c2 = math.cos(2 * th)
        disc = A * A * c2 * c2 - A * A + 1 - lam
        if disc < 0:
            return 1.0
        root = math.sqrt(disc)
        lo, hi = (-A * c2 - root) / B, (-A * c2 + root) / B
        return cdf(lo) + 1.0 - cdf(hi)

    x = 1 - lam / (2 * A * B)
    # outside |theta - 0| < theta_max (and its mirror about pi/2) the set is empty
    th_max = math.pi / 2 if x <= -1 else 0.5 * math.acos(x)
    val, _ = quad(lambda th: cb * math.sin(th) ** (2 * beta) * inner(th), 0.0, th_max, limit=400, epsabs=1e-16, epsrel=1e-12)
    return 2 * val, jacobi_bound_constant(alpha, beta, a) * lam ** (alpha + 0.5)


def c_lambda_measure(kind: str, lam: float, **params) -> tuple[float, float]:
    """Dispatch: kind "ultraspherical" (gamma, t) or "jacobi" (alpha, beta, a)."""
    if kind == "ultraspherical":
        return ultraspherical_c_lambda(params["gamma"], params["t"], lam)
    if kind == "jacobi":
        return jacobi_c_lambda(params["alpha"], params["beta"], params["a"], lam)
    raise UsageError(f"unknown C_lambda kind {kind!r}")


# ---------------------------------------------------------------------------
# trace-class diagnostic


@dataclass
class TraceDiagnostic:
    """Partial sums of |lambda_n|^p with a dyadic tail-ratio heuristic (non-conclusive)."""

    p: float
    threshold: float
    checkpoints: np.ndarray
    partial_sums: np.ndarray
    block_sums: np.ndarray
    tail_ratio: float
    looks_convergent: bool
    label: str = "heuristic on finite partial sums; not a proof"


def _abs_power(lam, p):
    a = np.abs(lam)
    if math.isinf(p):
        return (a >= 1 - 1e-15).astype(float)
    with np.errstate(divide="ignore"):
        return np.where(a > 0, a**p, 0.0)


def _threshold(spec: OperatorSpec) -> float:
    if spec.kind is OperatorKind.ULTRASPHERICAL_KA:
        return 1.0 / spec.gamma
    al, _ = spec.jacobi_pair()
    return 1.0 / (al + 0.5)


def trace_class_diagnostic(spec: OperatorSpec, p: float, n_max: int) -> TraceDiagnostic:
    """Partial sums at dyadic checkpoints and the ratio of the last two dyadic block sums.

    Block sums over [2^k, 2^(k+1)) scale like 2^(k(1 - s p)) when
    |lambda_n| ~ n^-s, so a ratio below 1 suggests convergence.
    """
    if not p > 0:
        raise ParameterDomainError("p must be positive")
    if n_max < 4:
        raise UsageError("n_max must be at least 4")
    lam = markov_sequence(spec, n_max, "Formula").lambdas
    terms = _abs_power(lam, p)
    cums = np.cumsum(terms)
    kmax = int(math.floor(math.log2(n_max + 1)))
    checkpoints = np.array([2**k - 1 for k in range(kmax + 1)])
    blocks = np.array([terms[2**k: 2 ** (k + 1)].sum() for k in range(kmax)])
    if blocks.size >= 2 and blocks[-2] > 0:
        ratio = float(blocks[-1] / blocks[-2])
    else:
        ratio = 0.0
    return TraceDiagnostic(
        p=p,
        threshold=_threshold(spec),
        checkpoints=checkpoints,
        partial_sums=cums[checkpoints],
        block_sums=blocks,
        tail_ratio=ratio,
        looks_convergent=ratio < 1.0,
    )


# ---------------------------------------------------------------------------
# triple-product kernel sums


@dataclass
class KernelSumState:
    """Partial sums of sum_n p_n(x) p_n(y) p_n(z) / p_n(1) on a tensor grid."""

    sums: np.ndarray
    n_terms: int
    last_term_magnitude: float
    term_tolerance: float
    converged: bool
    warnings: list = field(default_factory=list)

    @property
    def minimum(self) -> float:
        return float(self.sums.min())

    def argmin(self):
        return np.unravel_index(int(np.argmin(self.sums)), self.sums.shape)


def triple_sum_kernel(
    alpha: float,
    beta: float,
    ell: int,
    x,
    y,
    z,
    n_terms: int | None = None,
    term_tolerance: float = 1e-9,
    block: int = 4096,
    max_terms: int = 2_000_000,
) -> KernelSumState:
    """Partial sums on the tensor grid x by y by z for the (alpha, beta+ell) orthonormal family.

    With ``n_terms`` given, exactly that many terms are summed.  Otherwise
    terms are added in blocks until the largest term over the whole grid in
    the last block drops below ``term_tolerance``; this maximum factorises as
    max|p_n(x)/p_n(1)| * max|p_n(y)| * max|p_n(z)|.
    """
    if not alpha > beta > -0.5 and not (alpha == beta and beta > -0.5):
        raise ParameterDomainError(f"need alpha >= beta > -1/2, got ({alpha}, {beta})")
    xs, ys, zs = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (x, y, z))
    for v in (xs, ys, zs):
        if v.size == 0:
            raise UsageError("empty grid")
        if np.any(np.abs(v) >= 1):
            raise ParameterDomainError("grid points must lie in (-1, 1)")
    warnings = []
    if alpha <= 0.5:
        warnings.append("alpha <= 1/2: convergence of the series is not guaranteed")
    fam = _family(float(alpha), float(beta + ell), Normalization.ORTHONORMAL)
    S = np.zeros((xs.size, ys.size, zs.size))
    last = math.inf
    count = 0
    limit = n_terms if n_terms is not None else max_terms
    pts = np.concatenate([xs, ys, zs, [1.0]])
    for start, tab in fam.iter_blocks(pts, block, limit):
        one = tab[:, -1]
        X = tab[:, : xs.size] / one[:, None]
        Y = tab[:, xs.size: xs.size + ys.size]
        Z = tab[:, xs.size + ys.size: -1]
        S += np.einsum("ni,nj,nk->ijk", X, Y, Z, optimize=True)
        mags = np.abs(X).max(1) * np.abs(Y).max(1) * np.abs(Z).max(1)
        last = float(mags.max())
        count = start + tab.shape[0]
        if n_terms is None and last < term_tolerance:
            break
    converged = last < term_tolerance
    if not converged:
        warnings.append(f"largest term in the final block is {last:.3e} > {term_tolerance:.1e}")
    return KernelSumState(S, count, last, term_tolerance, converged, warnings)


def kernel_scan(alpha, beta, ell, grid, eps: float = 1e-6, **kw):
    """Summed kernel on grid^3 with the positivity (ell = 0) or negativity (ell > 0) outcome.

    Returns (state, record) where record has the minimum, its location,
    and the count of points below -eps.
    """
    grid = np.asarray(grid, dtype=float)
    state = triple_sum_kernel(alpha, beta, ell, grid, grid, grid, **kw)
    i, j, k = state.argmin()
    below = int(np.sum(state.sums < -eps))
    record = {
        "alpha": alpha,
        "beta": beta,
        "ell": ell,
        "minimum": state.minimum,
        "argmin": (float(grid[i]), float(grid[j]), float(grid[k])),
        "points_below_minus_eps": below,
        "eps": eps,
        "n_terms": state.n_terms,
        "last_term_magnitude": state.last_term_magnitude,
        "converged": state.converged,
    }
    if ell > 0:
        record["outcome"] = "negative values found" if below else "none found"
    else:
        record["outcome"] = "nonnegative within eps" if below == 0 else "negative values found"
    return state, record


# ---------------------------------------------------------------------------
# uniform weighted bound on orthonormal polynomials


def nem_constant(alpha: float, beta: float) -> float:
    return 2 * math.e * (2 + math.sqrt(alpha * alpha + beta * beta)) / math.pi


def nem_bound_check(
    alpha: float,
    beta: float,
    n_max: int = 50,
    x_grid=None,
    convention: str = "probability",
) -> VerificationReport:
    """max_x sqrt(1-x^2) w(x) p_n(x)^2 against 2e(2 + sqrt(alpha^2+beta^2))/pi for n <= n_max.

    p_n are orthonormal for the probability measure mu^{alpha,beta}.
    ``convention`` selects w: "probability" uses c_{alpha,beta}(1-x)^alpha(1+x)^beta
    (the density of mu^{alpha,beta}); "lebesgue" drops c_{alpha,beta}.
    The reported error is the largest excess over the constant (0 if none).
    """
    if alpha < -0.5 or beta < -0.5:
        raise ParameterDomainError("need alpha, beta >= -1/2")
    timer = Timer()
    if x_grid is None:
        x_grid = np.linspace(-1, 1, 1001)
    x = np.asarray(x_grid, dtype=float)
    w = (1 - x) ** alpha * (1 + x) ** beta
    if convention == "probability":
        w = jacobi_norm_constant(alpha, beta) * w
    elif convention != "lebesgue":
        raise UsageError(f"unknown weight convention {convention!r}")
    P = _family(float(alpha), float(beta), Normalization.ORTHONORMAL).table(n_max, x)
    vals = (np.sqrt(1 - x * x) * w) * P**2
    lhs = vals.max(axis=1)
    const = nem_constant(alpha, beta)
    excess = np.maximum(lhs - const, 0.0)
    rep = build_report(
        "nem",
        {"alpha": alpha, "beta": beta, "n_max": n_max, "convention": convention},
        f"x[{x.size}] in [{x.min():.3g}, {x.max():.3g}]",
        excess,
        np.zeros_like(excess),
        0.0,
        timer,
        row_header=["n", "max_weighted_square", "constant"],
        rows=[[k, lhs[k], const] for k in range(n_max + 1)],
    )
    rep.checks.append(Check("max_ratio_to_constant", float(lhs.max() / const), 1.0))
    return rep
