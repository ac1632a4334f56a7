"""Orthogonal polynomials on the parabolic biangle and the triangle.

Parabolic biangle B = {0 <= x2^2 <= x1 <= 1} with weight
(1 - x1)^alpha (x1 - x2^2)^(beta - 1/2):

    r_{n,m}(x1, x2) = x1^(n/2) p_m^{(alpha, beta+n)}(2 x1 - 1) p_n^{(beta)}(x2 / sqrt(x1)).

Triangle T = {0 <= x2 <= x1 <= 1} with weight (1 - x1)^alpha (x1 - x2)^beta x2^gamma:

    R_{n,k}(x1, x2) = R_{n-k}^{(alpha, beta+gamma+2k+1)}(2 x1 - 1) x1^k R_k^{(beta, gamma)}(2 x2 / x1 - 1)

with value-one-at-one Jacobi factors, so R_{n,k}(1, 1) = 1.

Both families have product formulas whose right-hand sides integrate the
polynomial at a point built from the helpers D, E, C, G (biangle) and
E, C, H (triangle) against a product of disk and interval measures.  The
polar coordinates x1 = rho^2, x2 = rho s turn the biangle inner product into
a product measure on (rho, s), which is how every quadrature here is built.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParameterDomainError, SingularInputError, UsageError
from .orthopoly import JacobiParams, Normalization, PolynomialFamily
from .quadrature import Axis, ProductMeasure, disk_axes
from .report import Check, Timer, VerificationReport, build_report

__all__ = [
    "BianglePoint",
    "BiangleIndex",
    "TriangleIndex",
    "TrianglePoint",
    "helper_D",
    "helper_E",
    "helper_C",
    "helper_G",
    "helper_H",
    "biangle_poly",
    "biangle_values",
    "biangle_measure",
    "biangle_product_measure",
    "biangle_inner",
    "biangle_operator",
    "biangle_indices",
    "verify_biangle_product",
    "biangle_operator_selfadjoint",
    "biangle_symmetry_matrix",
    "biangle_monomials",
    "biangle_preservation",
    "biangle_evaluation_limit",
    "triangle_poly",
    "triangle_values",
    "triangle_measure",
    "triangle_product_measure",
    "triangle_inner",
    "verify_triangle_product",
    "random_biangle_pairs",
    "random_triangle_pairs",
]

# slack allowed for rounding when checking region membership
_EDGE = 1e-12

BIANGLE_TOLERANCE = 1e-6
SELFADJOINT_TOLERANCE = 1e-7
PRESERVATION_TOLERANCE = 1e-8
TRIANGLE_TOLERANCE = 1e-5
TRIANGLE_QMC_SIGMAS = 5.0
# the triangle tensor rule is streamed, never stored, so its cap counts evaluations
TRIANGLE_TENSOR_CAP = 10**8


@dataclass(frozen=True)
class BianglePoint:
    """A point of the parabolic biangle 0 <= x2^2 <= x1 <= 1."""

    x1: float
    x2: float

    def __post_init__(self):
        x1, x2 = float(self.x1), float(self.x2)
        if not (math.isfinite(x1) and math.isfinite(x2)):
            raise ParameterDomainError(f"non-finite biangle point ({x1}, {x2})")
        if x1 > 1.0 + _EDGE or x2 * x2 > x1 + _EDGE:
            raise ParameterDomainError(f"({x1}, {x2}) lies outside the biangle 0 <= x2^2 <= x1 <= 1")


@dataclass(frozen=True)
class TrianglePoint:
    """A point of the triangle 0 <= x2 <= x1 <= 1."""

    x1: float
    x2: float

    def __post_init__(self):
        x1, x2 = float(self.x1), float(self.x2)
        if not (math.isfinite(x1) and math.isfinite(x2)):
            raise ParameterDomainError(f"non-finite triangle point ({x1}, {x2})")
        if x2 < -_EDGE or x2 > x1 + _EDGE or x1 > 1.0 + _EDGE:
            raise ParameterDomainError(f"({x1}, {x2}) lies outside the triangle 0 <= x2 <= x1 <= 1")


@dataclass(frozen=True)
class BiangleIndex:
    n: int
    m: int

    def __post_init__(self):
        if int(self.n) != self.n or int(self.m) != self.m or self.n < 0 or self.m < 0:
            raise UsageError(f"biangle index needs integers n, m >= 0, got ({self.n}, {self.m})")

    @property
    def degree(self) -> int:
        return self.n + self.m


@dataclass(frozen=True)
class TriangleIndex:
    n: int
    k: int

    def __post_init__(self):
        if int(self.n) != self.n or int(self.k) != self.k or not (0 <= self.k <= self.n):
            raise UsageError(f"triangle index needs integers 0 <= k <= n, got ({self.n}, {self.k})")


# ---------------------------------------------------------------- helpers


def _unit(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + _EDGE) or not np.all(np.isfinite(x)):
        raise ParameterDomainError(f"{name} must lie in [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def _co(x):
    return np.sqrt(np.maximum(1.0 - x * x, 0.0))


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def helper_D(a, b, r, t):
    """D(a, b; r, t) = ab + (1 - a^2)^(1/2) (1 - b^2)^(1/2) r t."""
    a, b = _unit(a, "a"), _unit(b, "b")
    return _out(a * b + _co(a) * _co(b) * np.asarray(r, dtype=float) * np.asarray(t, dtype=float))


def helper_E(x1, y1, r, t):
    """E(x1, y1; r, t), the length whose square is the first new coordinate."""
    x1, y1 = _unit(x1, "x1"), _unit(y1, "y1")
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    sq = x1 * x1 * y1 * y1 + (1 - x1 * x1) * (1 - y1 * y1) * r * r + 2 * x1 * y1 * _co(x1) * _co(y1) * r * t
    return _out(np.sqrt(np.maximum(sq, 0.0)))


def _C_from(D, E):
    E = np.asarray(E, dtype=float)
    if np.any(E == 0.0):
        raise SingularInputError("E = 0 (x1*y1 = 0 together with r = 0); C = D/E is undefined there")
    return np.clip(D / E, -1.0, 1.0)


def helper_C(x1, y1, r, t):
    """C = D(x1, y1; r, t) / E(x1, y1; r, t), a cosine in [-1, 1]."""
    return _out(_C_from(helper_D(x1, y1, r, t), helper_E(x1, y1, r, t)))


def helper_G(x1, x2, y1, y2, r, t1, t2, t3):
    """G = D(C, D(x2/x1, y2/y1; 1, t2); 1, t3) for the biangle product formula.

    (x1, x2) and (y1, y2) are square-root coordinates: (x1^2, x2) lies in B.
    """
    x1, y1 = _unit(x1, "x1"), _unit(y1, "y1")
    if np.any(x1 == 0.0) or np.any(y1 == 0.0):
        raise SingularInputError("G needs x1, y1 > 0 (x2/x1 and y2/y1 are ratios)")
    C = helper_C(x1, y1, r, t1)
    inner = helper_D(np.asarray(x2) / x1, np.asarray(y2) / y1, 1.0, t2)
    return _out(np.clip(helper_D(C, inner, 1.0, t3), -1.0, 1.0))


def helper_H(x1, x2, y1, y2, r1, t1, r2, r3, t2, r4, t3):
    """H = E(((1 - r2) C^2 + r2)^(1/2), E(x2/x1, y2/y1; r3, t2); r4, t3) for the triangle.

    (x1, x2) and (y1, y2) are square-root coordinates: (x1^2, x2^2) lies in T.
    """
    x1, y1 = _unit(x1, "x1"), _unit(y1, "y1")
    if np.any(x1 == 0.0) or np.any(y1 == 0.0):
        raise SingularInputError("H needs x1, y1 > 0 (x2/x1 and y2/y1 are ratios)")
    C = np.asarray(helper_C(x1, y1, r1, t1))
    r2 = np.asarray(r2, dtype=float)
    c_mix = np.sqrt(np.clip((1 - r2) * C * C + r2, 0.0, 1.0))
    Z = helper_E(np.asarray(x2) / x1, np.asarray(y2) / y1, r3, t2)
    return _out(np.clip(helper_E(c_mix, Z, r4, t3), 0.0, 1.0))


# ---------------------------------------------------------------- biangle polynomials


@functools.lru_cache(maxsize=None)
def _jacobi(alpha, beta, norm):
    return PolynomialFamily(JacobiParams(alpha, beta), Normalization(norm), max_degree=32)


def _biangle_factors(alpha, beta, idx: BiangleIndex, rho, s, normalization):
    """r_{n,m}(rho^2, rho s) = rho^n p_m^{(alpha,beta+n)}(2 rho^2 - 1) p_n^{(beta)}(s)."""
    norm = Normalization(normalization).value
    radial = _jacobi(float(alpha), float(beta) + idx.n, norm).table(idx.m, 2 * rho * rho - 1)[idx.m]
    angular = _jacobi(float(beta) - 0.5, float(beta) - 0.5, norm).table(idx.n, s)[idx.n]
    out = rho**idx.n * radial * angular
    if norm == Normalization.ORTHONORMAL.value and idx.n:
        # rho^2 ~ Beta(beta+1, alpha+1), so rho^(2n) has mean (beta+1)_n / (alpha+beta+2)_n
        log_mass = (
            math.lgamma(beta + 1 + idx.n) - math.lgamma(beta + 1)
            - math.lgamma(alpha + beta + 2 + idx.n) + math.lgamma(alpha + beta + 2)
        )
        out = out * math.exp(-0.5 * log_mass)
    return out


def _check_biangle_params(alpha, beta):
    if not (alpha > -1 and beta > -0.5):
        raise ParameterDomainError(f"biangle weight needs alpha > -1, beta > -1/2, got ({alpha}, {beta})")


def biangle_values(alpha, beta, idx: BiangleIndex, x1, x2, normalization=Normalization.ORTHONORMAL):
    """Vectorised r_{n,m}(x1, x2); raises ParameterDomainError outside B.

    At x1 = 0 (hence x2 = 0) the continuous extension is used: 0 for n >= 1
    and p_m^{(alpha,beta)}(-1) p_0 for n = 0.
    """
    _check_biangle_params(alpha, beta)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if (
        not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2)))
        or np.any(x1 > 1 + _EDGE)
        or np.any(x2 * x2 > x1 + _EDGE)
    ):
        raise ParameterDomainError("point outside the biangle 0 <= x2^2 <= x1 <= 1")
    rho = np.sqrt(np.clip(x1, 0.0, 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(rho > 0, x2 / np.where(rho > 0, rho, 1.0), 0.0)
    return _out(_biangle_factors(alpha, beta, idx, rho, np.clip(s, -1.0, 1.0), normalization))


def biangle_poly(alpha, beta, idx: BiangleIndex, p: BianglePoint, normalization=Normalization.ORTHONORMAL) -> float:
    """r_{n,m}^{alpha,beta} at a point of B; total degree n + m."""
    return float(biangle_values(alpha, beta, idx, p.x1, p.x2, normalization))


def biangle_indices(max_degree: int):
    return [BiangleIndex(n, d - n) for d in range(max_degree + 1) for n in range(d + 1)]


def biangle_measure(alpha, beta) -> ProductMeasure:
    """Biangle weight as a probability measure on (rho, s) with x1 = rho^2, x2 = rho s."""
    _check_biangle_params(alpha, beta)
    return ProductMeasure((Axis(alpha, beta, "sqrt_half", "rho"), Axis(beta - 0.5, beta - 0.5, "identity", "s")))


def biangle_inner(alpha, beta, f: Callable, g: Callable, npoints: int = 24) -> float:
    """(f, g) for the normalised biangle weight; f, g take (x1, x2) arrays."""

    def integrand(rho, s):
        x1, x2 = rho * rho, rho * s
        return f(x1, x2) * g(x1, x2)

    return float(biangle_measure(alpha, beta).tensor_integrate(integrand, npoints))


def biangle_product_measure(alpha, beta, angle_param: float | None = None) -> ProductMeasure:
    """dm_{alpha,beta}(r, t1) x dmu(t2) x dmu(t3) on (r, t1, t2, t3).

    The t2, t3 factors are ultraspherical with parameter ``angle_param``;
    the default beta - 1/2 (weight (1 - t^2)^(beta - 1)) is the product
    measure of the family p_n^{(beta)}.  Needs alpha > beta > 0.
    """
    g = beta - 0.5 if angle_param is None else float(angle_param)
    if not (alpha > beta > -0.5) or g <= -0.5:
        raise ParameterDomainError(
            f"biangle product measure needs alpha > beta and angle parameter > -1/2, got ({alpha}, {beta}, {g})"
        )
    r_ax, t_ax = disk_axes(alpha, beta)
    ang = Axis(g - 0.5, g - 0.5, "identity", "t")
    return ProductMeasure((r_ax, t_ax, ang, ang))


def _biangle_image(x1, x2, y1, y2, r, t1, t2, t3):
    """(E, G) in square-root coordinates, broadcast over the integration nodes."""
    D1 = x1 * y1 + _co(x1) * _co(y1) * r * t1
    E = np.sqrt(np.maximum(x1 * x1 * y1 * y1 + (1 - x1 * x1) * (1 - y1 * y1) * r * r + 2 * x1 * y1 * _co(x1) * _co(y1) * r * t1, 0.0))
    C = np.clip(D1 / E, -1.0, 1.0)
    u, v = np.clip(x2 / x1, -1, 1), np.clip(y2 / y1, -1, 1)
    inner = np.clip(u * v + _co(u) * _co(v) * t2, -1.0, 1.0)
    G = np.clip(C * inner + _co(C) * _co(inner) * t3, -1.0, 1.0)
    return E, G


def _sqrt_coords(p: BianglePoint):
    x1 = math.sqrt(max(p.x1, 0.0))
    if x1 == 0.0:
        raise SingularInputError("the product formula needs x1 > 0")
    return x1, p.x2


def biangle_operator(alpha, beta, pt_y: BianglePoint, h: Callable, npoints: int = 24, angle_param=None):
    """(K_y h)(x1, x2) = integral of h(E^2, E G) against the product measure.

    Returns a vectorised callable of biangle coordinates (x1, x2).  The
    operator acts on (x1, x2) through the square-root coordinate sqrt(x1).
    """
    y1, y2 = _sqrt_coords(pt_y)
    meas = biangle_product_measure(alpha, beta, angle_param)
    r, t1, t2, t3 = _nodes4(meas, npoints)
    w = _weights4(meas, npoints)

    def Kh(x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        shape = np.broadcast(x1, x2).shape
        sx = np.sqrt(np.clip(np.broadcast_to(x1, shape).ravel(), 0.0, 1.0))
        # x1 = 0 forces x2 = 0; any positive stand-in gives the same image there
        sx = np.maximum(sx, 1e-300)
        xs = np.broadcast_to(x2, shape).ravel()
        out = np.empty(sx.size)
        step = max(1, 2_000_000 // w.size)
        for lo in range(0, sx.size, step):
            a = sx[lo : lo + step, None]
            b = xs[lo : lo + step, None]
            E, G = _biangle_image(a, b, y1, y2, r, t1, t2, t3)
            out[lo : lo + step] = h(E * E, E * G) @ w
        return _out(out.reshape(shape))

    return Kh


@functools.lru_cache(maxsize=64)
def _tensor_cached(meas: ProductMeasure, npoints: int):
    rule = meas.tensor_rule(npoints)
    return tuple(rule.nodes[:, i].copy() for i in range(rule.dimension)), rule.weights


def _nodes4(meas, npoints):
    return _tensor_cached(meas, npoints)[0]


def _weights4(meas, npoints):
    return _tensor_cached(meas, npoints)[1]


def random_biangle_pairs(count: int, seed: int, margin: float = 0.05):
    """Seeded interior point pairs of B, away from the boundary by ``margin``."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < 2 * count:
        x1 = rng.uniform(margin, 1 - margin)
        lim = (1 - margin) * math.sqrt(x1)
        pts.append(BianglePoint(x1, rng.uniform(-lim, lim)))
    return list(zip(pts[0::2], pts[1::2]))


def verify_biangle_product(
    alpha,
    beta,
    idx: BiangleIndex | list,
    pt_x: BianglePoint | list,
    pt_y: BianglePoint | list | None = None,
    npoints: int = 24,
    tolerance: float = BIANGLE_TOLERANCE,
    angle_param: float | None = None,
) -> VerificationReport:
    """r(x1^2, x2) r(y1^2, y2) / r(1, 1) against the product-measure integral of r(E^2, E G).

    The points are given in biangle coordinates, so pt_x = (x1^2, x2).  Lists
    of indices and of point pairs are checked together in one report.
    """
    timer = Timer()
    indices = idx if isinstance(idx, (list, tuple)) else [idx]
    if isinstance(pt_x, (list, tuple)):
        pairs = list(pt_x) if pt_y is None else list(zip(pt_x, pt_y))
    else:
        pairs = [(pt_x, pt_y)]
    meas = biangle_product_measure(alpha, beta, angle_param)
    r, t1, t2, t3 = _nodes4(meas, npoints)
    w = _weights4(meas, npoints)
    corner = {i: float(_biangle_factors(alpha, beta, i, np.array(1.0), np.array(1.0), "value_one_at_one")) for i in indices}
    lhs, rhs, rows = [], [], []
    for px, py in pairs:
        x1, x2 = _sqrt_coords(px)
        y1, y2 = _sqrt_coords(py)
        E, G = _biangle_image(x1, x2, y1, y2, r, t1, t2, t3)
        for i in indices:
            vx = float(biangle_values(alpha, beta, i, px.x1, px.x2, "value_one_at_one"))
            vy = float(biangle_values(alpha, beta, i, py.x1, py.x2, "value_one_at_one"))
            left = vx * vy / corner[i]
            right = float(np.dot(w, _biangle_factors(alpha, beta, i, E, G, "value_one_at_one")))
            lhs.append(left)
            rhs.append(right)
            rows.append([i.n, i.m, px.x1, px.x2, py.x1, py.x2, left, right, abs(left - right)])
    params = {"alpha": alpha, "beta": beta, "max_degree": max(i.degree for i in indices)}
    if angle_param is not None:
        params["angle_param"] = angle_param
    return build_report(
        "biangle_product",
        params,
        f"{len(pairs)} pairs x {len(indices)} indices, {npoints}^4 tensor",
        lhs,
        rhs,
        tolerance,
        timer,
        row_header=["n", "m", "x1", "x2", "y1", "y2", "lhs", "rhs", "abs_err"],
        rows=rows,
    )


def biangle_operator_selfadjoint(
    alpha,
    beta,
    h1: Callable,
    h2: Callable,
    pt_y: BianglePoint,
    npoints_outer: int = 10,
    npoints_inner: int = 10,
    tolerance: float = SELFADJOINT_TOLERANCE,
    label: str = "",
) -> VerificationReport:
    """<h1, K h2> against <K h1, h2>, each an independent 2D x 4D quadrature."""
    timer = Timer()
    K1 = biangle_operator(alpha, beta, pt_y, h1, npoints_inner)
    K2 = biangle_operator(alpha, beta, pt_y, h2, npoints_inner)
    left = biangle_inner(alpha, beta, h1, K2, npoints_outer)
    right = biangle_inner(alpha, beta, K1, h2, npoints_outer)
    return build_report(
        "biangle_selfadjoint",
        {"alpha": alpha, "beta": beta, "y1": pt_y.x1, "y2": pt_y.x2, "pair": label},
        f"{npoints_outer}^2 outer x {npoints_inner}^4 inner",
        [left],
        [right],
        tolerance,
        timer,
    )


def biangle_monomials(max_degree: int):
    """(labels, functions) of x1^a x2^b with a + b <= max_degree."""
    pairs = [(a, d - a) for d in range(max_degree + 1) for a in range(d + 1)]
    labels = [f"x1^{a}*x2^{b}" for a, b in pairs]
    funcs = [lambda x1, x2, a=a, b=b: np.asarray(x1, dtype=float) ** a * np.asarray(x2, dtype=float) ** b for a, b in pairs]
    return labels, funcs


def biangle_symmetry_matrix(
    alpha,
    beta,
    pt_y: BianglePoint,
    max_degree: int = 4,
    npoints_outer: int = 10,
    npoints_inner: int = 10,
    tolerance: float = SELFADJOINT_TOLERANCE,
    angle_param: float | None = None,
) -> VerificationReport:
    """Largest |<h_i, K h_j> - <K h_i, h_j>| over monomials of total degree <= max_degree.

    Entry (i, j) integrates h_i K h_j and entry (j, i) integrates h_j K h_i,
    so each ordering is its own quadrature of a different integrand.
    """
    timer = Timer()
    labels, funcs = biangle_monomials(max_degree)
    rule = biangle_measure(alpha, beta).tensor_rule(npoints_outer)
    rho, s = rule.nodes[:, 0], rule.nodes[:, 1]
    x1, x2 = rho * rho, rho * s
    H = np.stack([f(x1, x2) for f in funcs])
    KH = np.stack([biangle_operator(alpha, beta, pt_y, f, npoints_inner, angle_param)(x1, x2) for f in funcs])
    M = (H * rule.weights) @ KH.T
    iu = np.triu_indices(len(funcs), 1)
    rows = [[labels[i], labels[j], M[i, j], M[j, i], abs(M[i, j] - M[j, i])] for i, j in zip(*iu)]
    return build_report(
        "biangle_symmetry",
        {"alpha": alpha, "beta": beta, "max_degree": max_degree, "y1": pt_y.x1, "y2": pt_y.x2},
        f"{len(funcs)} monomials, {npoints_outer}^2 outer x {npoints_inner}^4 inner",
        M[iu],
        M.T[iu],
        tolerance,
        timer,
        row_header=["h_i", "h_j", "<h_i,K h_j>", "<K h_i,h_j>", "abs_err"],
        rows=rows,
    )


def biangle_preservation(
    alpha,
    beta,
    pt_y: BianglePoint,
    degree: int,
    npoints: int = 12,
    tolerance: float = PRESERVATION_TOLERANCE,
) -> VerificationReport:
    """Coefficients of K(x1^a x2^b), a + b = degree, on basis elements of degree above ``degree``.

    The expansion uses the biangle basis up to degree + 2, normalised by
    quadrature; every coefficient beyond ``degree`` must vanish.
    """
    timer = Timer()
    rule = biangle_measure(alpha, beta).tensor_rule(npoints)
    rho, s = rule.nodes[:, 0], rule.nodes[:, 1]
    x1, x2 = rho * rho, rho * s
    high = []
    for i in biangle_indices(degree + 2):
        if i.degree > degree:
            v = _biangle_factors(alpha, beta, i, rho, s, "orthonormal")
            high.append((i, v / math.sqrt(float(rule.weights @ (v * v)))))
    coeffs, rows = [], []
    for a in range(degree + 1):
        b = degree - a
        Kh = biangle_operator(alpha, beta, pt_y, lambda u, v, a=a, b=b: u**a * v**b, npoints)
        kv = Kh(x1, x2) * rule.weights
        for i, basis in high:
            c = float(kv @ basis)
            coeffs.append(c)
            rows.append([a, b, i.n, i.m, c])
    return build_report(
        "biangle_preservation",
        {"alpha": alpha, "beta": beta, "degree": degree, "y1": pt_y.x1, "y2": pt_y.x2},
        f"monomials x1^a x2^b with a+b={degree}, basis to degree {degree + 2}",
        np.zeros(len(coeffs)),
        coeffs,
        tolerance,
        timer,
        row_header=["a", "b", "n", "m", "coefficient"],
        rows=rows,
    )


def biangle_evaluation_limit(
    alpha, beta, pt_y: BianglePoint, h: Callable, steps=(1e-1, 1e-2, 1e-3, 1e-4, 1e-6), npoints: int = 16
):
    """(K_y h)(x) along x = (1 - e, 1 - e) approaching the corner (1, 1).

    Returns (steps, values, h(y), h(1, 1)).  At the corner E = y1 and
    G = y2 / y1, so the values tend to h(y); this equals h(1, 1) only when
    y is the corner itself.
    """
    Kh = biangle_operator(alpha, beta, pt_y, h, npoints)
    vals = np.array([float(Kh(1 - e, 1 - e)) for e in steps])
    one = np.array(1.0)
    return np.array(steps), vals, float(h(np.array(pt_y.x1), np.array(pt_y.x2))), float(h(one, one))


# ---------------------------------------------------------------- triangle polynomials


def _check_triangle_params(alpha, beta, gamma):
    if not (alpha > -1 and beta > -1 and gamma > -1):
        raise ParameterDomainError(f"triangle weight needs alpha, beta, gamma > -1, got ({alpha}, {beta}, {gamma})")


def _triangle_factors(alpha, beta, gamma, idx: TriangleIndex, x1, w):
    """R_{n,k}(x1, x1 w) for w = x2 / x1 in [0, 1]."""
    n, k = idx.n, idx.k
    radial = _jacobi(float(alpha), float(beta + gamma + 2 * k + 1), "value_one_at_one").table(n - k, 2 * x1 - 1)[n - k]
    inner = _jacobi(float(beta), float(gamma), "value_one_at_one").table(k, 2 * w - 1)[k]
    return radial * x1**k * inner


def triangle_values(alpha, beta, gamma, idx: TriangleIndex, x1, x2):
    """Vectorised R_{n,k}(x1, x2); raises ParameterDomainError outside the triangle.

    At x1 = 0 the continuous extension is used (x1^k kills the inner factor for k >= 1).
    """
    _check_triangle_params(alpha, beta, gamma)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if (
        not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2)))
        or np.any(x2 < -_EDGE)
        or np.any(x2 > x1 + _EDGE)
        or np.any(x1 > 1 + _EDGE)
    ):
        raise ParameterDomainError("point outside the triangle 0 <= x2 <= x1 <= 1")
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(x1 > 0, x2 / np.where(x1 > 0, x1, 1.0), 0.0)
    return _out(_triangle_factors(alpha, beta, gamma, idx, np.clip(x1, 0, 1), np.clip(w, 0, 1)))


def triangle_poly(alpha, beta, gamma, idx: TriangleIndex, x1, x2) -> float:
    """R_{n,k}^{alpha,beta,gamma}(x1, x2), value-normalised so R(1, 1) = 1."""
    return float(triangle_values(alpha, beta, gamma, idx, x1, x2))


def triangle_measure(alpha, beta, gamma) -> ProductMeasure:
    """Triangle weight as a probability measure on (x1, w) with x2 = x1 w."""
    _check_triangle_params(alpha, beta, gamma)
    return ProductMeasure(
        (Axis(alpha, beta + gamma + 1, "half", "x1"), Axis(beta, gamma, "half", "w"))
    )


def triangle_inner(alpha, beta, gamma, f: Callable, g: Callable, npoints: int = 24) -> float:
    def integrand(x1, w):
        return f(x1, x1 * w) * g(x1, x1 * w)

    return float(triangle_measure(alpha, beta, gamma).tensor_integrate(integrand, npoints))


def triangle_product_measure(alpha, beta, gamma) -> ProductMeasure:
    """Seven-axis measure on (r1, t1, r2, r3, t2, r4, t3).

    dm_{alpha, beta+gamma+1}(r1, t1) x nu(r2) x dm_{beta,gamma}(r3, t2) x dm_{beta,gamma}(r4, t3),
    where nu has density proportional to (1 - r2)^beta r2^(gamma - 1/2) on [0, 1].
    The first disk factor needs alpha > beta + gamma + 1, the others beta > gamma > -1/2.
    """
    if not (alpha > beta + gamma + 1):
        raise ParameterDomainError(
            f"triangle product measure needs alpha > beta + gamma + 1, got ({alpha}, {beta}, {gamma})"
        )
    if not (beta > gamma > -0.5):
        raise ParameterDomainError(f"triangle product measure needs beta > gamma > -1/2, got ({beta}, {gamma})")
    r1, t1 = disk_axes(alpha, beta + gamma + 1)
    r3, t2 = disk_axes(beta, gamma)
    # (1 - r2)^beta r2^(gamma - 1/2) is mu^{beta, gamma - 1/2} pushed to [0, 1]
    nu = Axis(beta, gamma - 0.5, "half", "r2")
    return ProductMeasure((r1, t1, nu, r3, t2, r3, t2))


def _triangle_image(x1, x2, y1, y2, r1, t1, r2, r3, t2, r4, t3):
    """(E, H) in square-root coordinates, broadcast over the integration nodes."""
    cx, cy = _co(x1), _co(y1)
    D1 = x1 * y1 + cx * cy * r1 * t1
    E = np.sqrt(np.maximum(D1 * D1 + (1 - x1 * x1) * (1 - y1 * y1) * r1 * r1 * (1 - t1 * t1), 0.0))
    C = np.clip(D1 / E, -1.0, 1.0)
    c_mix = np.sqrt(np.clip((1 - r2) * C * C + r2, 0.0, 1.0))
    u, v = x2 / x1, y2 / y1
    cu, cv = _co(u), _co(v)
    Z = np.sqrt(np.maximum(u * u * v * v + cu * cu * cv * cv * r3 * r3 + 2 * u * v * cu * cv * r3 * t2, 0.0))
    Z = np.minimum(Z, 1.0)
    cc, cz = _co(c_mix), _co(Z)
    H2 = c_mix * c_mix * Z * Z + cc * cc * cz * cz * r4 * r4 + 2 * c_mix * Z * cc * cz * r4 * t3
    return E, np.sqrt(np.clip(H2, 0.0, 1.0))


def random_triangle_pairs(count: int, seed: int, margin: float = 0.05):
    """Seeded interior point pairs of the triangle, away from the boundary by ``margin``."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < 2 * count:
        x1 = rng.uniform(margin, 1 - margin)
        pts.append(TrianglePoint(x1, x1 * rng.uniform(margin, 1 - margin)))
    return list(zip(pts[0::2], pts[1::2]))


def verify_triangle_product(
    alpha,
    beta,
    gamma,
    idx: TriangleIndex | list,
    pt_x: TrianglePoint | list,
    pt_y: TrianglePoint | list | None = None,
    integrator: str = "tensor",
    npoints: int = 12,
    log2_points: int = 24,
    seed: int = 0,
    replicates: int = 16,
    tolerance: float = TRIANGLE_TOLERANCE,
    sigmas: float = TRIANGLE_QMC_SIGMAS,
    cap: int | None = TRIANGLE_TENSOR_CAP,
) -> VerificationReport:
    """R(x1, x2) R(y1, y2) against the seven-fold integral of R(E^2, E^2 H^2).

    Points are given in triangle coordinates, so (E, H) are built from
    square roots of their entries.  ``integrator`` is "tensor" (npoints per
    axis, the outer axes looped) or "qmc" (scrambled Sobol, ``replicates``
    independent scrambles).  A tensor request larger than ``cap`` falls back
    to QMC and says so in the notes.  QMC passes when every error is within
    ``sigmas`` standard errors.
    """
    timer = Timer()
    integrator = integrator.lower()
    if integrator not in ("tensor", "qmc"):
        raise UsageError(f"integrator must be 'tensor' or 'qmc', got {integrator!r}")
    indices = idx if isinstance(idx, (list, tuple)) else [idx]
    if isinstance(pt_x, (list, tuple)):
        pairs = list(pt_x) if pt_y is None else list(zip(pt_x, pt_y))
    else:
        pairs = [(pt_x, pt_y)]
    meas = triangle_product_measure(alpha, beta, gamma)
    notes = [f"regime alpha > beta + gamma + 1 required for the r1 disk factor; here {alpha} > {beta + gamma + 1}"]
    if integrator == "tensor" and cap is not None and npoints**meas.dimension > cap:
        notes.append(f"tensor rule {npoints}^{meas.dimension} exceeds cap {cap}; fell back to QMC")
        integrator = "qmc"

    roots = []
    for px, py in pairs:
        x1, y1 = math.sqrt(px.x1), math.sqrt(py.x1)
        if x1 == 0.0 or y1 == 0.0:
            raise SingularInputError("the triangle product formula needs x1, y1 > 0")
        roots.append((x1, math.sqrt(px.x2), y1, math.sqrt(py.x2)))

    def f(*coords):
        # one pass over the nodes serves every pair; rows are pair-major
        out = []
        for x1, x2, y1, y2 in roots:
            E, H = _triangle_image(x1, x2, y1, y2, *coords)
            E2, H2 = E * E, H * H
            out += [_triangle_factors(alpha, beta, gamma, i, E2, H2) for i in indices]
        return np.stack(out)

    if integrator == "tensor":
        vals = meas.tensor_integrate(f, npoints, split=3)
        se = np.zeros(len(vals))
    else:
        vals, se = meas.qmc_integrate(f, log2_points, seed=seed, replicates=replicates, chunk=2**15)
    lhs, rhs, errs, rows = [], [], [], []
    for pnum, (px, py) in enumerate(pairs):
        for j, i in enumerate(indices):
            k = pnum * len(indices) + j
            left = triangle_poly(alpha, beta, gamma, i, px.x1, px.x2) * triangle_poly(alpha, beta, gamma, i, py.x1, py.x2)
            lhs.append(left)
            rhs.append(float(vals[k]))
            errs.append(float(se[k]))
            rows.append([i.n, i.k, px.x1, px.x2, py.x1, py.x2, left, float(vals[k]), abs(left - float(vals[k])), float(se[k])])
    checks = []
    tol = tolerance
    if integrator == "qmc":
        z = np.abs(np.array(lhs) - np.array(rhs)) / np.maximum(np.array(errs), 1e-300)
        checks.append(Check("max_error_in_standard_errors", float(z.max()), sigmas))
        # every entry must sit within `sigmas` of its own standard error
        tol = sigmas * float(max(errs))
        grid = f"2^{log2_points} scrambled Sobol points, {replicates} scrambles, seed {seed}"
    else:
        grid = f"{npoints}^{meas.dimension} tensor"
    rep = build_report(
        "triangle_product",
        {"alpha": alpha, "beta": beta, "gamma": gamma, "max_n": max(i.n for i in indices), "integrator": integrator},
        f"{len(pairs)} pairs x {len(indices)} indices, {grid}",
        lhs,
        rhs,
        tol,
        timer,
        checks=checks,
        notes=notes,
        row_header=["n", "k", "x1", "x2", "y1", "y2", "lhs", "rhs", "abs_err", "std_err"],
        rows=rows,
    )
    return rep
