"""Correlation operators, their matrices in orthonormal Jacobi bases, and eigenvalue sequences.

Functions ``h`` passed to the apply routines must be vectorised: they receive
an array of arguments and return an array whose trailing dimensions match
it.  Extra leading dimensions are allowed (for instance a whole table of
polynomial degrees), and are carried through to the result.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ParameterDomainError, SingularInputError, UsageError
from .orthopoly import (
    JacobiParams,
    Normalization,
    PolynomialFamily,
    ratio_at_one,
    ultraspherical_family,
    ultraspherical_norm_constant,
)
from .quadrature import (
    QuadratureRule,
    SphereSampler,
    ball_rule,
    disk_rule,
    gauss_jacobi_rule,
    nu_exponent,
    spawn_seeds,
)
from .report import csv_text, fmt

__all__ = [
    "OperatorKind",
    "OperatorSpec",
    "OperatorMatrix",
    "MarkovSequence",
    "RadialFunction",
    "apply_Ka",
    "kernel_Ka",
    "apply_Ka0",
    "apply_Kal",
    "apply_ball_op",
    "ball_op_monte_carlo",
    "geometric_params",
    "geometric_params_one_fewer",
    "operator_matrix",
    "markov_sequence",
    "basis_family",
    "ratio_sequence",
]


class OperatorKind(enum.Enum):
    ULTRASPHERICAL_KA = "UltrasphericalKa"
    GASPER_KA0 = "GasperKa0"
    GENERALIZED_KAL = "GeneralizedKal"
    BALL_KA = "BallKa"


@dataclass(frozen=True)
class OperatorSpec:
    kind: OperatorKind
    a: float
    gamma: float | None = None
    alpha: float | None = None
    beta: float | None = None
    ell: int = 0
    m: int | None = None
    N: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", OperatorKind(self.kind))
        if not -1.0 <= self.a <= 1.0:
            raise ParameterDomainError(f"a must lie in [-1, 1], got {self.a}")
        k = self.kind
        if k is OperatorKind.ULTRASPHERICAL_KA:
            if self.gamma is None or not self.gamma > 0:
                raise ParameterDomainError(f"K_a needs gamma > 0, got {self.gamma}")
        elif k in (OperatorKind.GASPER_KA0, OperatorKind.GENERALIZED_KAL):
            if self.alpha is None or self.beta is None or not (self.alpha > self.beta > -0.5):
                raise ParameterDomainError(f"need alpha > beta > -1/2, got ({self.alpha}, {self.beta})")
            if k is OperatorKind.GASPER_KA0 and self.ell != 0:
                raise UsageError("GasperKa0 has ell = 0; use GeneralizedKal")
            if int(self.ell) != self.ell or self.ell < 0:
                raise ParameterDomainError(f"ell must be a non-negative integer, got {self.ell}")
        else:
            if self.m is None or self.N is None or not (self.m > 1 and self.N > 2):
                raise ParameterDomainError(f"ball operator needs m > 1, N > 2, got ({self.m}, {self.N})")

    @property
    def b(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.a * self.a))

    @property
    def is_markov(self) -> bool:
        return self.kind is not OperatorKind.GENERALIZED_KAL or self.ell == 0

    def jacobi_pair(self) -> tuple[float, float]:
        """(alpha, beta) of the disk measure used by the operator."""
        if self.kind is OperatorKind.BALL_KA:
            p = geometric_params(self.m, self.N)
            return p.alpha, p.beta
        return self.alpha, self.beta

    def basis_params(self) -> JacobiParams:
        """Parameters of the Jacobi family diagonalising the operator."""
        if self.kind is OperatorKind.ULTRASPHERICAL_KA:
            return JacobiParams(self.gamma - 0.5, self.gamma - 0.5)
        al, be = self.jacobi_pair()
        return JacobiParams(al, be + self.ell)

    def param_dict(self) -> dict:
        d = {"kind": self.kind.value, "a": self.a}
        for key in ("gamma", "alpha", "beta", "m", "N"):
            v = getattr(self, key)
            if v is not None:
                d[key] = v
        if self.kind is OperatorKind.GENERALIZED_KAL:
            d["ell"] = self.ell
        return d


@lru_cache(maxsize=256)
def _family(alpha: float, beta: float, norm: Normalization) -> PolynomialFamily:
    return PolynomialFamily(JacobiParams(alpha, beta), norm)


@lru_cache(maxsize=256)
def _jacobi_rule(alpha: float, beta: float, n: int) -> QuadratureRule:
    return gauss_jacobi_rule(JacobiParams(alpha, beta), n)


@lru_cache(maxsize=64)
def _disk(alpha: float, beta: float, n_r: int, n_t: int) -> QuadratureRule:
    return disk_rule(alpha, beta, n_r, n_t)


def basis_family(spec: OperatorSpec, normalization=Normalization.ORTHONORMAL) -> PolynomialFamily:
    p = spec.basis_params()
    return _family(p.alpha, p.beta, Normalization(normalization))


def _contract(vals, weights):
    """Sum the trailing node axis of vals against weights (broadcast)."""
    return np.sum(vals * weights, axis=-1)


# ---------------------------------------------------------------------------
# ultraspherical correlation operator


def _check_inner_rule(rule: QuadratureRule, gamma: float):
    # mu^{(gamma - 1/2)} has E[s^2] = 1/(2 gamma + 1) and E[s] = 0
    if rule.dimension != 1:
        raise UsageError("K_a needs a one-dimensional rule")
    s = rule.nodes[:, 0]
    m1 = float(rule.weights @ s)
    m2 = float(rule.weights @ s**2)
    if abs(rule.mass - 1) > 1e-10 or abs(m1) > 1e-10 or abs(m2 - 1.0 / (2 * gamma + 1)) > 1e-10:
        raise UsageError(f"quadrature rule is not a rule for mu^(gamma-1/2) with gamma={gamma}")


def apply_Ka(spec: OperatorSpec, h: Callable, t, rule: QuadratureRule | None = None, npoints: int = 64):
    """K_a h(t) = integral of h(a t + s b sqrt(1 - t^2)) against mu^{(gamma - 1/2)}(ds)."""
    if spec.kind is not OperatorKind.ULTRASPHERICAL_KA:
        raise UsageError("apply_Ka needs an UltrasphericalKa spec")
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1):
        raise ParameterDomainError("t must lie in [-1, 1]")
    g = spec.gamma
    if rule is None:
        rule = _jacobi_rule(g - 1.0, g - 1.0, npoints)
    else:
        _check_inner_rule(rule, g)
    s = rule.nodes[:, 0]
    x = spec.a * t[..., None] + spec.b * np.sqrt(1.0 - t[..., None] ** 2) * s
    out = _contract(np.asarray(h(x)), rule.weights)
    return float(out) if np.ndim(out) == 0 else out


def kernel_Ka(gamma: float, a: float, t, u, relative_to: str = "lebesgue"):
    """Symmetric kernel of the bilinear form of K_a.

    With ``relative_to="lebesgue"``, <K_a f, g> in L^2(mu^{(gamma)}) is the
    integral of g(t) f(u) kernel(t, u) du dt over [-1, 1]^2.  With
    ``relative_to="product"`` the kernel is the density against
    mu^{(gamma)}(dt) mu^{(gamma)}(du), so that K_a f(t) is the integral of
    f(u) kernel(t, u) mu^{(gamma)}(du).
    """
    if not gamma > 0:
        raise ParameterDomainError(f"kernel needs gamma > 0, got {gamma}")
    if not abs(a) < 1:
        raise ParameterDomainError(f"kernel needs |a| < 1, got {a}")
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    const = ultraspherical_norm_constant(gamma) * ultraspherical_norm_constant(gamma - 0.5)
    q = (1.0 - a * a) - (u * u + t * t - 2.0 * a * t * u)
    pos = q > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(pos, np.where(pos, q, 1.0) ** (gamma - 1.0), 0.0)
    out = const * val / (1.0 - a * a) ** (gamma - 0.5)
    if relative_to == "product":
        cg = ultraspherical_norm_constant(gamma)
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = cg * cg * ((1 - t * t) * (1 - u * u)) ** (gamma - 0.5)
            out = np.where(out > 0, out / dens, 0.0)
    elif relative_to != "lebesgue":
        raise UsageError(f"unknown kernel reference measure {relative_to!r}")
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Gasper-type operators on the disk measure m_{alpha, beta}


def _disk_default(alpha, beta, rule, n):
    if rule is None:
        return _disk(float(alpha), float(beta), n, n)
    if rule.dimension != 2:
        raise UsageError("the disk operators need a two-dimensional (r, cos theta) rule")
    return rule


def _disk_argument(a, t, r, c):
    b2 = 1.0 - a * a
    b = math.sqrt(max(b2, 0.0))
    tt = t[..., None]
    return a * a * (1 + tt) - 1 + b2 * (1 - tt) * r * r + 2 * a * b * r * np.sqrt(np.maximum(1 - tt * tt, 0.0)) * c


def apply_Ka0(alpha: float, beta: float, a: float, h: Callable, t, rule: QuadratureRule | None = None, npoints: int = 64):
    """K_{a,0} h(t): h at a^2(1+t) - 1 + b^2(1-t) r^2 + 2abr sqrt(1-t^2) cos(theta), averaged over m_{alpha,beta}."""
    return apply_Kal(alpha, beta, 0, a, h, t, rule, npoints)


def _bracket(beta, ell, a, t, r, c):
    """Sum_j C(ell, j) a^(ell-j) (b r)^j ((1-t)/(1+t))^(j/2) P_j^{(beta)}(cos theta)."""
    if ell == 0:
        return np.ones(np.broadcast_shapes(t[..., None].shape, r.shape))
    b = math.sqrt(max(0.0, 1 - a * a))
    q = np.sqrt((1 - t) / (1 + t))[..., None]
    P = ultraspherical_family(beta, Normalization.VALUE_ONE_AT_ONE).table(ell, c)
    out = 0.0
    for j in range(ell + 1):
        out = out + math.comb(ell, j) * a ** (ell - j) * (b * r * q) ** j * P[j]
    return out


def apply_Kal(
    alpha: float,
    beta: float,
    ell: int,
    a: float,
    h: Callable,
    t,
    rule: QuadratureRule | None = None,
    npoints: int = 64,
):
    """K_{a,ell} h(t) as a quadrature over m_{alpha,beta} in (r, cos theta)."""
    if not alpha > beta > -0.5:
        raise ParameterDomainError(f"need alpha > beta > -1/2, got ({alpha}, {beta})")
    if int(ell) != ell or ell < 0:
        raise ParameterDomainError("ell must be a non-negative integer")
    ell = int(ell)
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1):
        raise ParameterDomainError("t must lie in [-1, 1]")
    if ell > 0 and np.any(t == -1.0):
        raise SingularInputError("K_{a,ell} with ell > 0 is singular at t = -1")
    rule = _disk_default(alpha, beta, rule, npoints)
    r, c = rule.nodes[:, 0], rule.nodes[:, 1]
    x = _disk_argument(a, t, r, c)
    w = rule.weights * _bracket(beta, ell, a, t, r, c)
    out = _contract(np.asarray(h(x)), w)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# ball operator


def geometric_params(m: int, N: int) -> JacobiParams:
    """Jacobi parameters of the radial part of L^2(nu_{m,N}).

    nu_{m,N} has density proportional to (1 - |v|^2)^((m(N-1)-2)/2) on the
    unit ball of R^m; with u = |v|^2 the radial law is the Jacobi weight
    (1 - u)^alpha u^beta with the values returned here.
    """
    if not (m > 1 and N > 2):
        raise ParameterDomainError(f"need m > 1 and N > 2, got ({m}, {N})")
    return JacobiParams(nu_exponent(m, N), (m - 2) / 2.0)


def geometric_params_one_fewer(m: int, N: int) -> JacobiParams:
    """alpha = (m(N-2)-2)/2, the radial exponent of nu_{m,N-1}.

    This is the conditional measure of the second velocity, not the marginal
    of the first; Monte Carlo on the sphere rejects it as the parameter map.
    """
    if not (m > 1 and N > 2):
        raise ParameterDomainError(f"need m > 1 and N > 2, got ({m}, {N})")
    return JacobiParams((m * (N - 2) - 2) / 2.0, (m - 2) / 2.0)


@dataclass(frozen=True)
class RadialFunction:
    """f(v) = h(2|v|^2 - 1), declared radial so the ball operator can reduce to K_{a,0}."""

    h: Callable

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return self.h(2.0 * np.sum(v * v, axis=-1) - 1.0)


def _ball_points(v, m):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != m:
        raise UsageError(f"points must have last dimension m={m}")
    if np.any(np.sum(v * v, axis=-1) > 1 + 1e-15):
        raise ParameterDomainError("|v| must not exceed 1")
    return v


def ball_op_monte_carlo(m: int, N: int, a: float, f: Callable, v, samples: int = 10**6, seed: int = 0, chunks: int = 16):
    """Monte Carlo estimate of the ball operator at one point v, with its standard error.

    y ~ nu_{m,N-1} is drawn as the first m coordinates of a uniform point on
    S^{m(N-1)-1}.  Samples are split into fixed chunks with spawned seeds so
    the result does not depend on how chunks are scheduled.
    """
    spec = OperatorSpec(OperatorKind.BALL_KA, a, m=m, N=N)
    v = _ball_points(v, m)
    if v.ndim != 1:
        raise UsageError("Monte Carlo mode evaluates one point at a time")
    d = m * (N - 1)
    scale = spec.b * math.sqrt(max(0.0, 1 - float(v @ v)))
    sizes = [samples // chunks + (1 if i < samples % chunks else 0) for i in range(chunks)]
    total = 0.0
    total_sq = 0.0
    for seq, k in zip(spawn_seeds(seed, chunks), sizes):
        y = SphereSampler(d, seq).sample(k)[:, :m]
        vals = np.asarray(f(a * v + scale * y), dtype=float)
        total += vals.sum()
        total_sq += (vals * vals).sum()
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return mean, math.sqrt(var / (samples - 1))


def apply_ball_op(m: int, N: int, a: float, f: Callable, v, mode: str = "auto", samples: int = 10**6, seed: int = 0):
    """Ball operator at v.

    ``mode`` is "MonteCarlo", "RadialReduction" or "auto" (radial reduction
    when ``f`` is a RadialFunction, Monte Carlo otherwise).
    """
    if mode == "auto":
        mode = "RadialReduction" if isinstance(f, RadialFunction) else "MonteCarlo"
    if mode == "RadialReduction":
        if not isinstance(f, RadialFunction):
            raise UsageError("radial reduction needs f declared as a RadialFunction")
        v = _ball_points(v, m)
        p = geometric_params(m, N)
        t = 2.0 * np.sum(v * v, axis=-1) - 1.0
        return apply_Ka0(p.alpha, p.beta, a, f.h, np.clip(t, -1.0, 1.0))
    if mode == "MonteCarlo":
        return ball_op_monte_carlo(m, N, a, f, v, samples, seed)[0]
    raise UsageError(f"unknown ball operator mode {mode!r}")


# ---------------------------------------------------------------------------
# matrices and eigenvalue sequences


@dataclass(frozen=True)
class OperatorMatrix:
    spec: OperatorSpec
    dim: int
    entries: np.ndarray
    basis: PolynomialFamily
    nodes_per_axis: int = 0

    @property
    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.T)))

    @property
    def off_diagonal_max(self) -> float:
        off = self.entries - np.diag(np.diag(self.entries))
        return float(np.max(np.abs(off))) if self.dim > 1 else 0.0

    @property
    def below_diagonal_max(self) -> float:
        return float(np.max(np.abs(np.tril(self.entries, -1)))) if self.dim > 1 else 0.0

    def first_column_defect(self) -> float:
        e0 = np.zeros(self.dim)
        e0[0] = 1.0
        return float(np.max(np.abs(self.entries[:, 0] - e0)))

    def to_csv(self) -> str:
        head = ["row"] + [f"c{j}" for j in range(self.dim)]
        meta = " ".join(f"{k}={fmt(v)}" for k, v in self.spec.param_dict().items())
        body = csv_text(head, ([i] + list(self.entries[i]) for i in range(self.dim)))
        return f"# {meta}\n" + body


def _exact_endpoint_matrix(spec, dim):
    lam = markov_sequence(spec, dim - 1, "Formula").lambdas
    return np.diag(lam)


def _ka_values(spec: OperatorSpec, fam: PolynomialFamily, dim: int, t: np.ndarray, n: int) -> np.ndarray:
    """(dim, len(t)) array of K p_j at the nodes t, for the chosen operator."""
    h = lambda x: fam.table(dim - 1, x)  # noqa: E731
    if spec.kind is OperatorKind.ULTRASPHERICAL_KA:
        return apply_Ka(spec, h, t, npoints=n)
    if spec.kind is OperatorKind.BALL_KA:
        return _ball_radial_values(spec, fam, dim, t, n)
    return apply_Kal(spec.alpha, spec.beta, spec.ell, spec.a, h, t, _disk(float(spec.alpha), float(spec.beta), n, n))


def _ball_radial_values(spec, fam, dim, t, n):
    # evaluate the ball operator on radial polynomials with a deterministic ball
    # rule for y ~ nu_{m,N-1}, at v = s e_1 with 2 s^2 - 1 = t
    m, N = spec.m, spec.N
    # degree 2(dim-1) in y: dim + 4 nodes per axis is exact
    rule = ball_rule(m, nu_exponent(m, N - 1), dim + 4)
    y = rule.nodes
    s = np.sqrt((1 + t) / 2)
    out = np.empty((dim, t.size))
    for i, si in enumerate(s):
        w = spec.b * math.sqrt(max(0.0, 1 - si * si)) * y
        w[:, 0] += spec.a * si
        x = 2 * np.sum(w * w, axis=1) - 1
        out[:, i] = fam.table(dim - 1, x) @ rule.weights
    return out


def operator_matrix(spec: OperatorSpec, dim: int, basis: PolynomialFamily | None = None, nodes: int | None = None) -> OperatorMatrix:
    """M_ij = <p_i, K p_j> in the orthonormal basis diagonalising K.

    Quadrature uses 2*dim + 16 nodes per axis unless ``nodes`` is given.
    The endpoints a = +-1 are returned exactly without quadrature.
    """
    if dim < 1:
        raise UsageError("dim must be positive")
    want = spec.basis_params()
    if basis is None:
        basis = basis_family(spec)
    elif basis.params != want:
        raise UsageError(f"basis {basis.params} does not match the operator's measure {want}")
    if basis.normalization is not Normalization.ORTHONORMAL:
        basis = basis.with_normalization(Normalization.ORTHONORMAL)
    n = nodes if nodes is not None else 2 * dim + 16
    if abs(spec.a) == 1.0:
        return OperatorMatrix(spec, dim, _exact_endpoint_matrix(spec, dim), basis, 0)
    outer = _jacobi_rule(want.alpha, want.beta, n)
    t = outer.nodes[:, 0]
    Kp = _ka_values(spec, basis, dim, t, n)
    P = basis.table(dim - 1, t)
    M = (P * outer.weights) @ Kp.T
    return OperatorMatrix(spec, dim, M, basis, n)


@dataclass(frozen=True)
class MarkovSequence:
    """Eigenvalue sequence of a correlation operator.

    For ell > 0 the operator is not positivity preserving and lambda_0 = a^ell,
    so the sequence is labelled a plain eigenvalue sequence.
    """

    lambdas: np.ndarray
    source: str
    label: str = "Markov sequence"

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        object.__setattr__(self, "lambdas", lam)
        if np.any(np.abs(lam) > 1 + 1e-9):
            raise ParameterDomainError("eigenvalues of a correlation operator lie in [-1, 1]")
        if self.label == "Markov sequence" and lam.size and abs(lam[0] - 1) > 1e-9:
            raise ParameterDomainError(f"a Markov sequence starts with 1, got {lam[0]}")


def markov_sequence(spec: OperatorSpec, nmax: int, source: str = "Formula") -> MarkovSequence:
    """lambda_0..lambda_nmax from the closed-form ratios or from the matrix diagonal."""
    if nmax < 0:
        raise UsageError("nmax must be non-negative")
    label = "Markov sequence" if spec.is_markov else "eigenvalue sequence (non-Markov operator)"
    if source == "Matrix":
        return MarkovSequence(np.diag(operator_matrix(spec, nmax + 1).entries).copy(), source, label)
    if source != "Formula":
        raise UsageError(f"unknown source {source!r}")
    n = np.arange(nmax + 1)
    a = spec.a
    if spec.kind is OperatorKind.ULTRASPHERICAL_KA:
        if a == -1.0:
            lam = np.where(n % 2 == 0, 1.0, -1.0)
        elif a == 1.0:
            lam = np.ones(nmax + 1)
        else:
            fam = basis_family(spec)
            lam = fam.table(nmax, a) / np.array([fam.value_at_one(k) for k in n])
    else:
        fam = basis_family(spec)
        x = 2 * a * a - 1
        if abs(a) == 1.0:
            ratios = np.ones(nmax + 1)
        else:
            ratios = fam.table(nmax, x) / np.array([fam.value_at_one(k) for k in n])
        lam = a**spec.ell * ratios
    return MarkovSequence(lam, source, label)


def ratio_sequence(params: JacobiParams, nmax: int, x: float) -> np.ndarray:
    """p_n(x)/p_n(1) for n = 0..nmax."""
    fam = _family(params.alpha, params.beta, Normalization.ORTHONORMAL)
    return np.array([ratio_at_one(fam, k, x) for k in range(nmax + 1)])
