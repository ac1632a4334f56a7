"""Jacobi and ultraspherical polynomials on [-1, 1].

All families are orthogonal for the *probability* measure

    dmu^{a,b}(x) = c_{a,b} (1 - x)^a (1 + x)^b dx,

and are evaluated with the forward three-term recurrence.  Three
normalizations are supported: orthonormal in L^2(mu^{a,b}) (lower-case p_n),
value one at x = 1 (upper-case P_n), and monic.

The ultraspherical family with parameter g is the Jacobi family with
a = b = g - 1/2, so that P_n^{(g)} is proportional to the Gegenbauer C_n^g.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln

from .errors import ParameterDomainError, UsageError

__all__ = [
    "Normalization",
    "JacobiParams",
    "RecurrenceTable",
    "PolynomialFamily",
    "NormalizationConstants",
    "jacobi_norm_constant",
    "ultraspherical_norm_constant",
    "normalization_constants",
    "recurrence_coeffs",
    "evaluate",
    "ratio_at_one",
    "ultraspherical",
    "ultraspherical_family",
    "jacobi_family",
]

DEFAULT_MAX_DEGREE = 256


class Normalization(enum.Enum):
    ORTHONORMAL = "orthonormal"
    VALUE_ONE_AT_ONE = "value_one_at_one"
    MONIC = "monic"


@dataclass(frozen=True)
class JacobiParams:
    """Exponents of the Jacobi weight (1 - x)^alpha (1 + x)^beta."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ParameterDomainError("Jacobi parameters must be finite")
        if self.alpha <= -1 or self.beta <= -1:
            raise ParameterDomainError(
                f"Jacobi parameters need alpha > -1 and beta > -1, got ({self.alpha}, {self.beta})"
            )

    @property
    def gasper_regime(self) -> bool:
        """True when point evaluations give extremal Markov sequences."""
        a, b = self.alpha, self.beta
        return (a >= b and b > -0.5) or (a > b and b == -0.5)


def jacobi_norm_constant(alpha: float, beta: float) -> float:
    """c_{a,b} making c (1-x)^a (1+x)^b dx a probability measure on [-1, 1]."""
    JacobiParams(alpha, beta)
    return math.exp(-(alpha + beta + 1) * math.log(2.0) - betaln(alpha + 1, beta + 1))


def ultraspherical_norm_constant(gamma: float) -> float:
    """c_g = Gamma(g + 1) / (sqrt(pi) Gamma(g + 1/2)) for the weight (1 - t^2)^(g - 1/2)."""
    if gamma <= -0.5:
        raise ParameterDomainError(f"ultraspherical parameter must exceed -1/2, got {gamma}")
    return math.exp(gammaln(gamma + 1) - gammaln(gamma + 0.5)) / math.sqrt(math.pi)


@dataclass(frozen=True)
class NormalizationConstants:
    c_gamma: float
    c_alpha_beta: float


def normalization_constants(gamma: float, alpha: float, beta: float) -> NormalizationConstants:
    return NormalizationConstants(
        c_gamma=ultraspherical_norm_constant(gamma),
        c_alpha_beta=jacobi_norm_constant(alpha, beta),
    )


@dataclass(frozen=True)
class RecurrenceTable:
    """Monic recurrence pi_{k+1} = (x - a_k) pi_k - b_k pi_{k-1}.

    ``a[k]`` and ``b[k]`` are stored for k = 0..max_degree; ``b[0]`` is the
    total mass of the measure (1 here).
    """

    params: JacobiParams
    a: np.ndarray
    b: np.ndarray

    @property
    def max_degree(self) -> int:
        return len(self.a) - 1


def recurrence_coeffs(params: JacobiParams, max_degree: int) -> RecurrenceTable:
    if max_degree < 0:
        raise UsageError("max_degree must be non-negative")
    al, be = float(params.alpha), float(params.beta)
    s = al + be
    k = np.arange(max_degree + 1, dtype=float)
    a = np.empty(max_degree + 1)
    b = np.empty(max_degree + 1)
    a[0] = (be - al) / (s + 2)
    b[0] = 1.0
    if max_degree >= 1:
        kk = k[1:]
        a[1:] = (be * be - al * al) / ((2 * kk + s) * (2 * kk + s + 2))
        # k = 1 written with the (k + a + b) factor cancelled; it vanishes when a + b = -1
        b[1] = 4 * (1 + al) * (1 + be) / ((2 + s) ** 2 * (3 + s))
    if max_degree >= 2:
        kk = k[2:]
        t = 2 * kk + s
        b[2:] = 4 * kk * (kk + al) * (kk + be) * (kk + s) / (t * t * (t + 1) * (t - 1))
    return RecurrenceTable(params, a, b)


class PolynomialFamily:
    """Jacobi family for one parameter pair in one normalization.

    The recurrence table is extended on demand when ``extend`` is true;
    otherwise asking for a degree beyond ``max_degree`` raises UsageError.
    """

    def __init__(
        self,
        params: JacobiParams,
        normalization: Normalization = Normalization.ORTHONORMAL,
        max_degree: int = DEFAULT_MAX_DEGREE,
        extend: bool = True,
    ):
        self.params = params
        self.normalization = Normalization(normalization)
        self.extend = extend
        self._set_table(max_degree)

    def _set_table(self, max_degree):
        self.recurrence = recurrence_coeffs(self.params, max_degree)
        sq = np.sqrt(self.recurrence.b)
        self._sqrt_b = sq
        # orthonormal values at x = 1 and leading coefficients
        self._at_one = self._orthonormal_table(max_degree, np.array(1.0))
        with np.errstate(over="ignore"):
            self._log_lead = -np.concatenate([[0.0], np.cumsum(np.log(sq[1:]))])

    @property
    def max_degree(self) -> int:
        return self.recurrence.max_degree

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def beta(self) -> float:
        return self.params.beta

    def __repr__(self):
        return (
            f"PolynomialFamily(alpha={self.alpha!r}, beta={self.beta!r}, "
            f"normalization={self.normalization.value})"
        )

    def _ensure(self, n):
        if n <= self.max_degree:
            return
        if not self.extend:
            raise UsageError(f"degree {n} exceeds cached maximum {self.max_degree}")
        self._set_table(max(n, 2 * self.max_degree))

    def _orthonormal_table(self, n, x):
        a, sb = self.recurrence.a, self._sqrt_b
        out = np.empty((n + 1,) + x.shape)
        out[0] = 1.0
        if n >= 1:
            out[1] = (x - a[0]) / sb[1]
        for k in range(1, n):
            out[k + 1] = ((x - a[k]) * out[k] - sb[k] * out[k - 1]) / sb[k + 1]
        return out

    def table(self, n: int, x) -> np.ndarray:
        """Values of degrees 0..n at x; shape (n + 1,) + shape(x)."""
        if n < 0:
            raise UsageError("degree must be non-negative")
        self._ensure(n)
        x = np.asarray(x, dtype=float)
        vals = self._orthonormal_table(n, x)
        scale = self._scale(n)
        return vals * scale.reshape((-1,) + (1,) * x.ndim)

    def _scale(self, n):
        if self.normalization is Normalization.ORTHONORMAL:
            return np.ones(n + 1)
        if self.normalization is Normalization.VALUE_ONE_AT_ONE:
            return 1.0 / self._at_one[: n + 1]
        return np.exp(-self._log_lead[: n + 1])

    def iter_blocks(self, x, block: int, n_stop: int):
        """Yield (start, values) with values of degrees start..start+block-1 at x.

        The forward recurrence runs once across blocks, so streaming to high
        degree costs the same as a single table.
        """
        self._ensure(n_stop)
        x = np.asarray(x, dtype=float)
        a, sb = self.recurrence.a, self._sqrt_b
        prev = np.zeros_like(x)
        cur = np.ones_like(x)
        k = 0
        while k < n_stop:
            m = min(block, n_stop - k)
            out = np.empty((m,) + x.shape)
            for i in range(m):
                out[i] = cur
                deg = k + i
                nxt = ((x - a[deg]) * cur - sb[deg] * prev) / sb[deg + 1]
                prev, cur = cur, nxt
            yield k, out * self._scale(k + m - 1)[k:].reshape((-1,) + (1,) * x.ndim)
            k += m

    def __call__(self, n: int, x):
        return evaluate(self, n, x)

    def value_at_one(self, n: int) -> float:
        """p_n(1) in this family's normalization."""
        self._ensure(n)
        return float(self._at_one[n] * self._scale(n)[n])

    def leading_coefficient(self, n: int) -> float:
        self._ensure(n)
        return float(np.exp(self._log_lead[n]) * self._scale(n)[n])

    def norm_squared(self, n: int) -> float:
        """<p_n, p_n> in L^2(mu^{alpha,beta}) for this normalization."""
        self._ensure(n)
        return float(self._scale(n)[n] ** 2)

    def with_normalization(self, normalization: Normalization) -> "PolynomialFamily":
        return PolynomialFamily(self.params, normalization, self.max_degree, self.extend)


def evaluate(family: PolynomialFamily, n: int, x):
    """Degree-n member of ``family`` at x (scalar or array)."""
    vals = family.table(n, x)[n]
    return float(vals) if vals.ndim == 0 else vals


def ratio_at_one(family: PolynomialFamily, n: int, x):
    """p_n(x) / p_n(1); independent of the normalization of ``family``."""
    family._ensure(n)
    x = np.asarray(x, dtype=float)
    vals = family._orthonormal_table(n, x)[n] / family._at_one[n]
    return float(vals) if vals.ndim == 0 else vals


def jacobi_family(alpha, beta, normalization=Normalization.ORTHONORMAL, max_degree=DEFAULT_MAX_DEGREE):
    return PolynomialFamily(JacobiParams(alpha, beta), normalization, max_degree)


def ultraspherical_family(gamma, normalization=Normalization.ORTHONORMAL, max_degree=DEFAULT_MAX_DEGREE):
    """Jacobi family with alpha = beta = gamma - 1/2 (needs gamma > -1/2)."""
    if gamma <= -0.5:
        raise ParameterDomainError(f"ultraspherical parameter must exceed -1/2, got {gamma}")
    return PolynomialFamily(JacobiParams(gamma - 0.5, gamma - 0.5), normalization, max_degree)


def ultraspherical(gamma: float, n: int, x, normalization=Normalization.VALUE_ONE_AT_ONE):
    if gamma <= 0:
        raise ParameterDomainError(f"ultraspherical evaluation needs gamma > 0, got {gamma}")
    return evaluate(ultraspherical_family(gamma, normalization, max(n, 1)), n, x)
