"""Quadrature rules and samplers for the probability measures in play.

Every one-dimensional factor is a Jacobi probability measure on [-1, 1]
pushed forward by a simple map (identity, x -> (1+x)/2, or
x -> sqrt((1+x)/2)).  Endpoint singularities of the densities therefore live
inside the Gauss-Jacobi weights and are never sampled pointwise.

Multi-dimensional rules store their nodes as an ``(npoints, dimension)``
array.  The disk measure m_{alpha,beta} is stored in the coordinates
``(r, cos(theta))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import betaincinv, gammaln
from scipy.stats import qmc

from .errors import NumericalError, ParameterDomainError, ResourceError, UsageError
from .orthopoly import JacobiParams, recurrence_coeffs

__all__ = [
    "QuadratureRule",
    "Axis",
    "ProductMeasure",
    "SphereSampler",
    "MarkovSequenceCoefficients",
    "gauss_jacobi_rule",
    "ultraspherical_rule",
    "disk_axes",
    "disk_rule",
    "ball_rule",
    "sphere_rule",
    "nu_exponent",
    "sphere_sample",
    "convolve_sequences",
    "tensor_rule",
    "spawn_seeds",
    "DEFAULT_TENSOR_CAP",
]

DEFAULT_TENSOR_CAP = 10**7
DEFAULT_1D_NODES = 64
DEFAULT_DISK_NODES = 64


@dataclass(frozen=True)
class QuadratureRule:
    """Positive-weight rule for a measure on R^dimension."""

    dimension: int
    nodes: np.ndarray
    weights: np.ndarray
    label: str = ""

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != (weights.size, self.dimension):
            raise UsageError(
                f"nodes of shape {nodes.shape} do not match {weights.size} weights in dimension {self.dimension}"
            )
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.weights.size

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def columns(self):
        return tuple(self.nodes[:, i] for i in range(self.dimension))

    def integrate(self, f: Callable) -> float:
        """Sum of weights * f(*columns); f must be vectorised."""
        vals = np.asarray(f(*self.columns()))
        return float(np.tensordot(vals, self.weights, axes=([-1], [0]))) if vals.ndim == 1 else np.tensordot(
            vals, self.weights, axes=([-1], [0])
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "dimension": self.dimension,
                "label": self.label,
                "nodes": self.nodes.tolist(),
                "weights": self.weights.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "QuadratureRule":
        d = json.loads(text)
        return cls(d["dimension"], np.array(d["nodes"]).reshape(-1, d["dimension"]), np.array(d["weights"]), d.get("label", ""))


def gauss_jacobi_rule(params: JacobiParams, npoints: int) -> QuadratureRule:
    """Golub-Welsch rule for the probability measure mu^{alpha,beta} on [-1, 1]."""
    if npoints < 1:
        raise UsageError("npoints must be at least 1")
    rec = recurrence_coeffs(params, npoints)
    try:
        x, vecs = eigh_tridiagonal(rec.a[:npoints], np.sqrt(rec.b[1:npoints]))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"tridiagonal eigensolver failed for {params} with {npoints} nodes: {exc}"
        ) from exc
    w = vecs[0] ** 2
    if not np.all(np.isfinite(x)) or np.any(w <= 0):
        raise NumericalError(f"degenerate Gauss rule for {params}, n={npoints}: min weight {w.min()}")
    # symmetric measures get exactly symmetric nodes so odd moments cancel to rounding
    if params.alpha == params.beta:
        x = 0.5 * (x - x[::-1])
        w = 0.5 * (w + w[::-1])
    w = w / w.sum()
    return QuadratureRule(1, x, w, label=f"gauss-jacobi({params.alpha},{params.beta})")


def ultraspherical_rule(gamma: float, npoints: int) -> QuadratureRule:
    """Gauss rule for mu^{(gamma)}, weight (1 - t^2)^(gamma - 1/2)."""
    return gauss_jacobi_rule(JacobiParams(gamma - 0.5, gamma - 0.5), npoints)


_MAPS = {
    "identity": (lambda x: x),
    "half": (lambda x: 0.5 * (1.0 + x)),
    "sqrt_half": (lambda x: np.sqrt(0.5 * (1.0 + x))),
}


@dataclass(frozen=True)
class Axis:
    """A Jacobi probability measure on [-1, 1] followed by a fixed map.

    ``half`` gives a Beta-type law on [0, 1]; ``sqrt_half`` gives a radius
    r whose square carries that Beta law.
    """

    alpha: float
    beta: float
    transform: str = "identity"
    name: str = ""

    def __post_init__(self):
        JacobiParams(self.alpha, self.beta)
        if self.transform not in _MAPS:
            raise UsageError(f"unknown axis transform {self.transform!r}")

    def rule(self, n: int):
        r = gauss_jacobi_rule(JacobiParams(self.alpha, self.beta), n)
        return _MAPS[self.transform](r.nodes[:, 0]), r.weights

    def ppf(self, u):
        """Inverse CDF; maps uniforms on (0, 1) to samples."""
        # (1 + x)/2 ~ Beta(beta + 1, alpha + 1)
        y = betaincinv(self.beta + 1.0, self.alpha + 1.0, np.asarray(u, dtype=float))
        return _MAPS[self.transform](2.0 * y - 1.0)


def disk_axes(alpha: float, beta: float) -> tuple[Axis, Axis]:
    """(r, cos theta) factors of dm_{alpha,beta}; needs alpha > beta > -1/2.

    With u = r^2 the radial density (1-r^2)^(alpha-beta-1) r^(2beta+1) dr
    becomes a Jacobi weight on [0, 1]; with t = cos(theta) the angular factor
    sin^(2beta) dtheta becomes (1 - t^2)^(beta - 1/2) dt.
    """
    if not (alpha > beta > -0.5):
        raise ParameterDomainError(f"dm_(alpha,beta) needs alpha > beta > -1/2, got ({alpha}, {beta})")
    return (
        Axis(alpha - beta - 1.0, beta, "sqrt_half", "r"),
        Axis(beta - 0.5, beta - 0.5, "identity", "cos_theta"),
    )


@dataclass(frozen=True)
class ProductMeasure:
    """Product of independent axes, integrated lazily by tensor Gauss rules or QMC."""

    axes: tuple

    @property
    def dimension(self):
        return len(self.axes)

    def tensor_rule(self, npoints, cap: int = DEFAULT_TENSOR_CAP) -> QuadratureRule:
        sizes = self._sizes(npoints)
        factors = [QuadratureRule(1, *ax.rule(n)) for ax, n in zip(self.axes, sizes)]
        return tensor_rule(factors, cap=cap)

    def _sizes(self, npoints):
        if np.isscalar(npoints):
            return [int(npoints)] * self.dimension
        sizes = [int(n) for n in npoints]
        if len(sizes) != self.dimension:
            raise UsageError("one node count per axis required")
        return sizes

    def tensor_integrate(self, f: Callable, npoints, split: int | None = None, cap: int | None = None):
        """Tensor Gauss integral of a vectorised f(*coords) without materialising the grid.

        The leading ``split`` axes are looped over; the remaining axes are
        evaluated as one broadcast block.  The reduction order is fixed.
        """
        sizes = self._sizes(npoints)
        total = math.prod(sizes)
        if cap is not None and total > cap:
            raise ResourceError(
                f"tensor rule would need {total} nodes (cap {cap}); use the QMC integrator instead"
            )
        rules = [ax.rule(n) for ax, n in zip(self.axes, sizes)]
        d = self.dimension
        if split is None:
            split = 0
            while split < d and math.prod(sizes[split:]) > 250_000:
                split += 1
        inner_nodes = np.meshgrid(*[r[0] for r in rules[split:]], indexing="ij")
        inner_w = _outer_weights([r[1] for r in rules[split:]])
        outer_idx = np.ndindex(*sizes[:split]) if split else [()]
        acc = None
        for idx in outer_idx:
            coords = [rules[i][0][j] for i, j in enumerate(idx)] + [g for g in inner_nodes]
            w_out = math.prod(rules[i][1][j] for i, j in enumerate(idx)) if idx else 1.0
            vals = np.asarray(f(*coords))
            part = w_out * np.tensordot(vals, inner_w, axes=inner_w.ndim)
            acc = part if acc is None else acc + part
        return acc

    def sample(self, u: np.ndarray):
        """Map a (n, dimension) array of uniforms to coordinates."""
        return [ax.ppf(u[:, i]) for i, ax in enumerate(self.axes)]

    def qmc_integrate(
        self,
        f: Callable,
        log2_points: int,
        seed: int,
        replicates: int = 8,
        chunk: int = 2**18,
    ):
        """Randomised QMC estimate with a standard error from independent scrambles.

        ``2**log2_points`` points are split evenly across ``replicates``
        scrambled Sobol sequences seeded from ``seed``.
        """
        if replicates < 2:
            raise UsageError("at least two replicates are needed for an error estimate")
        per = 2 ** log2_points // replicates
        m = int(round(math.log2(per)))
        if 2**m != per:
            raise UsageError("replicates must be a power of two not exceeding 2**log2_points")
        estimates = []
        for child in spawn_seeds(seed, replicates):
            eng = qmc.Sobol(self.dimension, scramble=True, seed=np.random.default_rng(child))
            acc = None
            done = 0
            while done < per:
                k = min(chunk, per - done)
                u = eng.random(k)
                vals = np.asarray(f(*self.sample(u)))
                s = vals.sum(axis=-1)
                acc = s if acc is None else acc + s
                done += k
            estimates.append(acc / per)
        est = np.array(estimates)
        return est.mean(axis=0), est.std(axis=0, ddof=1) / math.sqrt(replicates)


def _outer_weights(ws):
    out = np.ones(())
    for w in ws:
        out = np.multiply.outer(out, w)
    return out


def disk_rule(alpha: float, beta: float, n_r: int = DEFAULT_DISK_NODES, n_theta: int = DEFAULT_DISK_NODES) -> QuadratureRule:
    """Tensor Gauss rule for dm_{alpha,beta}(r, theta); nodes are (r, cos theta)."""
    rule = ProductMeasure(disk_axes(alpha, beta)).tensor_rule([n_r, n_theta])
    return QuadratureRule(2, rule.nodes, rule.weights, label=f"disk({alpha},{beta})")


def tensor_rule(rules: Sequence[QuadratureRule], cap: int = DEFAULT_TENSOR_CAP) -> QuadratureRule:
    """Product rule; the mass is the product of masses."""
    if not rules:
        raise UsageError("tensor_rule needs at least one factor")
    total = math.prod(len(r) for r in rules)
    if total > cap:
        raise ResourceError(
            f"tensor rule would need {total} nodes (cap {cap}); use the QMC integrator instead"
        )
    nodes = rules[0].nodes
    weights = rules[0].weights
    for r in rules[1:]:
        n0, n1 = len(weights), len(r)
        nodes = np.hstack([np.repeat(nodes, n1, axis=0), np.tile(r.nodes, (n0, 1))])
        weights = np.multiply.outer(weights, r.weights).ravel()
    return QuadratureRule(sum(r.dimension for r in rules), nodes, weights, label="tensor")


def sphere_rule(d: int, n: int) -> QuadratureRule:
    """Product rule for the uniform probability measure on S^{d-1} in R^d.

    Exact for polynomials of degree < n in each nested coordinate and
    trigonometric degree < 2n on the final circle.
    """
    if d < 2:
        raise UsageError("sphere dimension must be at least 2")
    if d == 2:
        phi = 2 * np.pi * (np.arange(2 * n) + 0.5) / (2 * n)
        return QuadratureRule(2, np.column_stack([np.cos(phi), np.sin(phi)]), np.full(2 * n, 1.0 / (2 * n)))
    lower = sphere_rule(d - 1, n)
    t_rule = ultraspherical_rule((d - 2) / 2.0, n)
    t = t_rule.nodes[:, 0]
    pts = np.concatenate(
        [np.sqrt(1 - t[:, None, None] ** 2) * lower.nodes[None, :, :], np.broadcast_to(t[:, None, None], (len(t), len(lower), 1))],
        axis=2,
    ).reshape(-1, d)
    w = np.multiply.outer(t_rule.weights, lower.weights).ravel()
    return QuadratureRule(d, pts, w, label=f"sphere({d})")


def ball_rule(m: int, kappa: float, n: int) -> QuadratureRule:
    """Rule for the probability measure proportional to (1 - |v|^2)^kappa dv on the unit ball of R^m."""
    if m < 1:
        raise UsageError("ball dimension must be positive")
    r_nodes, r_w = Axis(kappa, m / 2.0 - 1.0, "sqrt_half").rule(n)
    if m == 1:
        # radial law of |v|; attach both signs
        pts = np.concatenate([r_nodes, -r_nodes])[:, None]
        return QuadratureRule(1, pts, np.concatenate([r_w, r_w]) / 2.0)
    sph = sphere_rule(m, n)
    pts = (r_nodes[:, None, None] * sph.nodes[None, :, :]).reshape(-1, m)
    w = np.multiply.outer(r_w, sph.weights).ravel()
    return QuadratureRule(m, pts, w, label=f"ball({m},{kappa})")


def nu_exponent(m: int, N: int) -> float:
    """Exponent of (1 - |v|^2) in the ball marginal nu_{m,N} of sigma on S^{mN-1}."""
    return (m * (N - 1) - 2) / 2.0


def spawn_seeds(seed: int, count: int):
    """Deterministic child seeds; the splitting rule is numpy's SeedSequence.spawn."""
    return np.random.SeedSequence(int(seed)).spawn(count)


class SphereSampler:
    """Uniform points on S^{d-1} from normalised standard Gaussian vectors."""

    def __init__(self, d: int, seed: int | np.random.SeedSequence):
        if d < 2:
            raise UsageError("sphere sampling needs d >= 2")
        self.d = d
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def sample(self, count: int) -> np.ndarray:
        g = self._rng.standard_normal((count, self.d))
        return g / np.linalg.norm(g, axis=1, keepdims=True)


def sphere_sample(sampler: SphereSampler, count: int) -> np.ndarray:
    return sampler.sample(count)


@dataclass(frozen=True)
class MarkovSequenceCoefficients:
    """lambda_0 = 1 and |lambda_n| <= 1."""

    lambdas: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise UsageError("a Markov sequence is a non-empty 1-d array")
        if abs(lam[0] - 1.0) > 1e-12:
            raise ParameterDomainError(f"lambda_0 must be 1, got {lam[0]}")
        if np.any(np.abs(lam) > 1 + 1e-12):
            raise ParameterDomainError("Markov sequence entries must lie in [-1, 1]")
        object.__setattr__(self, "lambdas", lam)

    def __len__(self):
        return self.lambdas.size


def convolve_sequences(a: MarkovSequenceCoefficients, b: MarkovSequenceCoefficients) -> MarkovSequenceCoefficients:
    """Coefficients of the convolution of two measures: the termwise product."""
    if len(a) != len(b):
        raise UsageError(f"sequence lengths differ: {len(a)} vs {len(b)}")
    return MarkovSequenceCoefficients(a.lambdas * b.lambdas)


def log_sphere_area(d: int) -> float:
    """log |S^{d-1}|, the surface area of the unit sphere in R^d."""
    return math.log(2.0) + (d / 2.0) * math.log(math.pi) - gammaln(d / 2.0)
