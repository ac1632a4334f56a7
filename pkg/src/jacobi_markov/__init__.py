"""Markov sequences of Jacobi-type correlation operators and their product formulas."""

from .errors import (
    JacobiMarkovError,
    NumericalError,
    ParameterDomainError,
    ResourceError,
    SingularInputError,
    UsageError,
)
from .operators import (
    MarkovSequence,
    OperatorKind,
    OperatorMatrix,
    OperatorSpec,
    apply_ball_op,
    apply_Ka,
    apply_Ka0,
    apply_Kal,
    geometric_params,
    markov_sequence,
    operator_matrix,
)
from .orthopoly import (
    JacobiParams,
    Normalization,
    PolynomialFamily,
    jacobi_family,
    normalization_constants,
    recurrence_coeffs,
    ultraspherical,
    ultraspherical_family,
)
from .quadrature import QuadratureRule, disk_rule, gauss_jacobi_rule, ultraspherical_rule
from .report import VerificationReport

__all__ = [
    "JacobiMarkovError",
    "NumericalError",
    "ParameterDomainError",
    "ResourceError",
    "SingularInputError",
    "UsageError",
    "MarkovSequence",
    "OperatorKind",
    "OperatorMatrix",
    "OperatorSpec",
    "apply_ball_op",
    "apply_Ka",
    "apply_Ka0",
    "apply_Kal",
    "geometric_params",
    "markov_sequence",
    "operator_matrix",
    "JacobiParams",
    "Normalization",
    "PolynomialFamily",
    "jacobi_family",
    "normalization_constants",
    "recurrence_coeffs",
    "ultraspherical",
    "ultraspherical_family",
    "QuadratureRule",
    "disk_rule",
    "gauss_jacobi_rule",
    "ultraspherical_rule",
    "VerificationReport",
]
