"""Offset Rademacher complexity toolkit for square-loss regression.

Two-step Star estimator, geometric inequality audits, exact and Monte Carlo
offset suprema, chaining bounds, covers and critical radii.
"""
from .chaining import (
    ChainingBound,
    CoverResult,
    GreedyEntropy,
    LipschitzEntropy,
    PowerEntropy,
    chaining_bound,
    chaining_tail_bound,
    dudley_integral,
    fit_tail_constant,
    greedy_cover,
    star_cover_construct,
    sum_class_cover,
)
from .core import (
    DesignSample,
    EvaluatedFunction,
    FiniteDictionary,
    LinearClass,
    SegmentFamily,
    StarHullClass,
    difference_star_hull,
    empirical_inner,
    empirical_norm,
    evaluate,
    shifted_star_class,
    zero_class,
)
from .estimators import StarFitResult, erm_finite, erm_linear, segment_minimize, star_estimator
from .geometry import (
    DEFAULT_C,
    ExcessLossDecomposition,
    GeomAuditReport,
    audit_geometric_inequality,
    corollary2_decomposition,
)
from .offset import (
    CriticalRadiusResult,
    FiniteSupportLaw,
    GaussianLaw,
    LocalizedLinear,
    LocalizedSegments,
    OffsetEstimate,
    critical_radius,
    finite_class_bound,
    isometry_check,
    offset_mc,
    offset_sup,
    offset_tail_check,
    restriction_identity,
)

__version__ = "0.1.0"

__all__ = [
    "ChainingBound", "CoverResult", "GreedyEntropy", "LipschitzEntropy", "PowerEntropy",
    "chaining_bound", "chaining_tail_bound", "dudley_integral", "fit_tail_constant",
    "greedy_cover", "star_cover_construct", "sum_class_cover",
    "DesignSample", "EvaluatedFunction", "FiniteDictionary", "LinearClass", "SegmentFamily",
    "StarHullClass", "difference_star_hull", "empirical_inner", "empirical_norm", "evaluate",
    "shifted_star_class", "zero_class",
    "StarFitResult", "erm_finite", "erm_linear", "segment_minimize", "star_estimator",
    "DEFAULT_C", "ExcessLossDecomposition", "GeomAuditReport", "audit_geometric_inequality",
    "corollary2_decomposition",
    "CriticalRadiusResult", "FiniteSupportLaw", "GaussianLaw", "LocalizedLinear",
    "LocalizedSegments", "OffsetEstimate", "critical_radius", "finite_class_bound",
    "isometry_check", "offset_mc", "offset_sup", "offset_tail_check", "restriction_identity",
]
