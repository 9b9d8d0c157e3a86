"""Exact performance analysis for decision-level sensor fusion.

The static layer (:mod:`seqfusion.fusion_core`, :mod:`seqfusion.fusion_rules`)
composes per-sensor confusion matrices through a fusion graph. The dynamic
layer (:mod:`seqfusion.seq_engine`) computes exact stopping-time
distributions of a multi-stage truncated Wald sequential test.
"""

from seqfusion.confusion import ConfusionMatrix
from seqfusion.fusion_core import (
    FusionNetwork,
    InvalidNetworkError,
    NetworkStructureError,
    ValidationReport,
    Vertex,
    VertexKind,
    Violation,
    fusion_order,
    propagate,
    validate_network,
)
from seqfusion.fusion_rules import (
    RuleKind,
    RuleSpec,
    RuleTensor,
    build_bayes_rule,
    build_fixed_rule,
    build_np_rule,
    build_rule,
    fuse,
)
from seqfusion.seq_engine import (
    AtomSet,
    Frontier,
    MultiStageReport,
    MultiStageTest,
    PathAtom,
    StageModel,
    StageReport,
    TargetOperatingPoint,
    Thresholds,
    advance,
    coalesce,
    expected_stopping_time,
    growth_base,
    run_multistage,
    wald_bound_diagnostic,
    wald_thresholds,
)

__version__ = "0.1.0"

__all__ = [
    "AtomSet",
    "ConfusionMatrix",
    "Frontier",
    "FusionNetwork",
    "InvalidNetworkError",
    "MultiStageReport",
    "MultiStageTest",
    "NetworkStructureError",
    "PathAtom",
    "RuleKind",
    "RuleSpec",
    "RuleTensor",
    "StageModel",
    "StageReport",
    "TargetOperatingPoint",
    "Thresholds",
    "ValidationReport",
    "Vertex",
    "VertexKind",
    "Violation",
    "advance",
    "build_bayes_rule",
    "build_fixed_rule",
    "build_np_rule",
    "build_rule",
    "coalesce",
    "expected_stopping_time",
    "fuse",
    "fusion_order",
    "growth_base",
    "propagate",
    "run_multistage",
    "validate_network",
    "wald_bound_diagnostic",
    "wald_thresholds",
]
