"""Lipschitz extensions with side constraints.

Finite-data extension engines for vector-valued 1-Lipschitz maps, the sharp
drift bound ``sqrt(delta^2 + 2 delta d_v(A, B))`` together with the instances
attaining it, and checks for the K-function inequality.
"""

from ._backend import BACKEND
from .core import (
    UNBOUNDED,
    AffineMap,
    ExtensionReport,
    LabeledMap,
    PartialMap,
    d_v,
    forced_segment_value,
    is_unbounded,
    lipschitz_constant,
    sup_distance,
    verify_lipschitz,
)
from .errors import (
    BudgetViolatedOnA,
    ConstructionError,
    DidNotConverge,
    DomainError,
    LipextError,
    MissingTargetValue,
    ModeInapplicable,
    NoDefect,
    NotAnExtension,
    NotLipschitzInput,
    NotMajorized,
    NotPseudoLipschitz,
    NumericalFailure,
    OffGraphPoint,
    SolverInfeasible,
    TargetNotAffineContraction,
)
from .extend import (
    ExtensionRequest,
    ExtensionResult,
    OrderPolicy,
    clamped_scalar_extend,
    hull_constrained_extend,
    kirszbraun_extend,
    lifted_extend,
    majorized_extend,
    onedim_extend,
    report,
)
from .kfunction import KFunctionSpec, SimplexWeights, Verdict, al_inequality, check_kfunction, kfunction_gap
from .minmax import BallSystem, FeasibilityResult, HullConstraint, Status, brute_force_oracle, hull_distance, solve
from .pseudometric import (
    DirectionSpec,
    GridField,
    PseudoMetricGraph,
    build_graph,
    check_pseudo_lipschitz,
    geodesic_convexity_defect,
)
from .sharpness import (
    Mode,
    nonaffine_counterexample,
    sharp_bound,
    triangle,
    triangle_family,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "UNBOUNDED",
    "AffineMap",
    "BallSystem",
    "BudgetViolatedOnA",
    "ConstructionError",
    "DidNotConverge",
    "DirectionSpec",
    "DomainError",
    "ExtensionReport",
    "ExtensionRequest",
    "ExtensionResult",
    "FeasibilityResult",
    "GridField",
    "HullConstraint",
    "KFunctionSpec",
    "LabeledMap",
    "LipextError",
    "MissingTargetValue",
    "Mode",
    "ModeInapplicable",
    "NoDefect",
    "NotAnExtension",
    "NotLipschitzInput",
    "NotMajorized",
    "NotPseudoLipschitz",
    "NumericalFailure",
    "OffGraphPoint",
    "OrderPolicy",
    "PartialMap",
    "PseudoMetricGraph",
    "SimplexWeights",
    "SolverInfeasible",
    "Status",
    "TargetNotAffineContraction",
    "Verdict",
    "al_inequality",
    "brute_force_oracle",
    "build_graph",
    "check_kfunction",
    "check_pseudo_lipschitz",
    "clamped_scalar_extend",
    "d_v",
    "forced_segment_value",
    "geodesic_convexity_defect",
    "hull_constrained_extend",
    "hull_distance",
    "is_unbounded",
    "kfunction_gap",
    "kirszbraun_extend",
    "lifted_extend",
    "lipschitz_constant",
    "majorized_extend",
    "nonaffine_counterexample",
    "onedim_extend",
    "report",
    "sharp_bound",
    "solve",
    "sup_distance",
    "triangle",
    "triangle_family",
    "verify_lipschitz",
]
